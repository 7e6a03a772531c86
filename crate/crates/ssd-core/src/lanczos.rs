//! Krylov approximation of `A^(1/2) x` for implicit symmetric PSD operators.
//!
//! Used to draw correlated Gaussian noise: if `eps ~ N(0, I)` then
//! `A^(1/2) eps ~ N(0, A)` without ever materializing A.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Result, SsdError};
use crate::rng;

/// Free parameters of the Lanczos iteration.
#[derive(Debug, Clone, Copy)]
pub struct LanczosConfig {
    pub max_iters: usize,
    pub reorthogonalize: bool,
    /// Floor applied to Ritz values before the square root. Tiny negative
    /// values only arise from rounding at the PSD boundary.
    pub eig_floor: f64,
    /// Relative tolerance on the change of the result vector.
    pub tol: f64,
}

impl Default for LanczosConfig {
    fn default() -> Self {
        Self {
            max_iters: 32,
            reorthogonalize: true,
            eig_floor: 0.0,
            tol: 1e-6,
        }
    }
}

impl LanczosConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(SsdError::Parameter("max_iters must be >= 1".into()));
        }
        if self.eig_floor < 0.0 {
            return Err(SsdError::Parameter("eig_floor must be >= 0".into()));
        }
        Ok(())
    }
}

/// Randomized symmetry check of the operator contract: `<u, A v> = <A u, v>`
/// to 1e-8 relative for one fixed pseudo-random pair.
pub fn check_symmetry<F>(apply: &F, dim: usize) -> Result<()>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let mut r = rng::stream(0x5f_4c_41_4e, 0, dim as u64, 0);
    let u: Vec<f64> = (0..dim)
        .map(|_| r.sample::<f64, _>(StandardNormal))
        .collect();
    let v: Vec<f64> = (0..dim)
        .map(|_| r.sample::<f64, _>(StandardNormal))
        .collect();
    let av = apply(&v);
    let au = apply(&u);
    let uav: f64 = u.iter().zip(&av).map(|(a, b)| a * b).sum();
    let auv: f64 = au.iter().zip(&v).map(|(a, b)| a * b).sum();
    let scale = norm(&u) * norm(&av) + norm(&au) * norm(&v);
    if (uav - auv).abs() > 1e-8 * scale.max(f64::MIN_POSITIVE) {
        return Err(SsdError::Parameter(format!(
            "operator is not symmetric: <u,Av>={uav} vs <Au,v>={auv}"
        )));
    }
    Ok(())
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Approximates `A^(1/2) x` via the Lanczos tridiagonalization.
///
/// Returns `Q f(T_k) (||x|| e1)` where `T_k` is the Lanczos tridiagonal and
/// `f` takes the square root of the (floored) eigenvalues. Stops when the
/// iterate changes by less than `cfg.tol` in relative norm, at breakdown
/// (which means the Krylov space is exhausted and the result is exact), or
/// at `cfg.max_iters`.
pub fn lanczos_sqrt_apply<F>(apply: F, x: &[f64], cfg: &LanczosConfig) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    cfg.validate()?;
    let dim = x.len();
    let beta0 = norm(x);
    if beta0 == 0.0 {
        return Ok(vec![0.0; dim]);
    }
    check_symmetry(&apply, dim)?;

    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(cfg.max_iters);
    basis.push(DVector::from_column_slice(x) / beta0);
    let mut alphas: Vec<f64> = Vec::with_capacity(cfg.max_iters);
    let mut betas: Vec<f64> = Vec::with_capacity(cfg.max_iters);
    let mut y_prev: Option<DVector<f64>> = None;

    for k in 0..cfg.max_iters {
        let q_k = basis[k].clone();
        let mut w = DVector::from_vec(apply(q_k.as_slice()));
        let alpha = q_k.dot(&w);
        w -= &q_k * alpha;
        if k > 0 {
            w -= &basis[k - 1] * betas[k - 1];
        }
        if cfg.reorthogonalize {
            for q in &basis {
                let c = q.dot(&w);
                w -= q * c;
            }
        }
        alphas.push(alpha);
        let beta = w.norm();

        let y = evaluate(&basis, &alphas, &betas, beta0, cfg.eig_floor);
        let breakdown = beta <= 1e-12 * alphas.iter().fold(1.0f64, |m, a| m.max(a.abs()));
        let converged = y_prev
            .as_ref()
            .map(|p| (&y - p).norm() <= cfg.tol * y.norm().max(f64::MIN_POSITIVE))
            .unwrap_or(false);
        if breakdown || converged || k + 1 == cfg.max_iters {
            return Ok(y.as_slice().to_vec());
        }
        y_prev = Some(y);
        betas.push(beta);
        basis.push(w / beta);
    }
    unreachable!("loop always returns at k = max_iters - 1");
}

/// `beta0 * Q V f(Lambda) V^T e1` for the current tridiagonal.
fn evaluate(
    basis: &[DVector<f64>],
    alphas: &[f64],
    betas: &[f64],
    beta0: f64,
    eig_floor: f64,
) -> DVector<f64> {
    let k = alphas.len();
    let mut tri = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        tri[(i, i)] = alphas[i];
        if i + 1 < k {
            tri[(i, i + 1)] = betas[i];
            tri[(i + 1, i)] = betas[i];
        }
    }
    let eig = nalgebra::SymmetricEigen::new(tri);
    // coeffs = V sqrt(Lambda) V^T e1 * beta0
    let v_row0 = eig.eigenvectors.row(0).transpose();
    let scaled = DVector::from_iterator(
        k,
        eig.eigenvalues
            .iter()
            .zip(v_row0.iter())
            .map(|(lam, v0)| lam.max(eig_floor).max(0.0).sqrt() * v0 * beta0),
    );
    let coeffs = &eig.eigenvectors * scaled;
    let mut y = DVector::zeros(basis[0].len());
    for (q, c) in basis.iter().zip(coeffs.iter()) {
        y += q * *c;
    }
    y
}
