//! Self-contained oracle suite behind the `verify` CLI subcommand.
//!
//! Each check re-derives its expected values through an independent dense
//! route (probed matrices, eigendecompositions, scalar algebra) and compares
//! the implicit implementation against it. Deterministic given the seed.

use nalgebra::{DMatrix, DVector};

use crate::denoiser::OracleDenoiser;
use crate::error::Result;
use crate::lanczos::{lanczos_sqrt_apply, LanczosConfig};
use crate::linops::{materialize_dense, resize_op};
use crate::process::DiffusionProcess;
use crate::rng;
use crate::sampler::{sample_chain, ChainOptions};
use crate::schedules::{NoiseSchedule, ResolutionSchedule, ScheduleKind};
use crate::tensor::Tensor;

/// Outcome of one named invariant check.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    /// Worst observed error, in the check's own units.
    pub error: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, error: f64, tolerance: f64, detail: String) -> Self {
        Self {
            name,
            pass: error <= tolerance,
            error,
            tolerance,
            detail,
        }
    }
}

fn three_level_process(res: usize, channels: usize, t_max: usize) -> Result<DiffusionProcess> {
    let levels = [res / 4, res / 2, res];
    let ns = NoiseSchedule::linear_default(t_max)?;
    let rs = ResolutionSchedule::new(ScheduleKind::Equal, 1.0, &levels, t_max)?;
    DiffusionProcess::new(ns, rs, channels)
}

/// Adjoint identity on random (x, v) pairs across resize shapes.
pub fn check_adjoint_identity(seed: u64, trials: usize) -> Result<Check> {
    let mut worst = 0.0f64;
    let mut r = rng::stream(seed, 0, 0, 10);
    for (res_in, res_out) in [(8usize, 4usize), (16, 8), (32, 16), (16, 16)] {
        let op = resize_op(1, res_in, res_out, 0.9, 0.95)?;
        for _ in 0..trials {
            let x = Tensor::standard_normal(op.in_shape(), &mut r);
            let v = Tensor::standard_normal(op.out_shape(), &mut r);
            let lhs = v.dot(&op.apply(&x)?)?;
            let rhs = op.adjoint(&v)?.dot(&x)?;
            let scale = (x.norm() * v.norm()).max(f64::MIN_POSITIVE);
            worst = worst.max((lhs - rhs).abs() / scale);
        }
    }
    Ok(Check::new(
        "adjoint-identity",
        worst,
        1e-8,
        format!("{trials} pairs per shape, 4 shapes"),
    ))
}

/// Posterior equivalence: the Woodbury-simplified mean/covariance against
/// the unsimplified precision-form posterior, densely, at every transition.
pub fn check_woodbury_equivalence(seed: u64) -> Result<Check> {
    let p = three_level_process(8, 1, 48)?;
    let mut r = rng::stream(seed, 0, 0, 11);
    let mut worst = 0.0f64;
    let transitions = p.resolution().transition_steps();
    for &t in &transitions {
        let op = p.step_operator(t)?;
        let d = materialize_dense(&op)?;
        let n_lo = op.in_shape().numel();
        let n_hi = op.out_shape().numel();
        let s_lo2 = p.noise().sigma(t - 1).powi(2);
        let s_hi2 = p.noise().sigma(t).powi(2);

        // Unsimplified: Sigma = (Sigma_lo^-1 + D^T Sigma_trans^-1 D)^-1.
        let trans = DMatrix::<f64>::identity(n_hi, n_hi) * s_hi2 - &d * d.transpose() * s_lo2;
        let trans_inv = trans
            .clone()
            .try_inverse()
            .expect("transition cov invertible");
        let prec = DMatrix::<f64>::identity(n_lo, n_lo) / s_lo2 + d.transpose() * &trans_inv * &d;
        let cov_unsimplified = prec
            .clone()
            .try_inverse()
            .expect("posterior precision invertible");

        // Simplified: Sigma = s_lo2 I - (s_lo2^2 / s_hi2) D^T D.
        let cov_simplified = DMatrix::<f64>::identity(n_lo, n_lo) * s_lo2
            - d.transpose() * &d * (s_lo2 * s_lo2 / s_hi2);
        worst = worst.max((&cov_unsimplified - &cov_simplified).abs().max());

        // Means: implicit route vs dense unsimplified route, random inputs.
        for _ in 0..5 {
            let x_t = Tensor::standard_normal(op.out_shape(), &mut r);
            let mu = Tensor::standard_normal(op.in_shape(), &mut r);
            let params = p.posterior_params(&x_t, &mu, t)?;
            let xv = DVector::from_column_slice(x_t.data());
            let mv = DVector::from_column_slice(mu.data());
            let mean_dense = &cov_unsimplified * (&mv / s_lo2 + d.transpose() * &trans_inv * &xv);
            for (a, b) in params.mean.data().iter().zip(mean_dense.iter()) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    Ok(Check::new(
        "posterior-woodbury-equivalence",
        worst,
        1e-8,
        format!("transitions at t = {transitions:?}, 1x8x8 base"),
    ))
}

/// Lanczos square root against the dense eigendecomposition route.
pub fn check_lanczos_vs_eigen(seed: u64) -> Result<Check> {
    let p = three_level_process(8, 1, 48)?;
    let t = *p
        .resolution()
        .transition_steps()
        .last()
        .expect("has transitions");
    let mut r = rng::stream(seed, 0, 0, 12);
    let x_t = Tensor::standard_normal(p.shape_at(t), &mut r);
    let mu = Tensor::standard_normal(p.shape_at(t - 1), &mut r);
    let params = p.posterior_params(&x_t, &mu, t)?;

    let op = params.operator();
    let d = materialize_dense(op)?;
    let n = op.in_shape().numel();
    let a_dense = DMatrix::<f64>::identity(n, n) - d.transpose() * &d * params.rho;
    let eig = nalgebra::SymmetricEigen::new(a_dense);
    let sqrt_a = &eig.eigenvectors
        * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0).sqrt()))
        * eig.eigenvectors.transpose();

    let cfg = LanczosConfig::default();
    let shape = p.shape_at(t - 1);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let x = Tensor::standard_normal(shape, &mut r);
        let y = lanczos_sqrt_apply(
            |v: &[f64]| {
                let vt = Tensor::from_vec(shape, v.to_vec()).unwrap();
                params.unit_cov_apply(&vt).unwrap().into_data()
            },
            x.data(),
            &cfg,
        )?;
        let want = &sqrt_a * DVector::from_column_slice(x.data());
        let err = (DVector::from_column_slice(&y) - &want).norm() / want.norm();
        worst = worst.max(err);
    }
    Ok(Check::new(
        "lanczos-vs-dense-eigen",
        worst,
        1e-4,
        format!("posterior factor at the 8->4 transition (t={t}), k<=32"),
    ))
}

/// Single-level posterior against the scalar textbook formulas at every t.
pub fn check_ddpm_collapse(seed: u64, t_max: usize) -> Result<Check> {
    let ns = NoiseSchedule::linear_default(t_max)?;
    let rs = ResolutionSchedule::single_level(8, t_max)?;
    let p = DiffusionProcess::new(ns, rs, 1)?;
    let mut r = rng::stream(seed, 0, 0, 13);
    let mut worst = 0.0f64;
    for t in 1..=t_max {
        let x0 = Tensor::standard_normal(p.shape_at(0), &mut r);
        let x_t = Tensor::standard_normal(p.shape_at(t), &mut r);
        let mu_prev = x0.scale(p.noise().signal_coeff(t - 1));
        let params = p.posterior_params(&x_t, &mu_prev, t)?;

        let ab_t = p.noise().alpha_bar(t);
        let ab_prev = p.noise().alpha_bar(t - 1);
        let beta = p.noise().beta(t);
        let alpha = p.noise().alpha(t);
        let want_mean = x_t
            .scale(alpha.sqrt() * (1.0 - ab_prev) / (1.0 - ab_t))
            .add(&x0.scale(ab_prev.sqrt() * beta / (1.0 - ab_t)))?;
        worst = worst.max(params.mean.max_abs_diff(&want_mean)?);
        let want_var = (1.0 - ab_prev) * beta / (1.0 - ab_t);
        worst = worst.max((params.scalar_variance().expect("scalar step") - want_var).abs());
    }
    Ok(Check::new(
        "ddpm-collapse",
        worst,
        1e-10,
        format!("single-level schedule, all t in [1, {t_max}]"),
    ))
}

/// Dense forward-composition identity at every step of a desk schedule.
pub fn check_forward_consistency() -> Result<Check> {
    let p = three_level_process(8, 1, 30)?;
    let mut worst = 0.0f64;
    for t in 1..=p.t_max() {
        let rep = p.forward_consistency_check(t)?;
        worst = worst.max(rep.mean_err.max(rep.cov_err));
    }
    Ok(Check::new(
        "forward-consistency",
        worst,
        1e-8,
        "3-level 1x8x8 schedule, T=30, all steps".into(),
    ))
}

/// Full reverse chain with the oracle denoiser reproduces the clean image.
pub fn check_oracle_reconstruction(seed: u64, t_max: usize) -> Result<Check> {
    let mut worst = 0.0f64;
    let mut detail = Vec::new();
    for (channels, res) in [(1usize, 8usize), (3, 16)] {
        let p = three_level_process(res, channels, t_max)?;
        let mut r = rng::stream(seed, channels as u64, 0, 14);
        let x0 = Tensor::standard_normal(p.shape_at(0), &mut r).clamp(-1.0, 1.0);
        let d = OracleDenoiser::new(x0.clone());
        let (out, _) = sample_chain(&p, &d, seed, 0, &ChainOptions::default())?;
        let err = out.max_abs_diff(&x0)?;
        detail.push(format!("{channels}x{res}x{res}: {err:.2e}"));
        worst = worst.max(err);
    }
    Ok(Check::new(
        "oracle-reconstruction",
        worst,
        1e-5,
        detail.join(", "),
    ))
}

/// Runs the whole suite.
pub fn run_suite(seed: u64) -> Result<Vec<Check>> {
    Ok(vec![
        check_adjoint_identity(seed, 100)?,
        check_woodbury_equivalence(seed)?,
        check_lanczos_vs_eigen(seed)?,
        check_ddpm_collapse(seed, 1000)?,
        check_forward_consistency()?,
        check_oracle_reconstruction(seed, 1000)?,
    ])
}
