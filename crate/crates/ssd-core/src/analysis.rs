//! Information-degradation curves, the backtracking-timestep formula, and
//! empirical covariance diagnostics.
//!
//! The timestep curve measures the expected fraction of signal-dominated
//! pixels under a uniform clean-pixel model:
//!
//!   info(t) = 1 - 2 * integral_0^1 Phi(-s(t) x) dx,
//!
//! with `s(t) = a_t / sigma_t` and Phi the standard normal CDF. The
//! resolution curve is the area fraction `info(r) = r^2` on a normalized
//! resolution axis.

use nalgebra::DMatrix;

use crate::error::{Result, SsdError};
use crate::schedules::NoiseSchedule;
use crate::tensor::Tensor;

/// Default Simpson sample count for the info integral.
pub const DEFAULT_QUAD_POINTS: usize = 512;

/// Which axis an information curve is parameterized by.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InfoAxis {
    Timestep,
    Resolution,
}

/// A monotone information curve: (coordinate, value in [0, 1]) points.
#[derive(Debug, Clone)]
pub struct InfoCurve {
    pub axis: InfoAxis,
    pub points: Vec<(f64, f64)>,
}

/// Standard normal CDF via the complementary error function.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Composite Simpson rule on [a, b] with n intervals (n made even).
fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, n: usize) -> f64 {
    let n = if n.is_multiple_of(2) { n } else { n + 1 };
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + k as f64 * h);
    }
    acc * h / 3.0
}

/// `1 - 2 * integral_0^1 Phi(-s x) dx` by composite Simpson quadrature with
/// `quad_points` intervals per panel.
///
/// The integrand is constant outside a boundary layer of width ~8/s, so for
/// large s the rule splits there and resolves each side separately; one
/// uniform panel would need thousands of points at large s for the same
/// accuracy.
pub fn info_value(s: f64, quad_points: usize) -> Result<f64> {
    if quad_points < 16 {
        return Err(SsdError::Parameter("need at least 16 quad points".into()));
    }
    if s.is_infinite() {
        return Ok(1.0);
    }
    if s.is_nan() || s < 0.0 {
        return Err(SsdError::Parameter(format!("snr coefficient {s} invalid")));
    }
    let f = |x: f64| normal_cdf(-s * x);
    let integral = if s > 8.0 {
        let split = 8.0 / s;
        simpson(&f, 0.0, split, quad_points) + simpson(&f, split, 1.0, quad_points)
    } else {
        simpson(&f, 0.0, 1.0, quad_points)
    };
    Ok(1.0 - 2.0 * integral)
}

/// Information curve over timesteps t = 0..=T.
///
/// t = 0 has sigma = 0 (infinite SNR) and contributes the exact limit 1.
pub fn info_t_curve(ns: &NoiseSchedule, quad_points: usize) -> Result<InfoCurve> {
    let mut points = Vec::with_capacity(ns.t_max() + 1);
    for t in 0..=ns.t_max() {
        let s = if t == 0 {
            f64::INFINITY
        } else {
            ns.signal_coeff(t) / ns.sigma(t)
        };
        points.push((t as f64, info_value(s, quad_points)?));
    }
    Ok(InfoCurve {
        axis: InfoAxis::Timestep,
        points,
    })
}

/// Information curve over normalized resolution: (r, r^2) on a uniform grid.
pub fn info_r_curve(points: usize) -> Result<InfoCurve> {
    if points < 2 {
        return Err(SsdError::Parameter("need at least 2 grid points".into()));
    }
    let pts = (0..points)
        .map(|i| {
            let r = i as f64 / (points - 1) as f64;
            (r, r * r)
        })
        .collect();
    Ok(InfoCurve {
        axis: InfoAxis::Resolution,
        points: pts,
    })
}

/// Finds the timestep s >= t whose alpha_bar best satisfies
/// `c = alpha_bar_s (1 - alpha_bar_t) / (alpha_bar_t (1 - alpha_bar_s))`,
/// i.e. the noisier time to roll back to after an upsampling correction.
///
/// Returns the chosen s and the c it actually achieves. Errors if even the
/// best candidate is off by more than a factor of two.
pub fn backtrack_timestep(ns: &NoiseSchedule, t: usize, c: f64) -> Result<(usize, f64)> {
    if !(c > 0.0 && c <= 0.25) {
        return Err(SsdError::Parameter(format!(
            "c must lie in (0, 0.25], got {c}"
        )));
    }
    if t < 1 || t > ns.t_max() {
        return Err(SsdError::Parameter(format!("t={t} out of range")));
    }
    let achieved = |s: usize| {
        let ab_t = ns.alpha_bar(t);
        let ab_s = ns.alpha_bar(s);
        ab_s * (1.0 - ab_t) / (ab_t * (1.0 - ab_s))
    };
    // achieved(s) decreases in s, from 1 at s = t; exhaustive scan.
    let mut best = (t, achieved(t));
    for s in t..=ns.t_max() {
        let a = achieved(s);
        if (a - c).abs() < (best.1 - c).abs() {
            best = (s, a);
        }
    }
    if best.1 > 2.0 * c || best.1 < 0.5 * c {
        return Err(SsdError::NotFound(format!(
            "no timestep in [{t}, {}] achieves c within a factor of 2 of {c} (best: s={} c={})",
            ns.t_max(),
            best.0,
            best.1
        )));
    }
    Ok(best)
}

/// Unbiased sample covariance over flattened tensors (dim x dim).
pub fn empirical_covariance(samples: &[Tensor]) -> Result<DMatrix<f64>> {
    if samples.len() < 2 {
        return Err(SsdError::Parameter("need at least 2 samples".into()));
    }
    let shape = samples[0].shape();
    let dim = shape.numel();
    if dim > crate::linops::DENSE_CAP {
        return Err(SsdError::Resource(format!(
            "covariance of {dim}-element tensors exceeds the dense cap"
        )));
    }
    for s in samples {
        if s.shape() != shape {
            return Err(SsdError::Shape("samples must share one shape".into()));
        }
    }
    let n = samples.len() as f64;
    let mut mean = vec![0.0; dim];
    for s in samples {
        for (m, v) in mean.iter_mut().zip(s.data()) {
            *m += v / n;
        }
    }
    let mut cov = DMatrix::<f64>::zeros(dim, dim);
    for s in samples {
        let d: Vec<f64> = s.data().iter().zip(&mean).map(|(v, m)| v - m).collect();
        for i in 0..dim {
            for j in 0..dim {
                cov[(i, j)] += d[i] * d[j];
            }
        }
    }
    Ok(cov / (n - 1.0))
}
