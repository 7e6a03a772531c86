//! Denoisers: predict the clean image at the next resolution r(t-1) from a
//! noisy state at r(t).
//!
//! The prediction target is the unscaled posterior-mean image
//! `M_{1:t-1} x_0 / a_(t-1)`, i.e. the clean image resized to r(t-1). An
//! [`OracleDenoiser`] computes it exactly from a known x_0 and is used to
//! validate the sampling chain independently of any learning; the trainable
//! stand-in lives in [`mlp`].

mod mlp;
mod routing;

pub use mlp::{
    gradient_check_10_params, load_checkpoint, save_checkpoint, synthetic_blobs, train_iter,
    AdamConfig, MlpConfig, MlpDenoiser, TrainState,
};
pub use routing::{chain_mac_total, plan_route, RoutingPlan, DEFAULT_CONV_KERNEL};

use rand::Rng;

use crate::error::{Result, SsdError};
use crate::process::DiffusionProcess;
use crate::schedules::ResolutionSchedule;
use crate::tensor::Tensor;

/// Predicts the clean image at resolution r(t-1) given the state at r(t).
pub trait Denoiser {
    fn predict(&self, process: &DiffusionProcess, x_t: &Tensor, t: usize) -> Result<Tensor>;
}

/// Denoiser that knows the true clean image and returns the exact target
/// `M_{1:t-1} x_0 / a_(t-1)`, ignoring the noisy input.
#[derive(Debug, Clone)]
pub struct OracleDenoiser {
    x0: Tensor,
}

impl OracleDenoiser {
    pub fn new(x0: Tensor) -> Self {
        Self { x0 }
    }

    pub fn clean_image(&self) -> &Tensor {
        &self.x0
    }
}

impl Denoiser for OracleDenoiser {
    fn predict(&self, process: &DiffusionProcess, _x_t: &Tensor, t: usize) -> Result<Tensor> {
        if t < 1 || t > process.t_max() {
            return Err(SsdError::Parameter(format!("t={t} out of range")));
        }
        if self.x0.shape() != process.shape_at(0) {
            return Err(SsdError::Shape(format!(
                "oracle image is {}, process wants {}",
                self.x0.shape(),
                process.shape_at(0)
            )));
        }
        let mu = process.cumulative_operator(t - 1)?.apply(&self.x0)?;
        Ok(mu.scale(1.0 / process.noise().signal_coeff(t - 1)))
    }
}

/// Draws a batch of timesteps that all share one (r(t), r(t-1)) pair.
///
/// One t is drawn uniformly from [1, T]. If step t changes resolution the
/// whole batch gets that same t (the batch must agree on both shapes). If it
/// preserves resolution, the batch is filled with uniform draws from the
/// resolution-preserving steps at the same level.
pub fn sample_timesteps_batch<R: Rng + ?Sized>(
    rs: &ResolutionSchedule,
    batch: usize,
    rng: &mut R,
) -> Vec<usize> {
    assert!(batch >= 1, "batch must be >= 1");
    let t_max = rs.t_max();
    let t = rng.random_range(1..=t_max);
    if rs.is_transition(t) {
        return vec![t; batch];
    }
    let pool: Vec<usize> = (1..=t_max)
        .filter(|&u| rs.resolution(u) == rs.resolution(t) && !rs.is_transition(u))
        .collect();
    (0..batch)
        .map(|_| pool[rng.random_range(0..pool.len())])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::materialize_dense;
    use crate::schedules::{NoiseSchedule, ScheduleKind};
    use crate::tensor::TensorShape;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn process(levels: &[usize], t_max: usize) -> DiffusionProcess {
        let ns = NoiseSchedule::linear_default(t_max).unwrap();
        let rs = ResolutionSchedule::new(ScheduleKind::Equal, 1.0, levels, t_max).unwrap();
        DiffusionProcess::new(ns, rs, 1).unwrap()
    }

    #[test]
    fn oracle_returns_x0_at_t1_and_single_level() {
        let p = process(&[8], 50);
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let x0 = Tensor::standard_normal(p.shape_at(0), &mut rng);
        let d = OracleDenoiser::new(x0.clone());
        let x_t = Tensor::standard_normal(p.shape_at(1), &mut rng);
        // t=1: M_{1:0} = I and a_0 = 1.
        let got = d.predict(&p, &x_t, 1).unwrap();
        assert_eq!(got, x0);
        // Any t on a single level: the scaled identity cancels with 1/a.
        for t in [5, 17, 50] {
            let got = d.predict(&p, &x_t, t).unwrap();
            assert!(got.max_abs_diff(&x0).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn oracle_matches_dense_downsample_past_transition() {
        let p = process(&[4, 8], 30);
        let t = p.resolution().transition_steps()[0] + 2;
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let x0 = Tensor::standard_normal(p.shape_at(0), &mut rng);
        let d = OracleDenoiser::new(x0.clone());
        let x_t = Tensor::zeros(p.shape_at(t));
        let got = d.predict(&p, &x_t, t).unwrap();

        let dense = materialize_dense(&p.cumulative_operator(t - 1).unwrap()).unwrap();
        let want = &dense * nalgebra::DVector::from_column_slice(x0.data())
            / p.noise().signal_coeff(t - 1);
        for (a, b) in got.data().iter().zip(want.iter()) {
            assert!((a - b).abs() <= 1e-10);
        }
        assert_eq!(got.shape(), TensorShape::square(1, 4));
    }

    #[test]
    fn batch_at_transition_is_constant() {
        let p = process(&[4, 8, 16, 32], 400);
        let rs = p.resolution();
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for _ in 0..500 {
            let ts = sample_timesteps_batch(rs, 8, &mut rng);
            if rs.is_transition(ts[0]) {
                assert!(ts.iter().all(|&t| t == ts[0]));
            }
        }
    }

    #[test]
    fn batch_shares_resolution_pair() {
        let p = process(&[4, 8, 16, 32], 400);
        let rs = p.resolution();
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        for _ in 0..500 {
            let ts = sample_timesteps_batch(rs, 8, &mut rng);
            let pair = (rs.resolution(ts[0]), rs.resolution(ts[0] - 1));
            for &t in &ts {
                assert_eq!((rs.resolution(t), rs.resolution(t - 1)), pair);
            }
        }
    }

    #[test]
    fn single_level_batch_is_uniform() {
        // Chi-square goodness of fit over T=50 bins, 1e5 draws. The 0.99
        // quantile of chi-square with 49 degrees of freedom is 74.9195.
        let rs = ResolutionSchedule::single_level(8, 50).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let n = 100_000;
        let mut counts = vec![0usize; 51];
        for _ in 0..n {
            let ts = sample_timesteps_batch(&rs, 1, &mut rng);
            counts[ts[0]] += 1;
        }
        let expected = n as f64 / 50.0;
        let chi2: f64 = (1..=50)
            .map(|t| {
                let d = counts[t] as f64 - expected;
                d * d / expected
            })
            .sum();
        assert!(chi2 < 74.9195, "chi-square statistic {chi2}");
    }
}
