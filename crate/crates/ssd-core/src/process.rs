//! The generalized linear-degradation diffusion process.
//!
//! Forward marginals are kept isotropic by construction,
//! `q(x_t | x_0) = N(M_{1:t} x_0, sigma_t^2 I)`, while each step applies a
//! linear operator M_t (resize + attenuation). The reverse conditional
//! `q(x_(t-1) | x_t, x_0)` is then Gaussian with
//!
//!   mean = mu_(t-1) + (sigma_(t-1)^2 / sigma_t^2) M_t^T (x_t - M_t mu_(t-1))
//!   cov  = sigma_(t-1)^2 I - (sigma_(t-1)^4 / sigma_t^2) M_t^T M_t
//!
//! which collapses to the familiar scalar posterior when M_t is a scaled
//! identity. Non-isotropic draws from the covariance go through the Lanczos
//! square root of `A(v) = v - rho M^T M v` with `rho = sigma_(t-1)^2 / sigma_t^2`.

use crate::error::{Result, SsdError};
use crate::lanczos::{lanczos_sqrt_apply, LanczosConfig};
use crate::linops::{
    check_psd_feasibility, cumulative_operator, materialize_dense, resize_op, step_operator,
    LinearOperator, PsdReport,
};
use crate::schedules::{NoiseSchedule, ResolutionSchedule};
use crate::tensor::{Tensor, TensorShape};

/// How posterior noise is drawn at resolution-changing steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleMode {
    /// Lanczos draw from the true non-isotropic covariance.
    Exact,
    /// Ablation mode: replace the non-isotropic draw with white noise whose
    /// per-channel variance matches a reference non-isotropic draw.
    IsotropicApprox,
}

/// Immutable bundle of noise schedule, resolution schedule, and channel count.
#[derive(Debug, Clone)]
pub struct DiffusionProcess {
    noise: NoiseSchedule,
    resolution: ResolutionSchedule,
    channels: usize,
    psd: PsdReport,
}

/// Parameters of one reverse conditional `q(x_lo | x_hi, x_0)`.
///
/// Together with the step operator these define the covariance
/// `sigma_lo^2 (I - rho M^T M)` implicitly.
#[derive(Debug, Clone)]
pub struct PosteriorParams {
    pub mean: Tensor,
    /// sigma_lo^2 / sigma_hi^2.
    pub rho: f64,
    pub sigma_tminus1: f64,
    pub t: usize,
    pub t_lo: usize,
    op: LinearOperator,
    preserving: bool,
}

impl PosteriorParams {
    /// The step operator whose adjoint pair defines the covariance.
    pub fn operator(&self) -> &LinearOperator {
        &self.op
    }

    /// Applies the unit-variance covariance factor `A(v) = v - rho M^T (M v)`.
    pub fn unit_cov_apply(&self, v: &Tensor) -> Result<Tensor> {
        let mv = self.op.apply(v)?;
        v.add_scaled(&self.op.adjoint(&mv)?, -self.rho)
    }

    /// Scalar posterior variance for resolution-preserving steps: the
    /// beta-tilde of the scalar special case.
    pub fn scalar_variance(&self) -> Option<f64> {
        if self.preserving {
            let s = self.op.scale();
            Some(self.sigma_tminus1.powi(2) * (1.0 - self.rho * s * s))
        } else {
            None
        }
    }

    pub fn is_preserving(&self) -> bool {
        self.preserving
    }
}

/// Dense-oracle report for the one-step composition identity.
#[derive(Debug, Clone, Copy)]
pub struct ForwardConsistencyReport {
    pub t: usize,
    pub mean_err: f64,
    pub cov_err: f64,
    pub pass: bool,
}

impl DiffusionProcess {
    /// Builds the process and runs the PSD feasibility check.
    ///
    /// An infeasible schedule is allowed to exist (construction only warns),
    /// but sampling at an infeasible step fails hard.
    pub fn new(
        noise: NoiseSchedule,
        resolution: ResolutionSchedule,
        channels: usize,
    ) -> Result<Self> {
        if noise.t_max() != resolution.t_max() {
            return Err(SsdError::Parameter(format!(
                "schedule lengths differ: noise T={} vs resolution T={}",
                noise.t_max(),
                resolution.t_max()
            )));
        }
        if channels == 0 {
            return Err(SsdError::Parameter("need at least one channel".into()));
        }
        let psd = check_psd_feasibility(&noise, &resolution, channels)?;
        if !psd.pass {
            let bad: Vec<usize> = psd.rows.iter().filter(|r| !r.pass).map(|r| r.t).collect();
            log::warn!(
                "schedule is PSD-infeasible at {} step(s): {:?}; sampling there will error",
                bad.len(),
                bad
            );
        }
        Ok(Self {
            noise,
            resolution,
            channels,
            psd,
        })
    }

    pub fn noise(&self) -> &NoiseSchedule {
        &self.noise
    }

    pub fn resolution(&self) -> &ResolutionSchedule {
        &self.resolution
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn t_max(&self) -> usize {
        self.noise.t_max()
    }

    pub fn psd_report(&self) -> &PsdReport {
        &self.psd
    }

    /// State shape at timestep t.
    pub fn shape_at(&self, t: usize) -> TensorShape {
        TensorShape::square(self.channels, self.resolution.resolution(t))
    }

    pub fn step_operator(&self, t: usize) -> Result<LinearOperator> {
        step_operator(&self.noise, &self.resolution, self.channels, t)
    }

    pub fn cumulative_operator(&self, t: usize) -> Result<LinearOperator> {
        cumulative_operator(&self.noise, &self.resolution, self.channels, t)
    }

    /// Composite operator mapping states at t_lo to states at t_hi: the
    /// telescoped attenuation a_hi / a_lo times one resize per level crossed.
    pub fn span_operator(&self, t_lo: usize, t_hi: usize) -> Result<LinearOperator> {
        if t_lo > t_hi || t_hi > self.t_max() {
            return Err(SsdError::Parameter(format!("bad span [{t_lo}, {t_hi}]")));
        }
        let scale = self.noise.signal_coeff(t_hi) / self.noise.signal_coeff(t_lo);
        let mut crossed: Vec<(usize, usize)> = Vec::new();
        for step in t_lo + 1..=t_hi {
            if self.resolution.is_transition(step) {
                crossed.push((
                    self.resolution.resolution(step - 1),
                    self.resolution.resolution(step),
                ));
            }
        }
        if crossed.is_empty() {
            return Ok(LinearOperator::ScaledIdentity {
                shape: self.shape_at(t_lo),
                scale,
            });
        }
        let last = crossed.len() - 1;
        let mut ops = Vec::with_capacity(crossed.len());
        for (k, (from, to)) in crossed.into_iter().enumerate() {
            let s = if k == last { scale } else { 1.0 };
            ops.push(resize_op(self.channels, from, to, s, 1.0)?);
        }
        if ops.len() == 1 {
            Ok(ops.pop().unwrap())
        } else {
            Ok(LinearOperator::Composite(ops))
        }
    }

    fn feasible_span(&self, t_lo: usize, t_hi: usize) -> bool {
        (t_lo + 1..=t_hi).all(|t| self.psd.is_feasible(t))
    }

    #[cfg(test)]
    pub(crate) fn mark_infeasible_for_test(&mut self, t: usize) {
        self.psd.rows[t - 1].pass = false;
        self.psd.pass = false;
    }

    /// Draws from the forward marginal: `x_t = M_{1:t} x_0 + sigma_t eps`.
    pub fn marginal_sample(&self, x0: &Tensor, t: usize, eps: &Tensor) -> Result<Tensor> {
        if x0.shape() != self.shape_at(0) {
            return Err(SsdError::Shape(format!(
                "x0 must be at full resolution {}, got {}",
                self.shape_at(0),
                x0.shape()
            )));
        }
        if eps.shape() != self.shape_at(t) {
            return Err(SsdError::Shape(format!(
                "eps must be at r(t) {}, got {}",
                self.shape_at(t),
                eps.shape()
            )));
        }
        let mean = self.cumulative_operator(t)?.apply(x0)?;
        mean.add_scaled(eps, self.noise.sigma(t))
    }

    /// Applies the forward-transition covariance
    /// `(sigma_t^2 I - sigma_(t-1)^2 M_t M_t^T) v` implicitly.
    pub fn transition_cov_apply(&self, t: usize, v: &Tensor) -> Result<Tensor> {
        if !self.psd.is_feasible(t) {
            return Err(SsdError::State(format!(
                "step {t} is PSD-infeasible; the transition covariance is not a covariance"
            )));
        }
        self.transition_cov_apply_raw(t, v)
    }

    fn transition_cov_apply_raw(&self, t: usize, v: &Tensor) -> Result<Tensor> {
        let op = self.step_operator(t)?;
        if v.shape() != op.out_shape() {
            return Err(SsdError::Shape(format!(
                "v must be at r(t) {}, got {}",
                op.out_shape(),
                v.shape()
            )));
        }
        let sigma_t_sq = self.noise.sigma(t).powi(2);
        let sigma_prev_sq = self.noise.sigma(t - 1).powi(2);
        let mmt_v = op.apply(&op.adjoint(v)?)?;
        v.scale(sigma_t_sq).add_scaled(&mmt_v, -sigma_prev_sq)
    }

    /// Reverse-conditional parameters for the adjacent step t -> t-1.
    pub fn posterior_params(
        &self,
        x_t: &Tensor,
        mu_tminus1: &Tensor,
        t: usize,
    ) -> Result<PosteriorParams> {
        if t < 1 {
            return Err(SsdError::Parameter("posterior needs t >= 1".into()));
        }
        self.posterior_params_between(x_t, mu_tminus1, t, t - 1)
    }

    /// Reverse-conditional parameters across a span t_hi -> t_lo.
    ///
    /// The mean/covariance formulas only require the isotropic marginals at
    /// the two endpoints and the linear map between them, so skipping over
    /// intermediate steps is the same computation with the span operator.
    pub fn posterior_params_between(
        &self,
        x_hi: &Tensor,
        mu_lo: &Tensor,
        t_hi: usize,
        t_lo: usize,
    ) -> Result<PosteriorParams> {
        if t_lo >= t_hi || t_hi > self.t_max() {
            return Err(SsdError::Parameter(format!(
                "bad posterior span [{t_lo}, {t_hi}]"
            )));
        }
        let op = self.span_operator(t_lo, t_hi)?;
        if x_hi.shape() != op.out_shape() {
            return Err(SsdError::Shape(format!(
                "x_t must be {}, got {}",
                op.out_shape(),
                x_hi.shape()
            )));
        }
        if mu_lo.shape() != op.in_shape() {
            return Err(SsdError::Shape(format!(
                "mu must be {}, got {}",
                op.in_shape(),
                mu_lo.shape()
            )));
        }
        let sigma_hi = self.noise.sigma(t_hi);
        let sigma_lo = self.noise.sigma(t_lo);
        let rho = sigma_lo.powi(2) / sigma_hi.powi(2);
        let residual = x_hi.sub(&op.apply(mu_lo)?)?;
        let mean = mu_lo.add_scaled(&op.adjoint(&residual)?, rho)?;
        let preserving = self.resolution.resolution(t_hi) == self.resolution.resolution(t_lo);
        Ok(PosteriorParams {
            mean,
            rho,
            sigma_tminus1: sigma_lo,
            t: t_hi,
            t_lo,
            op,
            preserving,
        })
    }

    /// Draws `x_lo ~ q(x_lo | x_hi, x_0)` from posterior parameters.
    ///
    /// `eps` must be standard normal at the target shape. Resolution-preserving
    /// steps use the scalar variance directly; resolution-changing steps draw
    /// `sigma_lo * A^(1/2) eps` via Lanczos. In [`SampleMode::IsotropicApprox`]
    /// the non-isotropic draw is replaced by white noise (`fresh`) scaled to
    /// the per-channel variance of the reference draw.
    pub fn posterior_sample(
        &self,
        params: &PosteriorParams,
        eps: &Tensor,
        fresh: Option<&Tensor>,
        mode: SampleMode,
        cfg: &LanczosConfig,
    ) -> Result<Tensor> {
        if params.t_lo == 0 {
            // sigma_0 = 0: the final step is deterministic.
            return Ok(params.mean.clone());
        }
        if eps.shape() != params.mean.shape() {
            return Err(SsdError::Shape(format!(
                "eps must be {}, got {}",
                params.mean.shape(),
                eps.shape()
            )));
        }
        if !self.feasible_span(params.t_lo, params.t) {
            return Err(SsdError::State(format!(
                "posterior covariance at span [{}, {}] is not PSD-feasible",
                params.t_lo, params.t
            )));
        }
        if params.preserving {
            let var = params.scalar_variance().expect("preserving");
            return params.mean.add_scaled(eps, var.max(0.0).sqrt());
        }
        let reference = self.nonisotropic_noise(params, eps, cfg)?;
        match mode {
            SampleMode::Exact => params.mean.add(&reference),
            SampleMode::IsotropicApprox => {
                let fresh = fresh.ok_or_else(|| {
                    SsdError::Parameter(
                        "isotropic approximation needs a fresh white-noise tensor".into(),
                    )
                })?;
                if fresh.shape() != params.mean.shape() {
                    return Err(SsdError::Shape(format!(
                        "fresh noise must be {}, got {}",
                        params.mean.shape(),
                        fresh.shape()
                    )));
                }
                let vars = reference.channel_variances();
                let mut out = params.mean.clone();
                let plane = out.shape().height * out.shape().width;
                for (c, sd) in vars.iter().map(|v| v.max(0.0).sqrt()).enumerate() {
                    let dst = &mut out.data_mut()[c * plane..(c + 1) * plane];
                    let src = &fresh.data()[c * plane..(c + 1) * plane];
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d += sd * s;
                    }
                }
                Ok(out)
            }
        }
    }

    /// `sigma_lo * A^(1/2) eps` with `A(v) = v - rho M^T M v`.
    fn nonisotropic_noise(
        &self,
        params: &PosteriorParams,
        eps: &Tensor,
        cfg: &LanczosConfig,
    ) -> Result<Tensor> {
        let shape = params.mean.shape();
        let op = &params.op;
        let rho = params.rho;
        let apply = |v: &[f64]| {
            let vt = Tensor::from_vec(shape, v.to_vec()).expect("shape fixed");
            let mv = op.apply(&vt).expect("shapes fixed");
            let mtmv = op.adjoint(&mv).expect("shapes fixed");
            vt.add_scaled(&mtmv, -rho)
                .expect("shapes fixed")
                .into_data()
        };
        let y = lanczos_sqrt_apply(apply, eps.data(), cfg)?;
        Ok(Tensor::from_vec(shape, y)?.scale(params.sigma_tminus1))
    }

    /// Dense verification that composing the transition with the previous
    /// marginal reproduces the isotropic marginal at t:
    /// `sigma_t^2 I = M_t (sigma_(t-1)^2 I) M_t^T + Sigma_(t|t-1)` and
    /// `M_t mu_(t-1) = mu_t`.
    pub fn forward_consistency_check(&self, t: usize) -> Result<ForwardConsistencyReport> {
        if t < 1 || t > self.t_max() {
            return Err(SsdError::Parameter(format!("t={t} out of range")));
        }
        let op = self.step_operator(t)?;
        let d = materialize_dense(&op)?;
        let n_out = op.out_shape().numel();
        let sigma_t_sq = self.noise.sigma(t).powi(2);
        let sigma_prev_sq = self.noise.sigma(t - 1).powi(2);

        // Probe the implicit transition covariance column by column.
        let mut composed = &d * d.transpose() * sigma_prev_sq;
        let mut basis = Tensor::zeros(op.out_shape());
        for k in 0..n_out {
            basis.data_mut()[k] = 1.0;
            let col = self.transition_cov_apply_raw(t, &basis)?;
            for (r, &v) in col.data().iter().enumerate() {
                composed[(r, k)] += v;
            }
            basis.data_mut()[k] = 0.0;
        }
        let mut cov_err = 0.0f64;
        for r in 0..n_out {
            for c in 0..n_out {
                let want = if r == c { sigma_t_sq } else { 0.0 };
                cov_err = cov_err.max((composed[(r, c)] - want).abs());
            }
        }

        let mut rng = crate::rng::stream(0xf0_77, 0, t as u64, 0);
        let x0 = Tensor::standard_normal(self.shape_at(0), &mut rng);
        let mu_prev = self.cumulative_operator(t - 1)?.apply(&x0)?;
        let mu_t = self.cumulative_operator(t)?.apply(&x0)?;
        let mean_err = op.apply(&mu_prev)?.max_abs_diff(&mu_t)?;

        Ok(ForwardConsistencyReport {
            t,
            mean_err,
            cov_err,
            pass: mean_err <= 1e-8 && cov_err <= 1e-8,
        })
    }
}
