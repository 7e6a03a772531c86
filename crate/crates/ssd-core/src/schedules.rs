//! Noise schedules, SNR loss weights, and timestep-to-resolution schedules.
//!
//! A [`NoiseSchedule`] carries the per-step variances beta_t and everything
//! derived from them (alpha_t, the cumulative product alpha_bar_t, the noise
//! level sigma_t = sqrt(1 - alpha_bar_t), and the signal coefficient
//! a_t = sqrt(alpha_bar_t)), indexed so that t = 0 is the clean state:
//! alpha_bar[0] = 1, sigma[0] = 0, a[0] = 1.
//!
//! A [`ResolutionSchedule`] maps each timestep to a spatial resolution drawn
//! from an ascending level list. The four generator families share one
//! construction: a continuous decay fraction `f(tau)` rising from 0 to 1 over
//! normalized time `tau = t / (T - 1)`, discretized as
//! `i(tau) = n - 1 - floor(n * f(tau))` and clamped into `[0, n-1]`, where `i`
//! indexes the ascending level list. `Equal` uses `f = tau`, `ConvexDecay`
//! uses `f = 1 - (1 - tau)^gamma`, and the tanh-like / sigmoid-like pair uses
//! the normalized cubic construction in [`tanh_like`] / [`sigmoid_like`].

use crate::error::{Result, SsdError};

/// Conventional linear-schedule endpoints (a default, not a derived value).
pub const DEFAULT_BETA_START: f64 = 1e-4;
pub const DEFAULT_BETA_END: f64 = 0.02;

/// Min-SNR loss-weight clamp.
pub const MIN_SNR_GAMMA: f64 = 5.0;

/// Variance schedule and derived coefficient tables.
///
/// All vectors have length `T + 1` and are indexed directly by timestep;
/// `beta[0]` and `alpha[0]` are padding (0 and 1) so the alpha_bar recursion
/// starts from alpha_bar[0] = 1.
#[derive(Debug, Clone)]
pub struct NoiseSchedule {
    beta: Vec<f64>,
    alpha: Vec<f64>,
    alpha_bar: Vec<f64>,
    sigma: Vec<f64>,
    a: Vec<f64>,
}

impl NoiseSchedule {
    /// Linear interpolation of beta from `beta_start` (t=1) to `beta_end` (t=T).
    pub fn linear(t_max: usize, beta_start: f64, beta_end: f64) -> Result<Self> {
        if t_max < 1 {
            return Err(SsdError::Parameter("timestep count must be >= 1".into()));
        }
        if !(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0) {
            return Err(SsdError::Parameter(format!(
                "need 0 < beta_start <= beta_end < 1, got [{beta_start}, {beta_end}]"
            )));
        }
        let betas = (1..=t_max).map(|t| {
            if t_max == 1 {
                beta_start
            } else {
                beta_start + (beta_end - beta_start) * (t - 1) as f64 / (t_max - 1) as f64
            }
        });
        Ok(Self::from_betas(betas.collect()))
    }

    /// Linear schedule with the conventional endpoints.
    pub fn linear_default(t_max: usize) -> Result<Self> {
        Self::linear(t_max, DEFAULT_BETA_START, DEFAULT_BETA_END)
    }

    fn from_betas(betas: Vec<f64>) -> Self {
        let t_max = betas.len();
        let mut beta = Vec::with_capacity(t_max + 1);
        let mut alpha = Vec::with_capacity(t_max + 1);
        let mut alpha_bar = Vec::with_capacity(t_max + 1);
        beta.push(0.0);
        alpha.push(1.0);
        alpha_bar.push(1.0);
        for b in betas {
            beta.push(b);
            alpha.push(1.0 - b);
            alpha_bar.push(alpha_bar.last().unwrap() * (1.0 - b));
        }
        let sigma = alpha_bar.iter().map(|ab| (1.0 - ab).sqrt()).collect();
        let a = alpha_bar.iter().map(|ab| ab.sqrt()).collect();
        Self {
            beta,
            alpha,
            alpha_bar,
            sigma,
            a,
        }
    }

    pub fn t_max(&self) -> usize {
        self.beta.len() - 1
    }

    /// beta_t, defined for 1 <= t <= T.
    pub fn beta(&self, t: usize) -> f64 {
        debug_assert!((1..=self.t_max()).contains(&t));
        self.beta[t]
    }

    /// alpha_t = 1 - beta_t, defined for 1 <= t <= T.
    pub fn alpha(&self, t: usize) -> f64 {
        debug_assert!((1..=self.t_max()).contains(&t));
        self.alpha[t]
    }

    /// Cumulative product of alpha up to t, with alpha_bar[0] = 1.
    pub fn alpha_bar(&self, t: usize) -> f64 {
        self.alpha_bar[t]
    }

    /// Noise level sigma_t = sqrt(1 - alpha_bar_t); sigma[0] = 0.
    pub fn sigma(&self, t: usize) -> f64 {
        self.sigma[t]
    }

    /// Signal coefficient a_t = sqrt(alpha_bar_t); a[0] = 1.
    pub fn signal_coeff(&self, t: usize) -> f64 {
        self.a[t]
    }

    /// Signal-to-noise ratio s^2(t) = alpha_bar_t / (1 - alpha_bar_t).
    ///
    /// Undefined at t = 0 where the noise level is zero.
    pub fn snr(&self, t: usize) -> Result<f64> {
        if t == 0 {
            return Err(SsdError::Domain(
                "snr is undefined at t=0 (sigma_0 = 0)".into(),
            ));
        }
        if t > self.t_max() {
            return Err(SsdError::Domain(format!(
                "t={t} out of range 1..={}",
                self.t_max()
            )));
        }
        let ab = self.alpha_bar[t];
        Ok(ab / (1.0 - ab))
    }

    /// Min-SNR loss weight `min(s^2(t), gamma)`.
    pub fn min_snr_weight(&self, t: usize, gamma: f64) -> Result<f64> {
        if gamma <= 0.0 {
            return Err(SsdError::Parameter("gamma must be positive".into()));
        }
        Ok(self.snr(t)?.min(gamma))
    }
}

/// Resolution-schedule generator families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleKind {
    /// Linear decay fraction; levels get equal spans of timesteps.
    Equal,
    /// `f(tau) = 1 - (1 - tau)^gamma`; gamma < 1 decays fast then slow,
    /// gamma > 1 slow then fast.
    ConvexDecay,
    /// Steep near the first and last timesteps, flat in the middle.
    TanhLikeDecay,
    /// Steep in the middle, flat near the ends (inverse of tanh-like).
    SigmoidLikeDecay,
    /// Arbitrary ascending level list with uniform time allocation.
    Explicit,
}

impl ScheduleKind {
    pub fn uses_gamma(&self) -> bool {
        matches!(
            self,
            ScheduleKind::ConvexDecay
                | ScheduleKind::TanhLikeDecay
                | ScheduleKind::SigmoidLikeDecay
        )
    }
}

impl std::fmt::Display for ScheduleKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ScheduleKind::Equal => "equal",
            ScheduleKind::ConvexDecay => "convex",
            ScheduleKind::TanhLikeDecay => "tanh",
            ScheduleKind::SigmoidLikeDecay => "sigmoid",
            ScheduleKind::Explicit => "explicit",
        };
        f.write_str(s)
    }
}

/// Monotone map from timestep to resolution over a discrete level list.
#[derive(Debug, Clone)]
pub struct ResolutionSchedule {
    levels: Vec<usize>,
    t_max: usize,
    kind: ScheduleKind,
    gamma: f64,
    r_of_t: Vec<usize>,
}

/// Normalized cubic tanh-shaped map from [0,1] onto [0,1].
///
/// Built from the cubic `p(x) = -2x^3 + 3x^2 - 1/2` composed with the
/// gamma-warp `x(v) = sign(v) |v|^gamma + 1/2`, normalized so the endpoints
/// land on 0 and 1:
///
///   tanh_like(u) = 1/2 + 1/2 * p(x(u - 1/2)) / p(x(1/2))
///
/// Monotone on [0,1] for gamma >= 1. For gamma < 1 it overshoots [0,1] near
/// the ends; the schedule discretization clamps that region away.
pub fn tanh_like(u: f64, gamma: f64) -> f64 {
    0.5 + 0.5 * p_hat(u - 0.5, gamma)
}

fn cubic(x: f64) -> f64 {
    -2.0 * x.powi(3) + 3.0 * x.powi(2) - 0.5
}

fn gamma_warp(v: f64, gamma: f64) -> f64 {
    v.signum() * v.abs().powf(gamma) + 0.5
}

fn p_hat(v: f64, gamma: f64) -> f64 {
    cubic(gamma_warp(v, gamma)) / cubic(gamma_warp(0.5, gamma))
}

/// Inverse of [`tanh_like`] on its central monotone branch, renormalized so
/// that sigmoid_like(0) = 0 and sigmoid_like(1) = 1.
///
/// For gamma >= 1 the branch is all of [0,1] and this is the exact functional
/// inverse. Computed by bisection to 1e-10.
pub fn sigmoid_like(y: f64, gamma: f64) -> f64 {
    // Turning points of tanh_like sit at |u - 1/2| = (1/2)^(1/gamma).
    let half_branch = 0.5f64.powf(1.0 / gamma).min(0.5);
    let lo = 0.5 - half_branch;
    let hi = 0.5 + half_branch;
    let b0 = branch_inverse(0.0, gamma, lo, hi);
    let b1 = branch_inverse(1.0, gamma, lo, hi);
    let b = branch_inverse(y, gamma, lo, hi);
    (b - b0) / (b1 - b0)
}

fn branch_inverse(y: f64, gamma: f64, lo: f64, hi: f64) -> f64 {
    const TOL: f64 = 1e-10;
    // tanh_like is increasing on [lo, hi] and spans a superset of [0,1], but
    // its float image has plateaus where the cubic is flat. Bisect both
    // envelope edges and return their midpoint so plateau centers invert to
    // themselves.
    let bisect = |strict: bool| {
        let (mut lo, mut hi) = (lo, hi);
        for _ in 0..200 {
            if hi - lo <= TOL {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let v = tanh_like(mid, gamma);
            let below = if strict { v < y } else { v <= y };
            if below {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    0.5 * (bisect(true) + bisect(false))
}

/// Continuous decay fraction for a family: 0 at tau=0 (full resolution),
/// 1 at tau=1 (minimum resolution).
pub fn decay_fraction(kind: ScheduleKind, gamma: f64, tau: f64) -> f64 {
    match kind {
        ScheduleKind::Equal | ScheduleKind::Explicit => tau,
        ScheduleKind::ConvexDecay => 1.0 - (1.0 - tau).powf(gamma),
        ScheduleKind::TanhLikeDecay => 1.0 - tanh_like(1.0 - tau, gamma),
        ScheduleKind::SigmoidLikeDecay => 1.0 - sigmoid_like(1.0 - tau, gamma),
    }
}

impl ResolutionSchedule {
    /// Builds `r(t)` for `t = 0..=T` from one of the schedule families.
    pub fn new(kind: ScheduleKind, gamma: f64, levels: &[usize], t_max: usize) -> Result<Self> {
        if levels.is_empty() {
            return Err(SsdError::Parameter("level list must be nonempty".into()));
        }
        if levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SsdError::Parameter(
                "level list must be strictly ascending".into(),
            ));
        }
        if levels[0] == 0 {
            return Err(SsdError::Parameter("resolutions must be positive".into()));
        }
        if t_max < levels.len() {
            return Err(SsdError::Parameter(format!(
                "need T >= number of levels ({} < {})",
                t_max,
                levels.len()
            )));
        }
        if kind.uses_gamma() && !(gamma.is_finite() && gamma > 0.0) {
            return Err(SsdError::Parameter("gamma must be positive".into()));
        }

        let n = levels.len();
        let r_of_t: Vec<usize> = (0..=t_max)
            .map(|t| {
                let tau = if t_max == 1 {
                    (t != 0) as usize as f64
                } else {
                    (t as f64 / (t_max - 1) as f64).min(1.0)
                };
                let f = decay_fraction(kind, gamma, tau);
                let i = n as i64 - 1 - (n as f64 * f).floor() as i64;
                levels[i.clamp(0, n as i64 - 1) as usize]
            })
            .collect();

        let schedule = Self {
            levels: levels.to_vec(),
            t_max,
            kind,
            gamma,
            r_of_t,
        };
        schedule.validate()?;
        Ok(schedule)
    }

    /// Schedule from an explicit per-timestep table.
    pub fn from_table(levels: &[usize], r_of_t: Vec<usize>, t_max: usize) -> Result<Self> {
        if r_of_t.len() != t_max + 1 {
            return Err(SsdError::Parameter(format!(
                "table must have T+1 = {} entries, got {}",
                t_max + 1,
                r_of_t.len()
            )));
        }
        if r_of_t.iter().any(|r| !levels.contains(r)) {
            return Err(SsdError::Construction(
                "table contains a resolution outside the level list".into(),
            ));
        }
        let schedule = Self {
            levels: levels.to_vec(),
            t_max,
            kind: ScheduleKind::Explicit,
            gamma: 1.0,
            r_of_t,
        };
        schedule.validate()?;
        Ok(schedule)
    }

    /// Degenerate single-level schedule (the DDPM special case).
    pub fn single_level(res: usize, t_max: usize) -> Result<Self> {
        Self::new(ScheduleKind::Equal, 1.0, &[res], t_max)
    }

    fn validate(&self) -> Result<()> {
        if self.r_of_t.windows(2).any(|w| w[1] > w[0]) {
            return Err(SsdError::Construction(
                "resolution table is not non-increasing".into(),
            ));
        }
        if self.r_of_t[0] != *self.levels.last().unwrap() {
            return Err(SsdError::Construction(format!(
                "r(0) = {} but the maximum level is {}",
                self.r_of_t[0],
                self.levels.last().unwrap()
            )));
        }
        if self.r_of_t[self.t_max] != self.levels[0] {
            return Err(SsdError::Construction(format!(
                "r(T) = {} but the minimum level is {}",
                self.r_of_t[self.t_max], self.levels[0]
            )));
        }
        Ok(())
    }

    pub fn t_max(&self) -> usize {
        self.t_max
    }

    pub fn levels(&self) -> &[usize] {
        &self.levels
    }

    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn r_max(&self) -> usize {
        *self.levels.last().unwrap()
    }

    pub fn r_min(&self) -> usize {
        self.levels[0]
    }

    /// Resolution at timestep t, for 0 <= t <= T.
    pub fn resolution(&self, t: usize) -> usize {
        self.r_of_t[t]
    }

    /// Whether step t changes resolution, i.e. r(t) != r(t-1).
    pub fn is_transition(&self, t: usize) -> bool {
        debug_assert!((1..=self.t_max).contains(&t));
        self.r_of_t[t] != self.r_of_t[t - 1]
    }

    /// All t in [1, T] with r(t) != r(t-1), ascending.
    pub fn transition_steps(&self) -> Vec<usize> {
        (1..=self.t_max)
            .filter(|&t| self.is_transition(t))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Cumulative product of (1 - beta_t) for T=4, beta 1e-4..0.02, computed
    // with exact rational arithmetic: 24007354078939 / 25000000000000.
    const ALPHA_BAR_4: f64 = 0.96029416315756;

    #[test]
    fn linear_schedule_invariants() {
        let ns = NoiseSchedule::linear_default(1000).unwrap();
        assert_eq!(ns.t_max(), 1000);
        assert_eq!(ns.alpha_bar(0), 1.0);
        assert_eq!(ns.sigma(0), 0.0);
        assert_eq!(ns.signal_coeff(0), 1.0);
        for t in 1..=1000 {
            assert!(
                ns.alpha_bar(t) < ns.alpha_bar(t - 1),
                "not decreasing at {t}"
            );
            assert!(ns.beta(t) > 0.0 && ns.beta(t) < 1.0);
            let unit = ns.sigma(t).powi(2) + ns.signal_coeff(t).powi(2);
            assert!((unit - 1.0).abs() <= 1e-12, "sigma^2 + a^2 = {unit} at {t}");
        }
        assert!((ns.beta(1) - 1e-4).abs() < 1e-18);
        assert!((ns.beta(1000) - 0.02).abs() < 1e-18);
    }

    #[test]
    fn alpha_bar_matches_log_sum_route() {
        let ns = NoiseSchedule::linear_default(100).unwrap();
        let mut log_sum = 0.0;
        for t in 1..=100 {
            log_sum += ns.alpha(t).ln();
            assert!((ns.alpha_bar(t) - log_sum.exp()).abs() <= 1e-12);
        }
    }

    #[test]
    fn single_step_schedule_closed_form() {
        let ns = NoiseSchedule::linear(1, 0.5, 0.5).unwrap();
        assert_eq!(ns.alpha_bar(0), 1.0);
        assert_eq!(ns.alpha_bar(1), 0.5);
        assert_eq!(ns.sigma(0), 0.0);
        assert!((ns.sigma(1) - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn four_step_alpha_bar_matches_product_oracle() {
        let ns = NoiseSchedule::linear_default(4).unwrap();
        assert!((ns.alpha_bar(4) - ALPHA_BAR_4).abs() <= 1e-12);
    }

    #[test]
    fn rejects_bad_beta_range() {
        assert!(NoiseSchedule::linear(10, 0.0, 0.02).is_err());
        assert!(NoiseSchedule::linear(10, 0.5, 0.4).is_err());
        assert!(NoiseSchedule::linear(10, 0.1, 1.0).is_err());
        assert!(NoiseSchedule::linear(0, 1e-4, 0.02).is_err());
    }

    #[test]
    fn snr_values() {
        let ns = NoiseSchedule::linear_default(1000).unwrap();
        assert!(ns.snr(0).is_err());
        // Independent cumulative-product evaluation at t=500.
        assert!((ns.snr(500).unwrap() - 0.08528994446263686).abs() <= 1e-12);

        // Symmetric point: alpha_bar = 0.5 -> snr = 1.
        let ns1 = NoiseSchedule::linear(1, 0.5, 0.5).unwrap();
        assert!((ns1.snr(1).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn min_snr_weight_clamps() {
        let ns = NoiseSchedule::linear_default(1000).unwrap();
        // Early steps have huge SNR; the clamp takes over.
        assert_eq!(ns.min_snr_weight(1, 5.0).unwrap(), 5.0);
        // Late steps keep their raw SNR.
        let raw = ns.snr(900).unwrap();
        assert!(raw < 5.0);
        assert_eq!(ns.min_snr_weight(900, 5.0).unwrap(), raw);
        assert!(ns.min_snr_weight(10, -1.0).is_err());
    }

    #[test]
    fn min_snr_table_matches_brute_force() {
        let t_max = 10;
        let ns = NoiseSchedule::linear_default(t_max).unwrap();
        // Brute-force route: recompute alpha_bar by direct product per t.
        for t in 1..=t_max {
            let mut prod = 1.0;
            for i in 1..=t {
                let beta = 1e-4 + (0.02 - 1e-4) * (i - 1) as f64 / (t_max - 1) as f64;
                prod *= 1.0 - beta;
            }
            let want = (prod / (1.0 - prod)).min(5.0);
            assert!((ns.min_snr_weight(t, 5.0).unwrap() - want).abs() <= 1e-12);
        }
    }

    #[test]
    fn equal_schedule_endpoints() {
        let rs = ResolutionSchedule::new(ScheduleKind::Equal, 1.0, &[8, 16, 32, 64], 1000).unwrap();
        assert_eq!(rs.resolution(0), 64);
        // tau = 0.99 sits in the last quarter.
        let t = (0.99 * 999.0_f64).round() as usize;
        assert_eq!(rs.resolution(t), 8);
        assert_eq!(rs.resolution(1000), 8);
        assert_eq!(rs.transition_steps().len(), 3);
    }

    #[test]
    fn convex_half_threshold() {
        // 1 - (1-tau)^0.5 < 1/4 solves to tau < 1 - (3/4)^2 = 0.4375, so the
        // top level persists exactly while tau < 0.4375.
        let t_max = 1000;
        let rs = ResolutionSchedule::new(ScheduleKind::ConvexDecay, 0.5, &[8, 16, 32, 64], t_max)
            .unwrap();
        for t in 0..=t_max {
            let tau = (t as f64 / (t_max - 1) as f64).min(1.0);
            // Brute-force sweep of the continuous fraction agrees with the
            // closed-form threshold.
            let brute_top = 1.0 - (1.0 - tau).sqrt() < 0.25;
            assert_eq!(brute_top, tau < 0.4375);
            if tau < 0.4375 {
                assert_eq!(rs.resolution(t), 64, "t={t} tau={tau}");
            } else {
                assert!(rs.resolution(t) <= 32, "t={t} tau={tau}");
            }
        }
    }

    #[test]
    fn convex_gamma_one_equals_equal() {
        // The continuous forms are identical: the resolution multiplier
        // (1-tau)^1 equals 1-tau bit for bit.
        for k in 0..=997 {
            let tau = k as f64 / 997.0;
            assert_eq!((1.0 - tau).powf(1.0), 1.0 - tau);
        }
        // On dyadic grids every intermediate is exact, so the discrete
        // tables agree bit for bit too. (On non-dyadic grids the two
        // algebraically equal fractions can differ by one ulp and land a
        // single boundary timestep on the other side of a floor.)
        for t_max in [17usize, 65, 1025] {
            let eq = ResolutionSchedule::new(ScheduleKind::Equal, 1.0, &[4, 8, 16], t_max).unwrap();
            let cv = ResolutionSchedule::new(ScheduleKind::ConvexDecay, 1.0, &[4, 8, 16], t_max)
                .unwrap();
            for t in 0..=t_max {
                assert_eq!(eq.resolution(t), cv.resolution(t), "t={t}, T={t_max}");
            }
        }
    }

    #[test]
    fn tanh_like_anchor_values() {
        // gamma=1 collapses to the plain normalized cubic: p_hat(-1/4) = -11/16.
        assert!((tanh_like(0.25, 1.0) - 0.15625).abs() < 1e-15);
        assert!((tanh_like(0.75, 1.0) - 0.84375).abs() < 1e-15);
        // Rational-arithmetic anchors for the warped cases.
        assert!((tanh_like(0.25, 2.0) - 0.3643465909090909).abs() < 1e-14);
        assert!((tanh_like(0.75, 3.0) - 0.5638090093085106).abs() < 1e-14);
        for gamma in [1.0, 2.0, 3.0] {
            assert!(tanh_like(0.0, gamma).abs() < 1e-12);
            assert!((tanh_like(1.0, gamma) - 1.0).abs() < 1e-12);
            assert!((tanh_like(0.5, gamma) - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn tanh_sigmoid_mutual_inverse() {
        for gamma in [1.0, 2.0, 3.0] {
            for k in 0..=64 {
                let u = k as f64 / 64.0;
                let round = sigmoid_like(tanh_like(u, gamma), gamma);
                assert!(
                    (round - u).abs() <= 1e-6,
                    "gamma={gamma} u={u} round={round}"
                );
            }
        }
    }

    #[test]
    fn explicit_gradual_downsizing() {
        let levels: Vec<usize> = (2..=32).collect();
        let rs = ResolutionSchedule::new(ScheduleKind::Explicit, 1.0, &levels, 1000).unwrap();
        assert_eq!(rs.resolution(0), 32);
        assert_eq!(rs.resolution(1000), 2);
        // 31 levels -> 30 single-pixel transitions.
        let steps = rs.transition_steps();
        assert_eq!(steps.len(), 30);
        for t in &steps {
            assert_eq!(rs.resolution(t - 1) - rs.resolution(*t), 1);
        }
    }

    #[test]
    fn single_level_has_no_transitions() {
        let rs = ResolutionSchedule::single_level(8, 100).unwrap();
        assert!(rs.transition_steps().is_empty());
        assert_eq!(rs.resolution(0), 8);
        assert_eq!(rs.resolution(100), 8);
    }

    #[test]
    fn rejects_bad_levels() {
        assert!(ResolutionSchedule::new(ScheduleKind::Equal, 1.0, &[], 10).is_err());
        assert!(ResolutionSchedule::new(ScheduleKind::Equal, 1.0, &[8, 8], 10).is_err());
        assert!(ResolutionSchedule::new(ScheduleKind::Equal, 1.0, &[16, 8], 10).is_err());
        assert!(ResolutionSchedule::new(ScheduleKind::Equal, 1.0, &[4, 8, 16], 2).is_err());
        assert!(ResolutionSchedule::new(ScheduleKind::ConvexDecay, 0.0, &[4, 8], 10).is_err());
    }

    #[test]
    fn from_table_validates_membership_and_monotonicity() {
        let ok = ResolutionSchedule::from_table(&[4, 8], vec![8, 8, 4, 4], 3).unwrap();
        assert_eq!(ok.transition_steps(), vec![2]);
        assert!(ResolutionSchedule::from_table(&[4, 8], vec![8, 5, 4, 4], 3).is_err());
        assert!(ResolutionSchedule::from_table(&[4, 8], vec![8, 4, 8, 4], 3).is_err());
        assert!(ResolutionSchedule::from_table(&[4, 8], vec![8, 8, 8, 8], 3).is_err());
    }
}
