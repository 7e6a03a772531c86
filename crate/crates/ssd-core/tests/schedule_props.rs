//! Property tests for the schedule families and the operator algebra.

use proptest::prelude::*;

use ssd_core::linops::{materialize_dense, materialize_dense_adjoint, resize_op, LinearOperator};
use ssd_core::schedules::{decay_fraction, NoiseSchedule, ResolutionSchedule, ScheduleKind};
use ssd_core::tensor::{Tensor, TensorShape};

const FAMILIES: [ScheduleKind; 4] = [
    ScheduleKind::Equal,
    ScheduleKind::ConvexDecay,
    ScheduleKind::TanhLikeDecay,
    ScheduleKind::SigmoidLikeDecay,
];

/// Largest one-step move of the clamped continuous decay fraction. A level
/// can only be skipped when this exceeds one floor band (1/n), which happens
/// for steep families at coarse T; the discrete table is still monotone with
/// correct endpoints there.
fn max_fraction_jump(kind: ScheduleKind, gamma: f64, t_max: usize, n: usize) -> f64 {
    let _ = n;
    let mut worst = 0.0f64;
    let mut prev = decay_fraction(kind, gamma, 0.0).clamp(0.0, 1.0);
    for t in 1..=t_max {
        let tau = if t_max == 1 {
            1.0
        } else {
            (t as f64 / (t_max - 1) as f64).min(1.0)
        };
        let f = decay_fraction(kind, gamma, tau).clamp(0.0, 1.0);
        worst = worst.max(f - prev);
        prev = f;
    }
    worst
}

#[test]
fn schedule_family_grid_invariants() {
    // Exhaustive sweep: every family, gamma in {0.5, 1, 2, 3}, 2..=6 levels,
    // T in {10, 100, 1000}.
    let mut skipped_combos = Vec::new();
    for kind in FAMILIES {
        for gamma in [0.5, 1.0, 2.0, 3.0] {
            for n in 2..=6usize {
                for t_max in [10usize, 100, 1000] {
                    let levels: Vec<usize> = (0..n).map(|k| 4 << k).collect();
                    let rs = ResolutionSchedule::new(kind, gamma, &levels, t_max)
                        .unwrap_or_else(|e| panic!("{kind:?} gamma={gamma} n={n} T={t_max}: {e}"));

                    // Universal invariants.
                    assert_eq!(rs.resolution(0), *levels.last().unwrap());
                    assert_eq!(rs.resolution(t_max), levels[0]);
                    for t in 1..=t_max {
                        assert!(rs.resolution(t) <= rs.resolution(t - 1));
                        assert!(levels.contains(&rs.resolution(t)));
                    }

                    // Exact transition count whenever no floor band can be
                    // jumped over; otherwise the count drops by the skipped
                    // levels (steep family + coarse grid).
                    let transitions = rs.transition_steps().len();
                    assert!((1..=n - 1).contains(&transitions));
                    let jump = max_fraction_jump(kind, gamma, t_max, n);
                    if jump <= 1.0 / n as f64 {
                        assert_eq!(
                            transitions,
                            n - 1,
                            "{kind:?} gamma={gamma} n={n} T={t_max} jump={jump}"
                        );
                    } else if transitions < n - 1 {
                        skipped_combos.push((kind, gamma, n, t_max));
                    }
                }
            }
        }
    }
    // Skips only ever come from coarse grids; the production setting
    // (T = 1000) never skips.
    assert!(
        skipped_combos.iter().all(|&(_, _, _, t)| t < 1000),
        "level skipping at T=1000: {skipped_combos:?}"
    );
}

#[test]
fn transition_count_equals_levels_minus_one_at_t1000() {
    for kind in FAMILIES {
        for gamma in [0.5, 1.0, 2.0, 3.0] {
            for n in 2..=6usize {
                let levels: Vec<usize> = (0..n).map(|k| 4 << k).collect();
                let rs = ResolutionSchedule::new(kind, gamma, &levels, 1000).unwrap();
                assert_eq!(
                    rs.transition_steps().len(),
                    n - 1,
                    "{kind:?} gamma={gamma} n={n}"
                );
            }
        }
    }
}

proptest! {
    #[test]
    fn noise_schedule_invariants_hold(
        t_max in 1usize..500,
        start_millis in 1u32..500,
        span_millis in 0u32..400,
    ) {
        let beta_start = start_millis as f64 * 1e-5;
        let beta_end = (start_millis + span_millis) as f64 * 1e-5 + 1e-5;
        let ns = NoiseSchedule::linear(t_max, beta_start, beta_end).unwrap();
        prop_assert_eq!(ns.alpha_bar(0), 1.0);
        let mut log_sum = 0.0;
        for t in 1..=t_max {
            prop_assert!(ns.alpha_bar(t) < ns.alpha_bar(t - 1));
            prop_assert!((ns.sigma(t).powi(2) + ns.signal_coeff(t).powi(2) - 1.0).abs() <= 1e-12);
            log_sum += ns.alpha(t).ln();
            prop_assert!((ns.alpha_bar(t) - log_sum.exp()).abs() <= 1e-12);
        }
    }

    #[test]
    fn resize_linearity_and_adjoint_identity(
        res_in in 2usize..12,
        res_out in 1usize..12,
        channels in 1usize..3,
        seed in 0u64..1000,
    ) {
        let op = resize_op(channels, res_in, res_out, 0.9, 0.95).unwrap();
        let mut rng = ssd_core::rng::stream(seed, 0, 0, 99);
        let x = Tensor::standard_normal(op.in_shape(), &mut rng);
        let y = Tensor::standard_normal(op.in_shape(), &mut rng);
        let v = Tensor::standard_normal(op.out_shape(), &mut rng);

        // Linearity.
        let lhs = op.apply(&x.scale(1.7).add(&y.scale(-0.3)).unwrap()).unwrap();
        let rhs = op.apply(&x).unwrap().scale(1.7)
            .add(&op.apply(&y).unwrap().scale(-0.3)).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs).unwrap() <= 1e-10);

        // Adjoint identity.
        let a = v.dot(&op.apply(&x).unwrap()).unwrap();
        let b = op.adjoint(&v).unwrap().dot(&x).unwrap();
        prop_assert!((a - b).abs() <= 1e-8 * (x.norm() * v.norm()).max(1e-30));
    }

    #[test]
    fn dense_adjoint_is_dense_transpose(
        res_in in 2usize..10,
        res_out in 1usize..10,
    ) {
        let op = resize_op(1, res_in, res_out, 0.8, 1.0).unwrap();
        let d = materialize_dense(&op).unwrap();
        let dt = materialize_dense_adjoint(&op).unwrap();
        prop_assert!((d.transpose() - dt).abs().max() <= 1e-12);
    }
}

#[test]
fn adjoint_identity_for_every_operator_kind() {
    // ScaledIdentity, Resize, and Composite, 100 trials each.
    let mut rng = ssd_core::rng::stream(5, 0, 0, 98);
    let composite = LinearOperator::Composite(vec![
        resize_op(1, 8, 4, 1.0, 1.0).unwrap(),
        resize_op(1, 4, 2, 0.9, 1.0).unwrap(),
    ]);
    let ops = [
        LinearOperator::ScaledIdentity {
            shape: TensorShape::square(1, 6),
            scale: 0.37,
        },
        resize_op(1, 8, 4, 0.8, 0.9).unwrap(),
        composite,
    ];
    for op in &ops {
        for _ in 0..100 {
            let x = Tensor::standard_normal(op.in_shape(), &mut rng);
            let v = Tensor::standard_normal(op.out_shape(), &mut rng);
            let a = v.dot(&op.apply(&x).unwrap()).unwrap();
            let b = op.adjoint(&v).unwrap().dot(&x).unwrap();
            assert!((a - b).abs() <= 1e-8 * (x.norm() * v.norm()));
        }
    }
}
