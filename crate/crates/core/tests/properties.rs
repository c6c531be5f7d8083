//! Invariants checked on random inputs.

use proptest::prelude::*;

use annealed_bregman::bregman::{step_estimate, BregmanGenerator, LogRatios, Loss};
use annealed_bregman::estimator::{abe_log_z, true_step_ratios, AbeConfig};
use annealed_bregman::exp_family::GaussianDiag;
use annealed_bregman::harness::table::{CellTheory, SummaryRow, SweepRow};
use annealed_bregman::mixture::GaussianMixture;
use annealed_bregman::paths::{Endpoints, PathKind, PathSpec, Schedule};
use annealed_bregman::theory::{chi2_mixture_bound_check, harmonic, hellinger2};

fn gaussian(dim: usize) -> impl Strategy<Value = GaussianDiag> {
    (
        prop::collection::vec(-2.0..2.0f64, dim),
        prop::collection::vec(0.3..3.0f64, dim),
    )
        .prop_map(|(m, v)| GaussianDiag::new(m, v).unwrap())
}

fn pair() -> impl Strategy<Value = (GaussianDiag, GaussianDiag)> {
    (1usize..=3).prop_flat_map(|d| (gaussian(d), gaussian(d)))
}

fn endpoints() -> impl Strategy<Value = Endpoints> {
    (pair(), -5.0..5.0f64).prop_map(|((p0, p1), s)| {
        Endpoints::simply_unnormalized(p0, &p1).unwrap().scaled(s).unwrap()
    })
}

fn all_kinds(log_z1: f64) -> [PathKind; 5] {
    [
        PathKind::Geometric,
        PathKind::Arithmetic(Schedule::Vanilla),
        PathKind::Arithmetic(Schedule::Oracle { log_z1 }),
        PathKind::Arithmetic(Schedule::OracleTrig { log_z1 }),
        PathKind::Optimal,
    ]
}

fn loss() -> impl Strategy<Value = Loss> {
    prop::sample::select(Loss::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn geometric_estimate_shifts_by_log_c(ep in endpoints(), c in -20.0..20.0f64, loss in loss(), k in 1usize..4, seed in any::<u64>()) {
        let base = abe_log_z(&AbeConfig::new(PathSpec::geometric(ep.clone()), k, 240, loss, seed)).unwrap();
        let moved = abe_log_z(&AbeConfig::new(PathSpec::geometric(ep.scaled(c).unwrap()), k, 240, loss, seed)).unwrap();
        prop_assert!((moved.log_z1_hat - base.log_z1_hat - c).abs() < 1e-9);
    }

    #[test]
    fn step_estimate_shifts_with_ratios(
        lower in prop::collection::vec(-3.0..3.0f64, 2..40),
        upper in prop::collection::vec(-3.0..3.0f64, 2..40),
        c in -30.0..30.0f64,
        loss in loss(),
    ) {
        let r = LogRatios::new(0, lower, upper).unwrap();
        let g = BregmanGenerator::new(loss, r.nu()).unwrap();
        let a = step_estimate(&g, &r).unwrap().beta;
        let b = step_estimate(&g, &r.shifted(c)).unwrap().beta;
        prop_assert!((b - a - c).abs() < 1e-9, "{a} {b} {c}");
    }

    #[test]
    fn true_ratios_telescope(ep in endpoints(), k in 1usize..12) {
        for kind in all_kinds(ep.log_z1()) {
            let spec = PathSpec::new(kind, ep.clone()).unwrap();
            let sum: f64 = true_step_ratios(&spec, k).unwrap().iter().sum();
            prop_assert!((sum - ep.log_z1()).abs() < 1e-10, "{}: {sum} vs {}", kind.name(), ep.log_z1());
        }
    }

    #[test]
    fn paths_hit_their_endpoints(ep in endpoints(), x in prop::collection::vec(-4.0..4.0f64, 3)) {
        let x = &x[..ep.dim()];
        let mut kinds = all_kinds(ep.log_z1()).to_vec();
        kinds.push(PathKind::QMean { q: 0.5 });
        kinds.push(PathKind::QMean { q: 1.0 });
        for kind in kinds {
            let spec = PathSpec::new(kind, ep.clone()).unwrap();
            let f0 = spec.point(0.0).unwrap().log_f(x).unwrap();
            let f1 = spec.point(1.0).unwrap().log_f(x).unwrap();
            prop_assert!((f0 - ep.log_p0(x)).abs() < 1e-10, "{} at 0", kind.name());
            prop_assert!((f1 - ep.log_f1(x)).abs() < 1e-10, "{} at 1", kind.name());
        }
    }

    #[test]
    fn schedule_weights_are_monotone(lz in -10.0..10.0f64, t in 0.0..1.0f64, dt in 0.0..0.2f64) {
        for s in [Schedule::Vanilla, Schedule::Oracle { log_z1: lz }, Schedule::OracleTrig { log_z1: lz }] {
            let (a, b) = (s.weight(t), s.weight((t + dt).min(1.0)));
            prop_assert!((0.0..=1.0).contains(&a) && a <= b);
            prop_assert_eq!(s.weight(0.0), 0.0);
            prop_assert_eq!(s.weight(1.0), 1.0);
        }
    }

    #[test]
    fn divergences_are_bounded((p, q) in pair(), pi in 0.05..0.95f64) {
        let h = hellinger2(&p, &q).unwrap();
        prop_assert!((0.0..=1.0).contains(&h));
        prop_assert!((h - hellinger2(&q, &p).unwrap()).abs() < 1e-12);
        if p.dim() <= 2 {
            let d = harmonic(&GaussianMixture::single(p.clone()), &GaussianMixture::single(q.clone()), pi).unwrap();
            prop_assert!((-1e-12..=1.0).contains(&d));
        }
    }

    #[test]
    fn mixture_chi2_bound((p, q) in (gaussian(1), gaussian(1)), w in 0.01..0.99f64) {
        if let Ok((lhs, rhs)) = chi2_mixture_bound_check(&p, &q, w) {
            prop_assert!(lhs <= rhs * (1.0 + 1e-9));
        }
    }

    #[test]
    fn summary_mse_is_mean_of_squared_errors(
        hats in prop::collection::vec(prop::option::weighted(0.9, -5.0..5.0f64), 2..30),
        truth in -5.0..5.0f64,
    ) {
        let rows: Vec<SweepRow> = hats.iter().enumerate().map(|(i, h)| SweepRow {
            experiment: "sweep_distance".into(),
            sweep_value: 1.0,
            estimator: "geometric".into(),
            loss: "NCE".into(),
            path: "geometric".into(),
            k: 3,
            n: 100,
            dim: 1,
            seed: i as u64,
            log_z_hat: h.ok_or_else(|| "failed".to_string()),
            true_log_z: truth,
        }).collect();
        for r in &rows {
            if let Ok(h) = r.log_z_hat {
                prop_assert!((r.squared_error().unwrap() - (h - truth).powi(2)).abs() <= 1e-12);
            }
        }
        let theory = CellTheory { theory_mse: None, fr_over_n: None, no_anneal_lower: 0.0, geometric_upper: 0.0, arithmetic_lower: None, oracle_upper: 0.0 };
        let s = SummaryRow::from_rows(&rows, theory);
        let errs: Vec<f64> = rows.iter().filter_map(SweepRow::squared_error).collect();
        prop_assert_eq!(s.n_ok + s.n_failed, rows.len());
        if errs.len() >= 2 {
            let mean = errs.iter().sum::<f64>() / errs.len() as f64;
            prop_assert!((s.mse.unwrap() - mean).abs() <= 1e-12);
        } else {
            prop_assert!(s.mse.is_none());
        }
    }
}
