use proptest::prelude::*;

use resilience_core::attractor::{AttractorSpec, UnsafeRegion};
use resilience_core::distance::DistanceSpec;
use resilience_core::integrate::{classify, integrate_to, IntegratorConfig, Verdict};
use resilience_core::measures::estimate_basin_time;
use resilience_core::models::fish::{Fish, FishParams};
use resilience_core::models::solow::{Solow, SolowVariant};
use resilience_core::models::wagon::{Wagon, WagonParams, BROKEN};
use resilience_core::DynamicalSystem;

fn wagon_attractor(w: &Wagon) -> AttractorSpec {
    let xe = w.stable_equilibrium().unwrap();
    AttractorSpec::ball(vec![xe, 0.0], 0.01)
        .unwrap()
        .with_unsafe(UnsafeRegion::Above { dim: 0, threshold: w.params().a - 0.01 })
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn solow_verdicts_survive_tighter_tolerances(x in 0.01f64..8.0) {
        let m = Solow::variant(SolowVariant::Fc).unwrap();
        let e1 = m.unstable_equilibrium().unwrap();
        let radius = 0.01;
        prop_assume!((x - e1).abs() > 10.0 * radius);
        let att = AttractorSpec::ball(vec![m.stable_equilibrium()], radius)
            .unwrap()
            .with_unsafe(UnsafeRegion::Ball { center: vec![0.0], radius })
            .unwrap();
        let cfg = IntegratorConfig::default();
        let a = classify(&m, &att, &[x], &cfg);
        let b = classify(&m, &att, &[x], &cfg.tightened(100.0));
        prop_assert_eq!(a.verdict, b.verdict);
    }

    #[test]
    fn wagon_verdicts_survive_tighter_tolerances(x in -8.0f64..4.9, y in -6.0f64..6.0) {
        let w = Wagon::new(WagonParams::default()).unwrap();
        let att = wagon_attractor(&w);
        let cfg = IntegratorConfig::default();
        let tight = cfg.tightened(100.0);
        // Only ICs whose neighbourhood lies on one side of the basin boundary.
        let r = 10.0 * att.capture_radius();
        let reference = classify(&w, &att, &[x, y], &tight).verdict;
        for (dx, dy) in [(r, 0.0), (-r, 0.0), (0.0, r), (0.0, -r)] {
            prop_assume!(classify(&w, &att, &[x + dx, y + dy], &tight).verdict == reference);
        }
        prop_assert_eq!(classify(&w, &att, &[x, y], &cfg).verdict, reference);
    }

    #[test]
    fn fish_stays_in_positive_orthant(j in 0.0f64..3.0, a in 0.0f64..3.0, r in 0.0f64..2.0, h in 0.0f64..1.5) {
        let f = Fish::new(FishParams { h_J: h, h_A: h, ..FishParams::default() }).unwrap();
        let mut x = vec![j, a, r];
        for _ in 0..20 {
            x = integrate_to(&f, &x, 5.0, &IntegratorConfig::default()).unwrap();
            prop_assert!(x.iter().all(|v| *v >= -1e-6), "{:?}", x);
        }
    }

    #[test]
    fn broken_spring_never_returns(x in -3.0f64..4.9, y in -3.0f64..3.0) {
        // A tiny speed limit breaks the spring on the first step.
        let w = Wagon::new(WagonParams { k: 0.3, y_limit: 1e-300, ..WagonParams::default() }).unwrap();
        let mut dx = [0.0; 2];
        w.rhs(0.0, &[x, y], BROKEN, &mut dx);
        prop_assert_eq!(dx[1], -y + 1.0 / ((x - 5.0) * (x - 5.0)));
        let cfg = IntegratorConfig { t_max: 5000.0, ..IntegratorConfig::default() };
        let o = classify(&w, &wagon_attractor(&w), &[x, y.abs() + 1e-3], &cfg);
        prop_assert_eq!(o.verdict, Verdict::Unsafe);
    }

    #[test]
    fn p_tau_is_monotone_in_tau(ts in proptest::collection::vec(0.0f64..50.0, 1..40), tau in 0.1f64..40.0) {
        use resilience_core::TrajectoryOutcome;
        let outcomes: Vec<_> = ts
            .iter()
            .enumerate()
            .map(|(i, t)| TrajectoryOutcome::new(vec![i as f64], Verdict::Safe, Some(*t), vec![0.0], 1).unwrap())
            .collect();
        let dist = DistanceSpec::euclidean(vec![0.0]);
        let a = estimate_basin_time(&outcomes, tau, &dist).unwrap();
        let b = estimate_basin_time(&outcomes, 2.0 * tau, &dist).unwrap();
        prop_assert!(a.p_tau.value <= b.p_tau.value);
        if let (Some(da), Some(db)) = (a.d_tau, b.d_tau) {
            prop_assert!(da.value <= db.value);
        }
    }
}
