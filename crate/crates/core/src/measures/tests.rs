use super::*;
use crate::system::FnSystem;
use alloc::vec;
use proptest::prelude::*;

fn safe(ic: Vec<f64>, t: f64) -> TrajectoryOutcome {
    TrajectoryOutcome::new(ic.clone(), Verdict::Safe, Some(t), ic, 1).unwrap()
}

fn lost(ic: Vec<f64>) -> TrajectoryOutcome {
    TrajectoryOutcome::new(ic.clone(), Verdict::Unsafe, None, ic, 1).unwrap()
}

fn undetermined(ic: Vec<f64>) -> TrajectoryOutcome {
    TrajectoryOutcome::new(ic.clone(), Verdict::Undetermined, None, ic, 1).unwrap()
}

#[test]
fn p_hat_arithmetic() {
    let all_safe = vec![safe(vec![0.0], 1.0); 4];
    assert_eq!(estimate_p(&all_safe).unwrap().value, 1.0);
    let all_lost = vec![lost(vec![0.0]); 4];
    assert_eq!(estimate_p(&all_lost).unwrap().value, 0.0);
    let mixed = vec![safe(vec![0.0], 1.0), safe(vec![0.0], 1.0), safe(vec![0.0], 1.0), lost(vec![0.0])];
    let p = estimate_p(&mixed).unwrap();
    assert_eq!(p.value, 0.75);
    assert!((p.std_err - 0.2165).abs() < 1e-4);
    assert!(matches!(estimate_p(&[]), Err(crate::Error::Usage(_))));
}

#[test]
fn undetermined_counts_as_not_returning() {
    let o = vec![safe(vec![0.0], 0.0), undetermined(vec![2.0])];
    assert_eq!(estimate_p(&o).unwrap().value, 0.5);
    let d = estimate_d(&o, &DistanceSpec::euclidean(vec![0.0])).unwrap();
    assert_eq!(d.value, 2.0);
}

#[test]
fn d_hat_is_min_over_unsafe() {
    let dist = DistanceSpec::euclidean(vec![0.0]);
    assert!(estimate_d(&[safe(vec![5.0], 1.0)], &dist).is_none());
    let o = vec![lost(vec![3.0]), safe(vec![0.1], 1.0), lost(vec![-1.5]), lost(vec![7.0])];
    let d = estimate_d(&o, &dist).unwrap();
    assert_eq!(d.value, 1.5);
    assert_eq!(d.index, 2);
    assert_eq!(d.initial_condition, vec![-1.5]);
}

#[test]
fn r_hat_arithmetic() {
    assert_eq!(estimate_r(&[safe(vec![0.0], 0.0), safe(vec![0.0], 0.0)], 1.0).unwrap().value, 1.0);
    assert_eq!(estimate_r(&[safe(vec![0.0], 0.0), safe(vec![0.0], 1.0)], 1.0).unwrap().value, 0.75);
    assert_eq!(estimate_r(&[safe(vec![0.0], 0.0), lost(vec![0.0])], 1.0).unwrap().value, 0.5);
    assert!(estimate_r(&[safe(vec![0.0], 0.0)], 0.0).is_err());
}

#[test]
fn r_worst_arithmetic() {
    let set = RestrictedSet::new(vec![0.0], vec![1.0], 1.0).unwrap();
    let o = vec![safe(vec![0.5], 1.0), safe(vec![-0.5], 4.0), safe(vec![3.0], 100.0)];
    assert_eq!(estimate_r_worst(&o, &set, 1.0).unwrap(), Some(0.2));
    let o2 = vec![safe(vec![0.5], 1.0), lost(vec![0.9])];
    assert_eq!(estimate_r_worst(&o2, &set, 1.0).unwrap(), Some(0.0));
    let o3 = vec![safe(vec![5.0], 1.0)];
    assert_eq!(estimate_r_worst(&o3, &set, 1.0).unwrap(), None);
}

#[test]
fn basin_time_arithmetic() {
    let dist = DistanceSpec::euclidean(vec![0.0]);
    let o = vec![safe(vec![1.0], 1.0), safe(vec![2.0], 3.0), safe(vec![3.0], 9.0)];
    let bt = estimate_basin_time(&o, 5.0, &dist).unwrap();
    assert!((bt.p_tau.value - 2.0 / 3.0).abs() < 1e-15);
    assert_eq!(bt.d_tau.unwrap().value, 3.0);

    let fast = vec![safe(vec![1.0], 1.0), safe(vec![2.0], 5.0)];
    let bt = estimate_basin_time(&fast, 5.0, &dist).unwrap();
    assert_eq!(bt.p_tau.value, 1.0);
    assert!(bt.d_tau.is_none());

    let rel = DistanceSpec::relative_to_reference(vec![1.0; 3]).unwrap();
    let o = vec![safe(vec![1.5, 1.0, 1.0], 6.0), lost(vec![1.0, 1.8, 1.0]), safe(vec![1.1, 1.0, 1.0], 2.0)];
    let bt = estimate_basin_time(&o, 5.0, &rel).unwrap();
    assert!((bt.d_tau.unwrap().value - 0.5).abs() < 1e-15);
}

#[test]
fn synthetic_report() {
    // 3 returning (T = 0, 1, 4) and one lost at relative distance 0.5.
    let c = vec![1.0, 1.0, 1.0];
    let o = vec![
        safe(vec![1.2, 1.0, 1.0], 0.0),
        safe(vec![1.0, 1.3, 1.0], 1.0),
        safe(vec![1.0, 1.0, 1.4], 4.0),
        lost(vec![1.5, 1.0, 1.0]),
    ];
    let dist = DistanceSpec::relative_to_reference(c.clone()).unwrap();
    let params = MeasureParams { tau: 5.0, t_eps: 1.0, restricted: Some(RestrictedSet::relative(c, 0.25).unwrap()) };
    let r = MeasureReport::compute(&o, &dist, &params, None).unwrap();
    assert_eq!(r.p_hat, 0.75);
    assert!((r.r_hat - 0.425).abs() < 1e-15);
    assert_eq!(r.p_tau, 0.75);
    assert_eq!(r.d_hat.as_ref().unwrap().value, 0.5);
    assert_eq!(r.d_tau.as_ref().unwrap().value, 0.5);
    // The lost IC sits exactly on the closed boundary of the set.
    assert_eq!(r.r_worst, Some(0.0));
    assert_eq!((r.n_safe, r.n_unsafe, r.n_undetermined, r.n_tot), (3, 1, 0, 4));
    assert!(r.lambda_max.is_none());
}

#[test]
fn lambda_max_scalar_decay() {
    let sys = FnSystem::new(1, |_t, x: &[f64], dx: &mut [f64]| dx[0] = -x[0]);
    let l = lambda_max(&sys, &[0.0]).unwrap();
    assert!((l.lambda_max + 1.0).abs() < 1e-9);
    assert!(matches!(lambda_max(&sys, &[1.0]), Err(crate::Error::Usage(_))));
}

fn outcome_strategy() -> impl Strategy<Value = Vec<TrajectoryOutcome>> {
    proptest::collection::vec((0u8..3, 0.0f64..20.0, -5.0f64..5.0), 1..60).prop_map(|v| {
        v.into_iter()
            .map(|(k, t, x)| match k {
                0 => safe(vec![x], t),
                1 => lost(vec![x]),
                _ => undetermined(vec![x]),
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn report_invariants(o in outcome_strategy(), tau in 0.1f64..30.0, t_eps in 0.1f64..3.0) {
        let dist = DistanceSpec::euclidean(vec![0.0]);
        let params = MeasureParams { tau, t_eps, restricted: None };
        let r = MeasureReport::compute(&o, &dist, &params, None).unwrap();
        prop_assert_eq!(r.n_safe + r.n_unsafe + r.n_undetermined, r.n_tot);
        prop_assert_eq!(r.p_hat, r.n_safe as f64 / r.n_tot as f64);
        prop_assert!(r.p_tau <= r.p_hat);
        if let (Some(dt), Some(dh)) = (&r.d_tau, &r.d_hat) {
            prop_assert!(dt.value <= dh.value);
        }
        prop_assert!(r.r_hat <= r.p_hat / t_eps + 1e-15);
        let again = MeasureReport::compute(&o, &dist, &params, None).unwrap();
        prop_assert_eq!(r, again);
    }

    #[test]
    fn basin_time_monotone_in_tau(o in outcome_strategy(), tau in 0.1f64..20.0, extra in 0.0f64..20.0) {
        let dist = DistanceSpec::euclidean(vec![0.0]);
        let a = estimate_basin_time(&o, tau, &dist).unwrap();
        let b = estimate_basin_time(&o, tau + extra, &dist).unwrap();
        prop_assert!(b.p_tau.value >= a.p_tau.value);
        if let (Some(da), Some(db)) = (&a.d_tau, &b.d_tau) {
            prop_assert!(db.value >= da.value);
        }
        let inf = estimate_basin_time(&o, f64::MAX, &dist).unwrap();
        prop_assert_eq!(inf.p_tau.value, estimate_p(&o).unwrap().value);
    }
}
