//! Checks against independent oracles: closed forms, reference integrations
//! and plain quadrature written out here.

use resilience_core::attractor::{AttractorSpec, UnsafeRegion};
use resilience_core::distance::DistanceSpec;
use resilience_core::integrate::{classify, integrate_to, IntegratorConfig, Verdict};
use resilience_core::measures::{estimate_d, lambda_max, lambda_max_with_step, JACOBIAN_STEP};
use resilience_core::models::fish::{Fish, FishParams};
use resilience_core::models::solow::{Solow, SolowVariant};
use resilience_core::models::wagon::{Wagon, WagonParams};
use resilience_core::sample::PerturbationPlan;
use resilience_core::DynamicalSystem;

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn wagon_return_time_matches_tight_reference() {
    let w = Wagon::new(WagonParams::default()).unwrap();
    let xe = w.stable_equilibrium().unwrap();
    let att = AttractorSpec::ball(vec![xe, 0.0], 0.01).unwrap();
    let ic = [xe + 0.5, 0.0];
    let coarse = classify(&w, &att, &ic, &IntegratorConfig::default());
    let reference = IntegratorConfig { rel_tol: 1e-9, abs_tol: 1e-12, ..IntegratorConfig::default() };
    let fine = classify(&w, &att, &ic, &reference);
    assert_eq!(coarse.verdict, Verdict::Safe);
    assert_eq!(fine.verdict, Verdict::Safe);
    let (t, r) = (coarse.return_time.unwrap(), fine.return_time.unwrap());
    assert!((t - r).abs() < 0.01 * r, "{t} vs {r}");
}

#[test]
fn undamped_wagon_conserves_energy() {
    let w = Wagon::new(WagonParams { c: 0.0, k_m: 0.0, ..WagonParams::default() }).unwrap();
    let k = w.params().k;
    let energy = |x: &[f64]| 0.5 * k * x[0] * x[0] + 0.5 * x[1] * x[1];
    for x0 in [[1.0, 0.0], [0.5, 0.5], [-3.0, 1.0], [2.0, -2.0]] {
        let x = integrate_to(&w, &x0, 100.0, &IntegratorConfig::default()).unwrap();
        let drift = (energy(&x) - energy(&x0)).abs() / energy(&x0);
        assert!(drift < 1e-4, "{x0:?}: drift {drift}");
    }
}

#[test]
fn linear_wagon_lambda_is_repeated_root() {
    let w = Wagon::new(WagonParams { k: 0.25, k_m: 0.0, ..WagonParams::default() }).unwrap();
    let l = lambda_max(&w, &[0.0, 0.0]).unwrap();
    assert!((l.lambda_max + 0.5).abs() < 1e-4, "{}", l.lambda_max);
}

fn harvested_fish() -> (Fish, Vec<f64>) {
    let f = Fish::new(FishParams { h_J: 0.5, h_A: 0.5, ..FishParams::default() }).unwrap();
    let eq = f.equilibrium(None).unwrap();
    assert!(!eq.extinct);
    (f, eq.state)
}

#[test]
fn fish_jacobian_is_step_consistent() {
    let (f, eq) = harvested_fish();
    let full = lambda_max_with_step(&f, &eq, JACOBIAN_STEP).unwrap();
    let half = lambda_max_with_step(&f, &eq, JACOBIAN_STEP / 2.0).unwrap();
    let key = |e: &resilience_core::linalg::Eigenvalue| (e.re, e.im);
    let mut a: Vec<_> = full.eigenvalues.iter().map(key).collect();
    let mut b: Vec<_> = half.eigenvalues.iter().map(key).collect();
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    for ((ar, ai), (br, bi)) in a.iter().zip(&b) {
        let scale = ar.hypot(*ai);
        assert!(((ar - br).hypot(ai - bi)) < 1e-5 * scale, "{a:?} vs {b:?}");
    }
    assert!(full.lambda_max < 0.0);
}

#[test]
fn fish_plan_mean_matches_truncated_normal() {
    let (f, eq) = harvested_fish();
    let std: Vec<f64> = eq.iter().map(|v| 0.5 * v).collect();
    let n = 100_000;
    let plan = PerturbationPlan::new(eq.clone(), std.clone(), n, 11);
    let samples = plan.draw(|x| f.admissible(x)).unwrap();
    for i in 0..3 {
        let (mu, s) = (eq[i], std[i]);
        let pdf = |x: f64| (-0.5 * ((x - mu) / s).powi(2)).exp();
        let hi = mu + 12.0 * s;
        let z = simpson(pdf, 0.0, hi, 20_000);
        let m1 = simpson(|x| x * pdf(x), 0.0, hi, 20_000) / z;
        let m2 = simpson(|x| x * x * pdf(x), 0.0, hi, 20_000) / z;
        let se = ((m2 - m1 * m1) / n as f64).sqrt();
        let mean = samples.iter().map(|x| x[i]).sum::<f64>() / n as f64;
        assert!((mean - m1).abs() < 3.0 * se, "dim {i}: {mean} vs {m1} (se {se})");
    }
}

#[test]
fn fish_samples_all_return() {
    let (f, eq) = harvested_fish();
    let std: Vec<f64> = eq.iter().map(|v| 0.5 * v).collect();
    let plan = PerturbationPlan::new(eq.clone(), std, 300, 5);
    let att = AttractorSpec::new(
        eq.clone(),
        0.1,
        resilience_core::CaptureNorm::RelativeEllipsoid(eq.clone()),
        0.0,
        Vec::new(),
    )
    .unwrap();
    for ic in plan.draw(|x| f.admissible(x)).unwrap() {
        let o = classify(&f, &att, &ic, &IntegratorConfig::default());
        assert_eq!(o.verdict, Verdict::Safe, "{ic:?}");
    }
}

#[test]
fn wagon_energy_distance_matches_grid_work() {
    let p = WagonParams { k: 0.3, y_limit: 2.0, ..WagonParams::default() };
    let w = Wagon::new(p).unwrap();
    let xe = w.stable_equilibrium().unwrap();
    let att = AttractorSpec::ball(vec![xe, 0.0], 0.01)
        .unwrap()
        .with_unsafe(UnsafeRegion::Above { dim: 0, threshold: p.a - 0.01 })
        .unwrap();
    let plan = PerturbationPlan::new(vec![xe, 0.0], vec![5.0, 5.0], 1000, 3);
    let outcomes: Vec<_> = plan
        .draw(|x| w.admissible(x))
        .unwrap()
        .iter()
        .map(|ic| classify(&w, &att, ic, &IntegratorConfig::default()))
        .collect();
    let dist = DistanceSpec::energy(xe, p.energy()).unwrap();
    let d = estimate_d(&outcomes, &dist).expect("some trajectories are lost");

    // Work against the net force, on a dense grid.
    let force = |x: f64| p.k * x - p.k_m / ((x - p.a) * (x - p.a));
    let work = |x0: f64| {
        let sign = if x0 > xe { 1.0 } else { -1.0 };
        simpson(|x| (sign * force(x)).max(0.0), xe, x0, 200_000).abs()
    };
    let oracle = outcomes
        .iter()
        .filter(|o| o.verdict != Verdict::Safe)
        .map(|o| 0.5 * p.m * o.initial_condition[1].powi(2) + work(o.initial_condition[0]))
        .fold(f64::INFINITY, f64::min);
    assert!((d.value - oracle).abs() < 1e-6 * oracle.max(1.0), "{} vs {oracle}", d.value);
}

#[test]
fn solow_fc_root_is_a_bisection_root() {
    let m = Solow::variant(SolowVariant::Fc).unwrap();
    let e1 = m.unstable_equilibrium().unwrap();
    let (mut lo, mut hi) = (1e-3, m.stable_equilibrium() - 1e-3);
    let g = |x: f64| m.growth(x);
    // g < 0 just above 0 and > 0 just below E.
    assert!(g(lo) < 0.0 && g(hi) > 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid
        } else {
            hi = mid
        }
    }
    assert!((e1 - lo).abs() < 1e-9, "{e1} vs {lo}");
}
