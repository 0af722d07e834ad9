use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

use resilience_cli::config;
use resilience_cli::harness::setup_point;
use resilience_cli::Harness;

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_resilience")).args(args).output().unwrap()
}

fn ok(args: &[&str]) {
    let out = cli(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn table(path: &Path) -> Vec<BTreeMap<String, String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    r.records().map(|rec| header.iter().cloned().zip(rec.unwrap().iter().map(String::from)).collect()).collect()
}

fn num(row: &BTreeMap<String, String>, key: &str) -> f64 {
    row[key].parse().unwrap_or_else(|e| panic!("{key} = {:?}: {e}", row[key]))
}

fn sets(s: &[&str]) -> config::RunConfig {
    config::load(None, &s.iter().map(|s| s.to_string()).collect::<Vec<_>>()).unwrap()
}

#[test]
fn measures_classify_each_sample_once() {
    let cfg = sets(&["model.name=wagon", "perturbation.count=250"]);
    let harness = Harness::new(Some(3)).unwrap();
    let setup = setup_point(&cfg, &[], 250, None).unwrap();
    harness.measure(&setup).unwrap();
    assert_eq!(harness.classifications(), 250);

    let cfg = sets(&[
        "model.name=fish",
        r#"sweep={"parameters":["h_J","h_A"],"start":0.5,"stop":3.0,"step":0.5,"count":40}"#,
    ]);
    let harness = Harness::new(Some(2)).unwrap();
    let rows = harness.sweep(&cfg).unwrap();
    let measured = rows.iter().filter(|r| r.report.is_some()).count() as u64;
    assert!(measured > 0 && measured < rows.len() as u64);
    assert_eq!(harness.classifications(), 40 * measured);
}

#[test]
fn frozen_attractor_sample_returns_at_once() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    ok(&["classify", "--set", "perturbation.count=1", "--set", "perturbation.frozen_dims=[0]", "--out", out]);
    let rows = table(&dir.path().join("outcomes.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0]["verdict"], "safe");
    assert_eq!(num(&rows[0], "return_time"), 0.0);
    assert_eq!(num(&rows[0], "x1"), 3.0);
    let meta: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("outcomes.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 1);
    assert!(meta["rng"].is_string());
}

#[test]
fn lost_wagons_end_at_the_magnet() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    ok(&["classify", "--set", "model.name=wagon", "--set", "perturbation.count=10000", "--out", out]);
    let rows = table(&dir.path().join("outcomes.csv"));
    let lost: Vec<_> = rows.iter().filter(|r| r["verdict"] == "unsafe").collect();
    assert!(!lost.is_empty());
    for r in lost {
        assert!(num(r, "term_x1") > 5.0 - 0.01, "{r:?}");
    }
}

#[test]
fn schema_mismatch_names_the_column() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("o.csv");
    std::fs::write(&file, "idx,x1,verdikt,return_time,term_x1\n0,3.1,safe,1,3.0\n").unwrap();
    let out = cli(&["measures", "--outcomes", file.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("verdikt"), "{err}");
}

#[test]
fn invalid_config_fails_with_message() {
    let out = cli(&["measures", "--set", "perturbation.count=0"]);
    assert!(!out.status.success());
    assert!(!out.stderr.is_empty());
    let out = cli(&["classify", "--set", "model.params.nonsense=1"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("nonsense"));
}

#[test]
fn adult_yield_is_harvest_times_adults() {
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "pareto",
        "--set",
        "model.name=fish",
        "--set",
        r#"pareto={"strategies":[{"name":"equal","coefficients":{"h_J":1,"h_A":1}},{"name":"adult","coefficients":{"h_A":1}}],"start":0,"stop":3,"step":0.5,"count":50}"#,
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    let rows = table(&dir.path().join("pareto.csv"));
    let adult: Vec<_> = rows.iter().filter(|r| r["strategy"] == "adult").collect();
    assert_eq!(adult.len(), 7);
    for r in &adult {
        let expected = num(r, "t") * num(r, "eq_2");
        assert!((num(r, "yield") - expected).abs() <= 1e-12, "{r:?}");
        assert_eq!(num(r, "h_J"), 0.0);
    }
    // No harvest is the same system for both strategies.
    let zero: Vec<_> = rows.iter().filter(|r| num(r, "t") == 0.0).collect();
    assert_eq!(zero.len(), 2);
    let strip = |r: &BTreeMap<String, String>| {
        let mut r = r.clone();
        r.remove("strategy");
        r
    };
    assert_eq!(strip(zero[0]), strip(zero[1]));
    assert_eq!(num(zero[0], "yield"), 0.0);
}

#[test]
fn ignored_parameter_sweep_is_flat() {
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "sweep",
        "--set",
        r#"sweep={"parameters":["fc_gate_lo"],"start":0.1,"stop":0.5,"step":0.1,"count":300}"#,
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    let rows = table(&dir.path().join("sweep.csv"));
    assert_eq!(rows.len(), 5);
    let first = &rows[0];
    for r in &rows {
        for (key, se) in [("p_hat", "p_std_err"), ("r_hat", "r_std_err"), ("p_tau", "p_tau_std_err")] {
            let band = 3.0 * num(first, se).hypot(num(r, se));
            assert!((num(r, key) - num(first, key)).abs() <= band, "{key}: {r:?}");
        }
        assert_eq!(r["seed"], "1");
        assert_eq!(r["count"], "300");
    }
}

#[test]
fn exported_samples_reclassify_identically() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    ok(&["classify", "--export-samples", "--set", "perturbation.count=200", "--out", a.to_str().unwrap()]);
    let samples = a.join("samples.csv");
    ok(&["classify", "--samples", samples.to_str().unwrap(), "--out", b.to_str().unwrap()]);
    assert_eq!(std::fs::read(a.join("outcomes.csv")).unwrap(), std::fs::read(b.join("outcomes.csv")).unwrap());
}

#[test]
fn models_list_names_every_model() {
    let out = cli(&["models", "list"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for name in ["solow", "wagon", "fish"] {
        assert!(text.contains(name), "{text}");
    }
}
