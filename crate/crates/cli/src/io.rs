//! File formats: outcomes and samples CSV, report CSV/JSON, metadata sidecar.
//!
//! Floats are written with 17 significant digits in CSV; absent values are
//! empty fields. JSON numbers use the shortest representation that round-trips
//! exactly; non-finite values become the strings `"inf"`, `"-inf"`, `"nan"`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{anyhow, bail, Context};
use serde_json::{json, Value};

use resilience_core::integrate::{TrajectoryOutcome, Verdict};
use resilience_core::measures::{MeasureReport, MinDistance};

use crate::config::RunConfig;
use crate::harness::{ParetoRow, PointResult, PointSetup};

/// `{:.16e}` for finite values.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// JSON number, or a string for non-finite values.
pub fn json_f64(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::String(fmt_f64(v))
    }
}

fn json_vec(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|x| json_f64(*x)).collect())
}

fn parse_f64(field: &str, column: &str, line: u64) -> anyhow::Result<f64> {
    field.trim().parse::<f64>().map_err(|_| anyhow!("line {line}, column '{column}': '{field}' is not a number"))
}

fn writer(path: &Path) -> anyhow::Result<csv::Writer<BufWriter<File>>> {
    let f = File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(csv::WriterBuilder::new().from_writer(BufWriter::new(f)))
}

/// Outcomes header: `idx, x1..xn, verdict, return_time, term_x1..term_xn`.
pub fn outcome_header(dim: usize) -> Vec<String> {
    let mut h = vec!["idx".to_string()];
    h.extend((1..=dim).map(|i| format!("x{i}")));
    h.push("verdict".into());
    h.push("return_time".into());
    h.extend((1..=dim).map(|i| format!("term_x{i}")));
    h
}

pub fn write_outcomes(path: &Path, outcomes: &[TrajectoryOutcome]) -> anyhow::Result<()> {
    let dim = outcomes.first().map_or(0, |o| o.initial_condition.len());
    let mut w = writer(path)?;
    w.write_record(outcome_header(dim))?;
    for (i, o) in outcomes.iter().enumerate() {
        let mut rec = vec![i.to_string()];
        rec.extend(o.initial_condition.iter().map(|v| fmt_f64(*v)));
        rec.push(o.verdict.name().to_string());
        rec.push(fmt_opt(o.return_time));
        rec.extend(o.terminal_state.iter().map(|v| fmt_f64(*v)));
        w.write_record(rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads an outcomes file, checking the header column by column.
pub fn read_outcomes(path: &Path) -> anyhow::Result<Vec<TrajectoryOutcome>> {
    let mut r = csv::ReaderBuilder::new().from_path(path).with_context(|| format!("cannot read {}", path.display()))?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header.len() < 5 || !(header.len() - 3).is_multiple_of(2) {
        bail!(
            "{}: outcome header has {} columns, expected idx, x1..xn, verdict, return_time, term_x1..term_xn",
            path.display(),
            header.len()
        );
    }
    let dim = (header.len() - 3) / 2;
    let expected = outcome_header(dim);
    for (got, want) in header.iter().zip(&expected) {
        if got.trim() != want {
            bail!("{}: unexpected column '{got}', expected '{want}'", path.display());
        }
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let num = |i: usize| parse_f64(&rec[i], &expected[i], line);
        let ic = (1..=dim).map(num).collect::<anyhow::Result<Vec<_>>>()?;
        let verdict: Verdict =
            rec[dim + 1].trim().parse().map_err(|e| anyhow!("line {line}, column 'verdict': {e}"))?;
        let rt_field = rec[dim + 2].trim();
        let return_time = if rt_field.is_empty() { None } else { Some(num(dim + 2)?) };
        let term = (dim + 3..2 * dim + 3).map(num).collect::<anyhow::Result<Vec<_>>>()?;
        let o = TrajectoryOutcome::new(ic, verdict, return_time, term, 0)
            .map_err(|e| anyhow!("line {line}, column 'return_time': {e}"))?;
        out.push(o);
    }
    Ok(out)
}

pub fn write_samples(path: &Path, samples: &[Vec<f64>]) -> anyhow::Result<()> {
    let dim = samples.first().map_or(0, Vec::len);
    let mut w = writer(path)?;
    w.write_record((1..=dim).map(|i| format!("x{i}")))?;
    for s in samples {
        w.write_record(s.iter().map(|v| fmt_f64(*v)))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads samples written by [`write_samples`]; every row must have `dim` columns.
pub fn read_samples(path: &Path, dim: usize) -> anyhow::Result<Vec<Vec<f64>>> {
    let mut r = csv::ReaderBuilder::new().from_path(path).with_context(|| format!("cannot read {}", path.display()))?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let expected: Vec<String> = (1..=dim).map(|i| format!("x{i}")).collect();
    if header != expected {
        bail!(
            "{}: sample header {:?} does not match the model's {dim} state columns {:?}",
            path.display(),
            header,
            expected
        );
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        out.push((0..dim).map(|i| parse_f64(&rec[i], &expected[i], line)).collect::<anyhow::Result<Vec<_>>>()?);
    }
    Ok(out)
}

fn write_json(path: &Path, v: &Value) -> anyhow::Result<()> {
    let f = File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
    let mut w = BufWriter::new(f);
    serde_json::to_writer_pretty(&mut w, v)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Metadata sidecar describing how a file was produced. Contains nothing that
/// depends on the worker count.
pub fn metadata(cfg: &RunConfig, setup: Option<&PointSetup>, command: &str) -> Value {
    let integ = &cfg.integrator;
    let mut v = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "seed": cfg.seed,
        "rng": resilience_core::sample::RNG_NAME,
        "integrator": {
            "method": "Dormand-Prince 5(4), dense output",
            "rel_tol": json_f64(integ.rel_tol),
            "abs_tol": json_f64(integ.abs_tol),
            "initial_step": json_f64(integ.initial_step),
            "max_step": json_f64(integ.max_step),
            "t_max": json_f64(integ.t_max),
            "max_steps": integ.max_steps,
            "event_time_tol": resilience_core::integrate::EVENT_TIME_TOL,
        },
        "model": { "name": cfg.model.name },
        "config": serde_json::to_value(RedactedConfig(cfg)).unwrap_or(Value::Null),
    });
    if let Some(s) = setup {
        let params: serde_json::Map<String, Value> = resilience_core::DynamicalSystem::params(&s.model)
            .into_iter()
            .map(|(k, x)| (k.to_string(), json_f64(x)))
            .collect();
        v["model"]["params"] = Value::Object(params);
        v["equilibrium"] = json!({ "state": json_vec(&s.equilibrium.state), "extinct": s.equilibrium.extinct });
        v["attractor"] = json!({
            "center": json_vec(s.attractor.center()),
            "capture_radius": json_f64(s.attractor.capture_radius()),
            "dwell_time": json_f64(s.attractor.dwell_time()),
        });
        v["perturbation"] = json!({
            "center": json_vec(&s.plan.center),
            "std": json_vec(&s.plan.std),
            "count": s.plan.count,
            "frozen_dims": s.plan.frozen_dims,
        });
        v["distance"] = json!(s.distance.kind().name());
    }
    v
}

/// The config without the fields that must not influence output bytes.
struct RedactedConfig<'a>(&'a RunConfig);

impl serde::Serialize for RedactedConfig<'_> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut v = serde_json::to_value(self.0).map_err(serde::ser::Error::custom)?;
        if let Value::Object(m) = &mut v {
            m.remove("workers");
            m.remove("out");
        }
        v.serialize(s)
    }
}

pub fn write_metadata(path: &Path, meta: &Value) -> anyhow::Result<()> {
    write_json(path, meta)
}

/// Fixed report columns after the leading parameter columns.
pub const REPORT_COLUMNS: [&str; 14] = [
    "p_hat",
    "p_std_err",
    "d_hat",
    "r_hat",
    "r_worst",
    "p_tau",
    "d_tau",
    "lambda_max",
    "n_safe",
    "n_unsafe",
    "n_undetermined",
    "n_tot",
    "seed",
    "r_std_err",
];

/// Columns appended after the fixed set.
pub const EXTRA_COLUMNS: [&str; 6] = ["p_tau_std_err", "tau", "t_eps", "d_norm_kind", "count", "status"];

/// Full report header for `leading` parameter columns and a `dim`-dimensional model.
pub fn report_header(leading: &[String], dim: usize) -> Vec<String> {
    let mut h: Vec<String> = leading.to_vec();
    h.extend(REPORT_COLUMNS.iter().map(|s| s.to_string()));
    h.extend(EXTRA_COLUMNS.iter().map(|s| s.to_string()));
    h.extend((1..=dim).map(|i| format!("eq_{i}")));
    h
}

fn report_cells(p: &PointResult, cfg: &RunConfig, dim: usize) -> Vec<String> {
    let mut c = Vec::new();
    match &p.report {
        Some(r) => {
            c.push(fmt_f64(r.p_hat));
            c.push(fmt_f64(r.p_std_err));
            c.push(fmt_opt(r.d_hat.as_ref().map(|d| d.value)));
            c.push(fmt_f64(r.r_hat));
            c.push(fmt_opt(r.r_worst));
            c.push(fmt_f64(r.p_tau));
            c.push(fmt_opt(r.d_tau.as_ref().map(|d| d.value)));
            c.push(fmt_opt(r.lambda_max));
            c.push(r.n_safe.to_string());
            c.push(r.n_unsafe.to_string());
            c.push(r.n_undetermined.to_string());
            c.push(r.n_tot.to_string());
            c.push(p.seed.to_string());
            c.push(fmt_f64(r.r_std_err));
            c.push(fmt_f64(r.p_tau_std_err));
        }
        None => {
            let zero = fmt_f64(0.0);
            c.extend([zero.clone(), zero.clone(), String::new(), zero.clone(), String::new(), zero.clone()]);
            c.extend([String::new(), String::new()]);
            c.extend(["0", "0", "0", "0"].map(String::from));
            c.push(p.seed.to_string());
            c.extend([zero.clone(), zero]);
        }
    }
    c.push(fmt_f64(cfg.measures.tau));
    c.push(fmt_f64(cfg.measures.t_eps));
    c.push(p.d_norm_kind.name().to_string());
    c.push(p.count.to_string());
    c.push(p.status.clone());
    match &p.equilibrium {
        Some(eq) => c.extend(eq.iter().map(|v| fmt_f64(*v))),
        None => c.extend((0..dim).map(|_| String::new())),
    }
    c
}

/// Writes sweep rows with one leading column per swept parameter.
pub fn write_sweep(path: &Path, cfg: &RunConfig, rows: &[PointResult], dim: usize) -> anyhow::Result<()> {
    let leading: Vec<String> =
        rows.first().map(|r| r.values.iter().map(|(n, _)| n.clone()).collect()).unwrap_or_default();
    let mut w = writer(path)?;
    w.write_record(report_header(&leading, dim))?;
    for r in rows {
        let mut rec: Vec<String> = r.values.iter().map(|(_, v)| fmt_f64(*v)).collect();
        rec.extend(report_cells(r, cfg, dim));
        w.write_record(rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Pareto table: `strategy, t, <parameters>, yield`, then the report columns.
pub fn write_pareto(path: &Path, cfg: &RunConfig, rows: &[ParetoRow], dim: usize) -> anyhow::Result<()> {
    let names: Vec<String> =
        rows.first().map(|r| r.point.values.iter().map(|(n, _)| n.clone()).collect()).unwrap_or_default();
    let mut leading = vec!["strategy".to_string(), "t".to_string()];
    leading.extend(names);
    leading.push("yield".into());
    let mut w = writer(path)?;
    w.write_record(report_header(&leading, dim))?;
    for r in rows {
        let mut rec = vec![r.strategy.clone(), fmt_f64(r.t)];
        rec.extend(r.point.values.iter().map(|(_, v)| fmt_f64(*v)));
        rec.push(fmt_f64(r.harvest_yield));
        rec.extend(report_cells(&r.point, cfg, dim));
        w.write_record(rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Single-point report as CSV (one row) and JSON.
pub fn write_report(dir: &Path, cfg: &RunConfig, point: &PointResult, dim: usize) -> anyhow::Result<()> {
    write_sweep(&dir.join("report.csv"), cfg, std::slice::from_ref(point), dim)?;
    write_json(&dir.join("report.json"), &report_json(point))
}

fn min_json(d: &Option<MinDistance>) -> Value {
    match d {
        Some(d) => {
            json!({ "value": json_f64(d.value), "index": d.index, "initial_condition": json_vec(&d.initial_condition) })
        }
        None => Value::Null,
    }
}

/// JSON object for one point.
pub fn report_json(p: &PointResult) -> Value {
    let params: serde_json::Map<String, Value> = p.values.iter().map(|(n, v)| (n.clone(), json_f64(*v))).collect();
    let mut v = json!({
        "parameters": params,
        "status": p.status,
        "seed": p.seed,
        "count": p.count,
        "d_norm_kind": p.d_norm_kind.name(),
        "equilibrium": p.equilibrium.as_deref().map(json_vec),
    });
    if let Some(r) = &p.report {
        v["report"] = report_body(r);
    }
    v
}

fn report_body(r: &MeasureReport) -> Value {
    json!({
        "p_hat": json_f64(r.p_hat),
        "p_std_err": json_f64(r.p_std_err),
        "d_hat": min_json(&r.d_hat),
        "r_hat": json_f64(r.r_hat),
        "r_std_err": json_f64(r.r_std_err),
        "r_worst": r.r_worst.map(json_f64),
        "p_tau": json_f64(r.p_tau),
        "p_tau_std_err": json_f64(r.p_tau_std_err),
        "d_tau": min_json(&r.d_tau),
        "tau": json_f64(r.tau),
        "t_eps": json_f64(r.t_eps),
        "lambda_max": r.lambda_max.map(json_f64),
        "n_safe": r.n_safe,
        "n_unsafe": r.n_unsafe,
        "n_undetermined": r.n_undetermined,
        "n_tot": r.n_tot,
    })
}

/// Parsed report table: header plus rows of raw fields.
#[derive(Debug, Clone)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn read(path: &Path) -> anyhow::Result<Self> {
        let mut r = csv::Reader::from_path(path).with_context(|| format!("cannot read {}", path.display()))?;
        let header = r.headers()?.iter().map(str::to_string).collect();
        let rows =
            r.records().map(|rec| rec.map(|r| r.iter().map(str::to_string).collect())).collect::<Result<_, _>>()?;
        Ok(Self { header, rows })
    }

    pub fn column(&self, name: &str) -> anyhow::Result<usize> {
        self.header.iter().position(|h| h == name).ok_or_else(|| anyhow!("table has no column '{name}'"))
    }

    /// Numeric value of `name` in row `i`; `None` for an empty field.
    pub fn get(&self, i: usize, name: &str) -> anyhow::Result<Option<f64>> {
        let c = self.column(name)?;
        let f = self.rows[i][c].trim();
        if f.is_empty() {
            Ok(None)
        } else {
            parse_f64(f, name, i as u64 + 2).map(Some)
        }
    }
}
