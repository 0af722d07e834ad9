//! Run configuration: one JSON document, layered over a per-model preset and
//! then patched by `--set path=value` overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use resilience_core::integrate::IntegratorConfig;

/// A point given explicitly or resolved from the model's equilibrium.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Point {
    /// `"auto"`.
    Auto(AutoTag),
    /// Explicit coordinates.
    Values(Vec<f64>),
}

/// The literal string `"auto"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoTag {
    Auto,
}

/// Per-dimension spread: absolute values, or a multiple of the center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Spread {
    Values(Vec<f64>),
    Relative { relative: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub name: String,
    /// Parameter overrides. Values are numbers or the strings `"inf"` / `"-inf"`.
    #[serde(default)]
    pub params: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormConfig {
    Euclidean,
    /// Ellipsoid scaled by the center itself.
    Relative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum UnsafeConfig {
    Above {
        dim: usize,
        threshold: f64,
    },
    Below {
        dim: usize,
        threshold: f64,
    },
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    /// `x[dim] > params[param] + offset`, resolved per parameter point.
    AboveParam {
        dim: usize,
        param: String,
        offset: f64,
    },
    /// Balls around the model's other stable equilibria, if any.
    CompetingAttractors {
        radius: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttractorConfig {
    pub center: Point,
    pub capture_radius: f64,
    pub norm: NormConfig,
    #[serde(default)]
    pub dwell_time: f64,
    #[serde(default, rename = "unsafe")]
    pub unsafe_regions: Vec<UnsafeConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanConfig {
    pub center: Point,
    pub std: Spread,
    pub count: usize,
    #[serde(default)]
    pub frozen_dims: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceKindConfig {
    Euclidean,
    Energy,
    Relative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistanceConfig {
    pub kind: DistanceKindConfig,
    /// Scale for the relative distance; defaults to the attractor center.
    #[serde(default)]
    pub scale: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RestrictedConfig {
    /// Scale per dimension; `None` means the attractor center.
    #[serde(default)]
    pub scale: Option<Vec<f64>>,
    pub radius_sq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasuresConfig {
    pub tau: f64,
    pub t_eps: f64,
    #[serde(default)]
    pub restricted: Option<RestrictedConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub initial_step: f64,
    pub max_step: f64,
    pub t_max: f64,
    pub max_steps: u64,
}

impl Default for IntegratorSection {
    fn default() -> Self {
        IntegratorConfig::default().into()
    }
}

impl From<IntegratorConfig> for IntegratorSection {
    fn from(c: IntegratorConfig) -> Self {
        Self {
            rel_tol: c.rel_tol,
            abs_tol: c.abs_tol,
            initial_step: c.initial_step,
            max_step: c.max_step,
            t_max: c.t_max,
            max_steps: c.max_steps,
        }
    }
}

impl From<&IntegratorSection> for IntegratorConfig {
    fn from(s: &IntegratorSection) -> Self {
        IntegratorConfig {
            rel_tol: s.rel_tol,
            abs_tol: s.abs_tol,
            initial_step: s.initial_step,
            max_step: s.max_step,
            t_max: s.t_max,
            max_steps: s.max_steps,
        }
    }
}

/// A swept parameter range. Every name in `parameters` is set to the same value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub parameters: Vec<String>,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
    /// Per-point sample count; defaults to `perturbation.count`.
    #[serde(default)]
    pub count: Option<usize>,
}

impl SweepConfig {
    /// `start, start + step, ...` up to and including `stop` (within a
    /// millionth of a step).
    pub fn values(&self) -> Vec<f64> {
        grid(self.start, self.stop, self.step)
    }
}

fn grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step + 1e-6).floor();
    if n.is_nan() || n < 0.0 {
        return Vec::new();
    }
    (0..=n as usize).map(|i| start + i as f64 * step).collect()
}

/// A harvesting strategy: each named parameter is set to `coefficient * t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyConfig {
    pub name: String,
    pub coefficients: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParetoConfig {
    pub strategies: Vec<StrategyConfig>,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
    #[serde(default)]
    pub count: Option<usize>,
}

impl ParetoConfig {
    pub fn values(&self) -> Vec<f64> {
        grid(self.start, self.stop, self.step)
    }
}

/// Everything a subcommand needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub attractor: AttractorConfig,
    pub perturbation: PlanConfig,
    pub distance: DistanceConfig,
    pub measures: MeasuresConfig,
    #[serde(default)]
    pub integrator: IntegratorSection,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub pareto: Option<ParetoConfig>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

/// Preset for a bundled model, as a JSON document.
pub fn preset(model: &str) -> anyhow::Result<Value> {
    let v = match model {
        "solow" => json!({
            "model": { "name": "solow", "params": {} },
            "attractor": {
                "center": "auto", "capture_radius": 0.01, "norm": "euclidean",
                "unsafe": [ { "kind": "competing_attractors", "radius": 0.01 } ]
            },
            "perturbation": { "center": "auto", "std": [1.5], "count": 2000 },
            "distance": { "kind": "euclidean" },
            "measures": { "tau": 30.0, "t_eps": 1.0, "restricted": { "scale": [1.0], "radius_sq": 6.25 } },
            "integrator": IntegratorSection::default(),
            "seed": 1
        }),
        "wagon" => json!({
            "model": { "name": "wagon", "params": {} },
            "attractor": {
                "center": "auto", "capture_radius": 0.01, "norm": "euclidean",
                "unsafe": [ { "kind": "above_param", "dim": 0, "param": "a", "offset": -0.01 } ]
            },
            "perturbation": { "center": "auto", "std": [5.0, 5.0], "count": 1000 },
            "distance": { "kind": "energy" },
            "measures": { "tau": 5.0, "t_eps": 1.0 },
            "integrator": IntegratorSection::default(),
            "seed": 1
        }),
        "fish" => json!({
            "model": { "name": "fish", "params": { "h_J": 0.5, "h_A": 0.5 } },
            "attractor": { "center": "auto", "capture_radius": 0.1, "norm": "relative" },
            "perturbation": { "center": "auto", "std": { "relative": 0.5 }, "count": 2000 },
            "distance": { "kind": "relative" },
            "measures": { "tau": 5.0, "t_eps": 1.0, "restricted": { "radius_sq": 0.25 } },
            "integrator": IntegratorSection::default(),
            "seed": 1
        }),
        other => bail!("unknown model '{other}' (expected one of solow, wagon, fish)"),
    };
    Ok(v)
}

/// Recursively overlays `top` onto `base`. Objects merge key by key; anything
/// else replaces.
pub fn merge(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Applies one `path.to.key=value` override. The value is parsed as JSON and
/// falls back to a plain string.
pub fn apply_set(doc: &mut Value, assignment: &str) -> anyhow::Result<()> {
    let (path, raw) =
        assignment.split_once('=').ok_or_else(|| anyhow!("override '{assignment}' is not of the form path=value"))?;
    let value: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut cur = doc;
    let keys: Vec<&str> = path.split('.').collect();
    for (i, key) in keys.iter().enumerate() {
        if key.is_empty() {
            bail!("override path '{path}' has an empty segment");
        }
        if !cur.is_object() {
            if cur.is_null() {
                *cur = Value::Object(Default::default());
            } else {
                bail!("override path '{path}': '{}' is not an object", keys[..i].join("."));
            }
        }
        let obj = cur.as_object_mut().expect("checked above");
        if i + 1 == keys.len() {
            obj.insert((*key).to_string(), value);
            return Ok(());
        }
        cur = obj.entry((*key).to_string()).or_insert(Value::Null);
    }
    Ok(())
}

/// Reads a config file (if any), applies overrides, layers the result over
/// the preset of the model it names (default `solow`), and deserializes.
pub fn load(path: Option<&Path>, sets: &[String]) -> anyhow::Result<RunConfig> {
    let mut user = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
            serde_json::from_str::<Value>(&text).with_context(|| format!("parsing config {}", p.display()))?
        }
        None => Value::Object(Default::default()),
    };
    for s in sets {
        apply_set(&mut user, s)?;
    }
    let name = user
        .pointer("/model/name")
        .map(|v| v.as_str().map(str::to_string).ok_or_else(|| anyhow!("model.name must be a string")))
        .transpose()?
        .unwrap_or_else(|| "solow".to_string());
    let mut doc = preset(&name)?;
    merge(&mut doc, user);
    let cfg: RunConfig = serde_json::from_value(doc).context("invalid configuration")?;
    cfg.validate()?;
    Ok(cfg)
}

/// A parameter value from the config: a number, an `"inf"`-style string, or
/// a Solow variant name for `variant`.
pub fn param_value(key: &str, v: &Value) -> anyhow::Result<f64> {
    match v {
        Value::Number(n) => n.as_f64().ok_or_else(|| anyhow!("parameter '{key}' is not a float")),
        Value::String(s) => {
            if let Ok(v) = s.trim().parse::<f64>() {
                return Ok(v);
            }
            match resilience_core::models::SolowVariant::from_name(s.trim()) {
                Some(v) if key == "variant" => Ok(f64::from(v.code())),
                _ => bail!("parameter '{key}' has non-numeric value '{s}'"),
            }
        }
        other => bail!("parameter '{key}' must be a number, got {other}"),
    }
}

impl RunConfig {
    /// Checks the invariants serde cannot express.
    pub fn validate(&self) -> anyhow::Result<()> {
        if self.perturbation.count == 0 {
            bail!("perturbation.count must be at least 1");
        }
        if let Some(w) = self.workers {
            if w == 0 {
                bail!("workers must be at least 1");
            }
        }
        for (k, v) in &self.model.params {
            param_value(k, v)?;
        }
        // model and parameter names are checked by building the model once
        resilience_core::models::Model::build(&self.model.name, &self.base_params()?)
            .map_err(|e| anyhow!("model: {e}"))?;
        IntegratorConfig::from(&self.integrator).validate().map_err(|e| anyhow!("integrator: {e}"))?;
        if let Some(s) = &self.sweep {
            check_range("sweep", s.start, s.stop, s.step, s.count)?;
            if s.parameters.is_empty() {
                bail!("sweep.parameters must name at least one parameter");
            }
            self.check_param_names(s.parameters.iter())?;
        }
        if let Some(p) = &self.pareto {
            check_range("pareto", p.start, p.stop, p.step, p.count)?;
            if p.strategies.is_empty() {
                bail!("pareto.strategies must not be empty");
            }
            for s in &p.strategies {
                self.check_param_names(s.coefficients.keys())?;
            }
        }
        Ok(())
    }

    fn check_param_names<'a>(&self, names: impl Iterator<Item = &'a String>) -> anyhow::Result<()> {
        let known: Vec<&str> = resilience_core::models::param_names(&self.model.name);
        for n in names {
            if !known.contains(&n.as_str()) {
                bail!("model '{}' has no parameter '{n}'", self.model.name);
            }
        }
        Ok(())
    }

    /// Model parameter overrides as `(name, value)` pairs.
    pub fn base_params(&self) -> anyhow::Result<Vec<(String, f64)>> {
        self.model.params.iter().map(|(k, v)| Ok((k.clone(), param_value(k, v)?))).collect()
    }

    pub fn integrator_config(&self) -> IntegratorConfig {
        IntegratorConfig::from(&self.integrator)
    }
}

fn check_range(what: &str, start: f64, stop: f64, step: f64, count: Option<usize>) -> anyhow::Result<()> {
    if !(start.is_finite() && stop.is_finite() && step > 0.0) {
        bail!("{what}: start and stop must be finite and step positive");
    }
    if stop < start {
        bail!("{what}: empty range ({start} > {stop})");
    }
    if count == Some(0) {
        bail!("{what}.count must be at least 1");
    }
    Ok(())
}
