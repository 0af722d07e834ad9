//! Parallel evaluation of parameter points: resolve the attractor, draw one
//! perturbation sample, classify it once, and compute every measure from it.

use std::sync::atomic::{AtomicU64, Ordering};

use anyhow::{anyhow, bail, Context};
use rayon::prelude::*;

use resilience_core::attractor::{AttractorSpec, CaptureNorm, UnsafeRegion};
use resilience_core::distance::DistanceSpec;
use resilience_core::integrate::{classify, IntegratorConfig, TrajectoryOutcome};
use resilience_core::measures::{lambda_max, LocalStability, MeasureParams, MeasureReport};
use resilience_core::models::{harvest_yield, Equilibrium, Model};
use resilience_core::sample::{PerturbationPlan, RestrictedSet};
use resilience_core::{DistanceKind, DynamicalSystem};

use crate::config::{DistanceKindConfig, NormConfig, Point, RunConfig, Spread, UnsafeConfig};

/// Status written for points without a usable attractor.
pub const NO_ATTRACTOR: &str = "no attractor";

/// Everything needed to classify and measure at one parameter point.
#[derive(Debug, Clone)]
pub struct PointSetup {
    pub model: Model,
    pub equilibrium: Equilibrium,
    pub attractor: AttractorSpec,
    pub plan: PerturbationPlan,
    pub distance: DistanceSpec,
    pub measure_params: MeasureParams,
    pub local: Option<LocalStability>,
    pub integrator: IntegratorConfig,
}

/// One row of a sweep or Pareto table.
#[derive(Debug, Clone)]
pub struct PointResult {
    /// Swept parameter values, in column order.
    pub values: Vec<(String, f64)>,
    /// `"ok"`, or why no report was computed.
    pub status: String,
    /// Equilibrium used as the attractor (or the extinct state).
    pub equilibrium: Option<Vec<f64>>,
    pub report: Option<MeasureReport>,
    pub d_norm_kind: DistanceKind,
    pub count: usize,
    pub seed: u64,
}

/// A Pareto row: strategy, curve parameter, yield and the point result.
#[derive(Debug, Clone)]
pub struct ParetoRow {
    pub strategy: String,
    pub t: f64,
    pub harvest_yield: f64,
    pub point: PointResult,
}

/// Worker pool plus a count of classifications performed.
pub struct Harness {
    pool: rayon::ThreadPool,
    classifications: AtomicU64,
}

impl Harness {
    /// `workers = None` uses rayon's default thread count.
    pub fn new(workers: Option<usize>) -> anyhow::Result<Self> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(w) = workers {
            b = b.num_threads(w);
        }
        Ok(Self { pool: b.build().context("building worker pool")?, classifications: AtomicU64::new(0) })
    }

    /// Total trajectories classified so far.
    pub fn classifications(&self) -> u64 {
        self.classifications.load(Ordering::Relaxed)
    }

    /// Draws the perturbation sample of a point (rejecting out-of-domain draws).
    pub fn draw(&self, setup: &PointSetup) -> anyhow::Result<Vec<Vec<f64>>> {
        let model = &setup.model;
        let accept = |x: &[f64]| model.admissible(x);
        self.pool.install(|| {
            (0..setup.plan.count)
                .into_par_iter()
                .map(|i| setup.plan.draw_one(i, &accept).map_err(|e| anyhow!("{e}")))
                .collect()
        })
    }

    /// Classifies `samples`, returning outcomes in sample order.
    pub fn classify(&self, setup: &PointSetup, samples: &[Vec<f64>]) -> Vec<TrajectoryOutcome> {
        self.pool.install(|| {
            samples
                .par_iter()
                .map(|ic| {
                    self.classifications.fetch_add(1, Ordering::Relaxed);
                    classify(&setup.model, &setup.attractor, ic, &setup.integrator)
                })
                .collect()
        })
    }

    /// Draws, classifies and measures at one point.
    pub fn measure(&self, setup: &PointSetup) -> anyhow::Result<(Vec<TrajectoryOutcome>, MeasureReport)> {
        let samples = self.draw(setup)?;
        let outcomes = self.classify(setup, &samples);
        let report = report_for(setup, &outcomes)?;
        Ok((outcomes, report))
    }

    /// Evaluates one parameter point; failures become flagged rows.
    pub fn run_point(
        &self,
        cfg: &RunConfig,
        values: Vec<(String, f64)>,
        count: usize,
        guess: Option<&[f64]>,
    ) -> PointResult {
        let mut row = PointResult {
            values: values.clone(),
            status: "ok".into(),
            equilibrium: None,
            report: None,
            d_norm_kind: distance_kind(cfg.distance.kind),
            count,
            seed: cfg.seed,
        };
        let (model, equilibrium) = match resolve_model(cfg, &values, guess) {
            Ok(m) => m,
            Err(e) => {
                row.status = format!("{NO_ATTRACTOR}: {e:#}");
                return row;
            }
        };
        row.equilibrium = Some(equilibrium.state.clone());
        if equilibrium.extinct {
            row.status = format!("{NO_ATTRACTOR}: extinct");
            return row;
        }
        let setup = match setup_with(cfg, model, equilibrium, count) {
            Ok(s) => s,
            Err(e) => {
                row.status = format!("failed: {e:#}");
                return row;
            }
        };
        match self.measure(&setup) {
            Ok((_, report)) => row.report = Some(report),
            Err(e) => row.status = format!("failed: {e:#}"),
        }
        row
    }

    /// One row per swept value, in sweep order, continuing the equilibrium
    /// from the previous point.
    pub fn sweep(&self, cfg: &RunConfig) -> anyhow::Result<Vec<PointResult>> {
        let sweep = cfg.sweep.as_ref().ok_or_else(|| anyhow!("config has no 'sweep' section"))?;
        let count = sweep.count.unwrap_or(cfg.perturbation.count);
        let mut guess: Option<Vec<f64>> = None;
        let mut rows = Vec::new();
        for v in sweep.values() {
            let values: Vec<(String, f64)> = sweep.parameters.iter().map(|p| (p.clone(), v)).collect();
            let row = self.run_point(cfg, values, count, guess.as_deref());
            if let (Some(eq), true) = (&row.equilibrium, row.status == "ok") {
                guess = Some(eq.clone());
            }
            rows.push(row);
        }
        Ok(rows)
    }

    /// Yield and measures along each strategy curve.
    pub fn pareto(&self, cfg: &RunConfig) -> anyhow::Result<Vec<ParetoRow>> {
        let pareto = cfg.pareto.as_ref().ok_or_else(|| anyhow!("config has no 'pareto' section"))?;
        if cfg.model.name != "fish" {
            bail!("pareto needs a model with a harvest yield (fish)");
        }
        let count = pareto.count.unwrap_or(cfg.perturbation.count);
        let mut names: Vec<String> = Vec::new();
        for s in &pareto.strategies {
            for k in s.coefficients.keys() {
                if !names.contains(k) {
                    names.push(k.clone());
                }
            }
        }
        let mut rows = Vec::new();
        for s in &pareto.strategies {
            let mut guess: Option<Vec<f64>> = None;
            for t in pareto.values() {
                let values: Vec<(String, f64)> =
                    names.iter().map(|n| (n.clone(), s.coefficients.get(n).copied().unwrap_or(0.0) * t)).collect();
                let point = self.run_point(cfg, values.clone(), count, guess.as_deref());
                if point.status == "ok" {
                    guess = point.equilibrium.clone();
                }
                let setting = |name: &str| {
                    values
                        .iter()
                        .find(|(n, _)| n == name)
                        .map(|(_, v)| *v)
                        .or_else(|| cfg.base_params().ok()?.into_iter().find(|(n, _)| n == name).map(|(_, v)| v))
                        .unwrap_or(0.0)
                };
                let harvest_yield = match &point.equilibrium {
                    Some(eq) => harvest_yield(setting("h_J"), setting("h_A"), eq[0], eq[1]),
                    None => 0.0,
                };
                rows.push(ParetoRow { strategy: s.name.clone(), t, harvest_yield, point });
            }
        }
        Ok(rows)
    }
}

fn distance_kind(k: DistanceKindConfig) -> DistanceKind {
    match k {
        DistanceKindConfig::Euclidean => DistanceKind::Euclidean,
        DistanceKindConfig::Energy => DistanceKind::Energy,
        DistanceKindConfig::Relative => DistanceKind::Relative,
    }
}

/// Every measure from one outcome set.
pub fn report_for(setup: &PointSetup, outcomes: &[TrajectoryOutcome]) -> anyhow::Result<MeasureReport> {
    MeasureReport::compute(outcomes, &setup.distance, &setup.measure_params, setup.local.as_ref())
        .map_err(|e| anyhow!("{e}"))
}

fn resolve(point: &Point, eq: &[f64], what: &str) -> anyhow::Result<Vec<f64>> {
    match point {
        Point::Auto(_) => Ok(eq.to_vec()),
        Point::Values(v) if v.len() == eq.len() => Ok(v.clone()),
        Point::Values(v) => bail!("{what} has {} components, the model has {}", v.len(), eq.len()),
    }
}

/// Builds the model at one parameter point and locates its equilibrium.
pub fn resolve_model(
    cfg: &RunConfig,
    values: &[(String, f64)],
    guess: Option<&[f64]>,
) -> anyhow::Result<(Model, Equilibrium)> {
    let mut params = cfg.base_params()?;
    params.extend(values.iter().cloned());
    let model = Model::build(&cfg.model.name, &params).map_err(|e| anyhow!("{e}"))?;
    let equilibrium = model.find_equilibrium(guess).map_err(|e| anyhow!("{e}"))?;
    Ok((model, equilibrium))
}

/// Builds the model and everything derived from it at one parameter point.
pub fn setup_point(
    cfg: &RunConfig,
    values: &[(String, f64)],
    count: usize,
    guess: Option<&[f64]>,
) -> anyhow::Result<PointSetup> {
    let (model, equilibrium) = resolve_model(cfg, values, guess)?;
    if equilibrium.extinct {
        bail!("{NO_ATTRACTOR}: only the extinct state exists");
    }
    setup_with(cfg, model, equilibrium, count)
}

/// Everything derived from a model and its (non-extinct) equilibrium.
pub fn setup_with(cfg: &RunConfig, model: Model, equilibrium: Equilibrium, count: usize) -> anyhow::Result<PointSetup> {
    let eq = &equilibrium.state;
    let dim = model.dim();

    let center = resolve(&cfg.attractor.center, eq, "attractor.center")?;
    let norm = match cfg.attractor.norm {
        NormConfig::Euclidean => CaptureNorm::Euclidean,
        NormConfig::Relative => CaptureNorm::RelativeEllipsoid(center.clone()),
    };
    let model_params = model.params();
    let mut regions = Vec::new();
    for u in &cfg.attractor.unsafe_regions {
        match u {
            UnsafeConfig::Above { dim, threshold } => {
                regions.push(UnsafeRegion::Above { dim: *dim, threshold: *threshold })
            }
            UnsafeConfig::Below { dim, threshold } => {
                regions.push(UnsafeRegion::Below { dim: *dim, threshold: *threshold })
            }
            UnsafeConfig::Ball { center, radius } => {
                regions.push(UnsafeRegion::Ball { center: center.clone(), radius: *radius })
            }
            UnsafeConfig::AboveParam { dim, param, offset } => {
                let v = model_params
                    .iter()
                    .find(|(n, _)| n == param)
                    .map(|(_, v)| *v)
                    .ok_or_else(|| anyhow!("unsafe region refers to unknown parameter '{param}'"))?;
                regions.push(UnsafeRegion::Above { dim: *dim, threshold: v + offset });
            }
            UnsafeConfig::CompetingAttractors { radius } => {
                for c in model.competing_attractors() {
                    regions.push(UnsafeRegion::Ball { center: c, radius: *radius });
                }
            }
        }
    }
    let attractor =
        AttractorSpec::new(center.clone(), cfg.attractor.capture_radius, norm, cfg.attractor.dwell_time, regions)
            .map_err(|e| anyhow!("attractor: {e}"))?;

    let plan_center = resolve(&cfg.perturbation.center, eq, "perturbation.center")?;
    let std = match &cfg.perturbation.std {
        Spread::Values(v) if v.len() == dim => v.clone(),
        Spread::Values(v) => bail!("perturbation.std has {} components, the model has {dim}", v.len()),
        Spread::Relative { relative } => plan_center.iter().map(|c| relative * c.abs()).collect(),
    };
    let plan = PerturbationPlan::new(plan_center, std, count, cfg.seed).freeze(&cfg.perturbation.frozen_dims);
    plan.validate().map_err(|e| anyhow!("perturbation: {e}"))?;

    let distance = match cfg.distance.kind {
        DistanceKindConfig::Euclidean => DistanceSpec::euclidean(center.clone()),
        DistanceKindConfig::Relative => {
            let scale = cfg.distance.scale.clone().unwrap_or_else(|| center.clone());
            DistanceSpec::new(DistanceKind::Relative, center.clone(), None, Some(scale))
                .map_err(|e| anyhow!("distance: {e}"))?
        }
        DistanceKindConfig::Energy => match &model {
            Model::Wagon(w) => {
                DistanceSpec::energy(center[0], w.params().energy()).map_err(|e| anyhow!("distance: {e}"))?
            }
            _ => bail!("the energy distance is only defined for the wagon model"),
        },
    };

    let restricted = match &cfg.measures.restricted {
        Some(r) => {
            let scale = r.scale.clone().unwrap_or_else(|| center.clone());
            Some(RestrictedSet::new(center.clone(), scale, r.radius_sq).map_err(|e| anyhow!("restricted set: {e}"))?)
        }
        None => None,
    };
    let measure_params = MeasureParams { tau: cfg.measures.tau, t_eps: cfg.measures.t_eps, restricted };
    let local = lambda_max(&model, eq).ok();
    Ok(PointSetup {
        model,
        equilibrium,
        attractor,
        plan,
        distance,
        measure_params,
        local,
        integrator: cfg.integrator_config(),
    })
}
