//! Subcommands.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};

use resilience_core::models::{param_names, Model, MODEL_NAMES};
use resilience_core::DynamicalSystem;

use crate::config::{self, RunConfig};
use crate::harness::{report_for, setup_point, Harness, PointResult};
use crate::io;

#[derive(Debug, Parser)]
#[command(name = "resilience", version, about = "Monte-Carlo stability and resilience measures for ODE attractors")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every computing subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// JSON config; omitted sections come from the model's preset.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override a config key, e.g. `--set model.params.k=0.3` (repeatable).
    #[arg(long = "set", value_name = "PATH=VALUE")]
    pub sets: Vec<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify one perturbation sample; writes outcomes.csv and outcomes.meta.json.
    Classify {
        #[command(flatten)]
        common: Common,
        /// Classify these initial conditions instead of drawing a sample.
        #[arg(long)]
        samples: Option<PathBuf>,
        /// Also write the drawn sample to samples.csv.
        #[arg(long)]
        export_samples: bool,
    },
    /// Compute every measure from one sample; writes report.csv and report.json.
    Measures {
        #[command(flatten)]
        common: Common,
        /// Use an existing outcomes file instead of classifying.
        #[arg(long)]
        outcomes: Option<PathBuf>,
    },
    /// One report row per value of the swept parameter(s); writes sweep.csv.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
    /// Yield and measures along each harvesting strategy; writes pareto.csv.
    Pareto {
        #[command(flatten)]
        common: Common,
    },
    /// Bundled models.
    Models {
        #[command(subcommand)]
        action: ModelsAction,
    },
}

#[derive(Debug, Subcommand)]
pub enum ModelsAction {
    /// List models with their default parameters.
    List,
}

/// Loads the config and applies the dedicated flags on top of `--set`.
pub fn load_config(c: &Common) -> anyhow::Result<RunConfig> {
    let mut sets = c.sets.clone();
    if let Some(s) = c.seed {
        sets.push(format!("seed={s}"));
    }
    if let Some(w) = c.workers {
        sets.push(format!("workers={w}"));
    }
    if let Some(o) = &c.out {
        sets.push(format!("out={}", serde_json::Value::String(o.display().to_string())));
    }
    config::load(c.config.as_deref(), &sets)
}

fn out_dir(cfg: &RunConfig) -> anyhow::Result<PathBuf> {
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
    Ok(dir)
}

fn single_point(
    harness: &Harness,
    cfg: &RunConfig,
    samples: Option<&Path>,
) -> anyhow::Result<(crate::PointSetup, Vec<Vec<f64>>, Vec<resilience_core::TrajectoryOutcome>)> {
    let setup = setup_point(cfg, &[], cfg.perturbation.count, None)?;
    let drawn = match samples {
        Some(p) => io::read_samples(p, setup.model.dim())?,
        None => harness.draw(&setup)?,
    };
    let outcomes = harness.classify(&setup, &drawn);
    Ok((setup, drawn, outcomes))
}

/// Runs a parsed command line.
pub fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Models { action: ModelsAction::List } => {
            for name in MODEL_NAMES {
                let m = Model::build(name, &[]).map_err(|e| anyhow!("{e}"))?;
                let defaults: Vec<String> = m.params().iter().map(|(k, v)| format!("{k}={v}")).collect();
                println!("{name} (dim {}): {}", m.dim(), defaults.join(", "));
                println!("  settable: {}", param_names(name).join(", "));
            }
            Ok(())
        }
        Command::Classify { common, samples, export_samples } => {
            let cfg = load_config(&common)?;
            let dir = out_dir(&cfg)?;
            let harness = Harness::new(cfg.workers)?;
            let (setup, drawn, outcomes) = single_point(&harness, &cfg, samples.as_deref())?;
            io::write_outcomes(&dir.join("outcomes.csv"), &outcomes)?;
            io::write_metadata(&dir.join("outcomes.meta.json"), &io::metadata(&cfg, Some(&setup), "classify"))?;
            if export_samples {
                io::write_samples(&dir.join("samples.csv"), &drawn)?;
            }
            Ok(())
        }
        Command::Measures { common, outcomes } => {
            let cfg = load_config(&common)?;
            let dir = out_dir(&cfg)?;
            let harness = Harness::new(cfg.workers)?;
            let (setup, outcomes) = match outcomes {
                Some(p) => {
                    let setup = setup_point(&cfg, &[], cfg.perturbation.count, None)?;
                    let o = io::read_outcomes(&p)?;
                    if let Some(bad) = o.iter().find(|o| o.initial_condition.len() != setup.model.dim()) {
                        return Err(anyhow!(
                            "outcomes have {} state columns, model '{}' has {}",
                            bad.initial_condition.len(),
                            cfg.model.name,
                            setup.model.dim()
                        ));
                    }
                    (setup, o)
                }
                None => {
                    let (setup, _, o) = single_point(&harness, &cfg, None)?;
                    io::write_outcomes(&dir.join("outcomes.csv"), &o)?;
                    io::write_metadata(&dir.join("outcomes.meta.json"), &io::metadata(&cfg, Some(&setup), "measures"))?;
                    (setup, o)
                }
            };
            let report = report_for(&setup, &outcomes)?;
            let point = PointResult {
                values: Vec::new(),
                status: "ok".into(),
                equilibrium: Some(setup.equilibrium.state.clone()),
                report: Some(report),
                d_norm_kind: setup.distance.kind(),
                count: outcomes.len(),
                seed: cfg.seed,
            };
            io::write_report(&dir, &cfg, &point, setup.model.dim())
        }
        Command::Sweep { common } => {
            let cfg = load_config(&common)?;
            let dir = out_dir(&cfg)?;
            let harness = Harness::new(cfg.workers)?;
            let rows = harness.sweep(&cfg)?;
            let dim = Model::build(&cfg.model.name, &[]).map_err(|e| anyhow!("{e}"))?.dim();
            io::write_sweep(&dir.join("sweep.csv"), &cfg, &rows, dim)?;
            let json = serde_json::Value::Array(rows.iter().map(io::report_json).collect());
            io::write_metadata(&dir.join("sweep.json"), &json)?;
            io::write_metadata(&dir.join("sweep.meta.json"), &io::metadata(&cfg, None, "sweep"))
        }
        Command::Pareto { common } => {
            let cfg = load_config(&common)?;
            let dir = out_dir(&cfg)?;
            let harness = Harness::new(cfg.workers)?;
            let rows = harness.pareto(&cfg)?;
            let dim = Model::build(&cfg.model.name, &[]).map_err(|e| anyhow!("{e}"))?.dim();
            io::write_pareto(&dir.join("pareto.csv"), &cfg, &rows, dim)?;
            io::write_metadata(&dir.join("pareto.meta.json"), &io::metadata(&cfg, None, "pareto"))
        }
    }
}
