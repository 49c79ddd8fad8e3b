//! Command-line pipeline: solve every scenario, cross-evaluate the pooled
//! fronts, score strategic positioning and run the sensitivity analysis.

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use plan_core::positioning::PositioningError;
use plan_core::sensitivity::SensitivityError;
use plan_core::{load_config, ConfigError, RunConfig};
use thiserror::Error;

pub mod stages;
pub mod tables;

/// Exit status of every failed invocation.
pub const FAILURE_EXIT: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        source: csv::Error,
    },
    #[error("{path}: {message}")]
    Schema { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Config {
        path: PathBuf,
        source: ConfigError,
    },
    #[error("missing required argument {0}")]
    MissingArgument(&'static str),
    #[error("no candidates")]
    NoCandidates,
    #[error(transparent)]
    Positioning(#[from] PositioningError),
    #[error(transparent)]
    Sensitivity(#[from] SensitivityError),
    #[error("thread pool: {0}")]
    ThreadPool(#[from] rayon::ThreadPoolBuildError),
}

#[derive(Debug, Parser)]
#[command(name = "plan", version, about = "Scenario-based resource planning and strategic positioning")]
pub struct Cli {
    #[command(subcommand)]
    pub stage: Stage,
    #[command(flatten)]
    pub args: Args,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Stage {
    /// All stages followed by the run manifest
    Run,
    /// Per-scenario fronts
    Solve,
    /// Cross-evaluation of the pooled fronts
    Crosseval,
    /// Positioning metrics
    Position,
    /// Sensitivity bands
    Sensitivity,
}

#[derive(Debug, Clone, clap::Args)]
pub struct Args {
    /// Configuration document
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Master seed, overriding the config and PLAN_SEED
    #[arg(long, global = true, env = "PLAN_SEED")]
    pub seed: Option<u64>,
    /// Worker threads (0 = one per core)
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    /// Dump every assignment during cross-evaluation
    #[arg(long, global = true)]
    pub trace: bool,
}

fn required(value: &Option<PathBuf>, flag: &'static str) -> Result<PathBuf, CliError> {
    value.clone().ok_or(CliError::MissingArgument(flag))
}

/// Load the config at `path` and apply the seed override.
pub fn resolve_config(path: &std::path::Path, seed: Option<u64>) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut config = load_config(&text).map_err(|source| CliError::Config {
        path: path.to_path_buf(),
        source,
    })?;
    if let Some(seed) = seed {
        config.master_seed = seed;
    }
    Ok(config)
}

pub fn execute(stage: Stage, args: &Args) -> Result<Vec<PathBuf>, CliError> {
    let config = resolve_config(&required(&args.config, "--config")?, args.seed)?;
    let out = required(&args.out, "--out")?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(args.jobs).build()?;
    pool.install(|| match stage {
        Stage::Run => stages::run(&config, &out, args.trace).map(|m| vec![m]),
        Stage::Solve => stages::solve(&config, &out),
        Stage::Crosseval => stages::crosseval(&config, &out, args.trace),
        Stage::Position => stages::position(&config, &out),
        Stage::Sensitivity => stages::sensitivity(&config, &out),
    })
}
