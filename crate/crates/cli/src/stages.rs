//! The pipeline stages. Each reads its inputs from and writes its outputs to
//! the output directory, so any stage can be rerun on earlier artifacts.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use plan_core::moea::solve_scenario;
use plan_core::positioning::{Candidate, CandidateSet, PositioningReport};
use plan_core::sensitivity::{probability_sensitivity, weight_sensitivity, PerturbationKind};
use plan_core::{RunConfig, ScenarioFutures};
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::tables::{self, FrontRow};
use crate::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TRACE_DIR: &str = "trace";

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

/// Solve every scenario and write `front_<j>.csv`. Rows are deduplicated by
/// counts and sorted by cost, then descending success rate, then counts.
pub fn solve(config: &RunConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    ensure_dir(out)?;
    let fronts: Vec<Vec<FrontRow>> = (0..config.space.len())
        .into_par_iter()
        .map(|j| {
            let front = solve_scenario(config, j);
            let evaluations = front.evaluations;
            let mut rows: Vec<FrontRow> = front
                .members
                .into_iter()
                .map(|m| FrontRow {
                    counts: m.portfolio.counts().to_vec(),
                    cost: m.objectives.cost,
                    success: m.objectives.success_rate,
                })
                .collect();
            rows.sort_by(|a, b| {
                a.cost
                    .total_cmp(&b.cost)
                    .then(b.success.total_cmp(&a.success))
                    .then_with(|| a.counts.cmp(&b.counts))
            });
            rows.dedup_by(|a, b| a.counts == b.counts);
            info!("scenario {j}: {} front portfolios after {evaluations} evaluations", rows.len());
            rows
        })
        .collect();
    let n = config.catalog.len();
    fronts
        .iter()
        .enumerate()
        .map(|(j, rows)| {
            let path = out.join(tables::front_file(j));
            tables::write_front(&path, n, j, rows)?;
            Ok(path)
        })
        .collect()
}

/// Pool the fronts, evaluate every distinct portfolio on every scenario
/// against the shared futures and write `crosseval.csv`. With `trace`, the
/// assignment of every future is dumped under `trace/`.
pub fn crosseval(config: &RunConfig, out: &Path, trace: bool) -> Result<Vec<PathBuf>, CliError> {
    let n = config.catalog.len();
    let q = config.space.len();
    let mut seen = HashSet::new();
    let mut pooled = Vec::new();
    for j in 0..q {
        for row in tables::read_front(&out.join(tables::front_file(j)), n, j)? {
            if seen.insert(row.counts.clone()) {
                pooled.push(row.counts);
            }
        }
    }
    if pooled.is_empty() {
        return Err(CliError::NoCandidates);
    }
    let futures: Vec<ScenarioFutures> = (0..q)
        .into_par_iter()
        .map(|j| ScenarioFutures::generate(&config.space, j, config.master_seed))
        .collect();
    let catalog = &config.catalog;
    let candidates: Vec<Candidate> = pooled
        .into_par_iter()
        .map(|counts| Candidate {
            cost: catalog.cost(&counts),
            success: futures.iter().map(|f| f.success_rate(&counts, catalog)).collect(),
            counts,
        })
        .collect();
    let set = CandidateSet::new(candidates)?;
    info!("crosseval: {} distinct candidates", set.len());
    let path = out.join(tables::CROSSEVAL_FILE);
    tables::write_crosseval(&path, &set)?;
    let mut written = vec![path];
    if trace {
        written.extend(write_traces(config, out, &set, &futures)?);
    }
    Ok(written)
}

fn write_traces(
    config: &RunConfig,
    out: &Path,
    set: &CandidateSet,
    futures: &[ScenarioFutures],
) -> Result<Vec<PathBuf>, CliError> {
    let dir = out.join(TRACE_DIR);
    ensure_dir(&dir)?;
    let mut written = Vec::new();
    for (id, c) in set.candidates().iter().enumerate() {
        for (j, f) in futures.iter().enumerate() {
            let mut text = String::new();
            for (sim, t) in f.futures().iter().zip(f.traces(&c.counts, &config.catalog)) {
                text.push_str(&format!("# instance {} future {} beta {}\n", sim.instance, sim.future, sim.beta));
                text.push_str(&t.to_table());
            }
            let path = dir.join(format!("portfolio_{id}_scenario_{j}.tsv"));
            std::fs::write(&path, text).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
            written.push(path);
        }
    }
    Ok(written)
}

fn load_candidates(config: &RunConfig, out: &Path) -> Result<CandidateSet, CliError> {
    tables::read_crosseval(&out.join(tables::CROSSEVAL_FILE), config.catalog.len(), config.space.len())
}

/// Compute positioning metrics of the crosseval pool and write
/// `positioning.csv`.
pub fn position(config: &RunConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let set = load_candidates(config, out)?;
    let report = PositioningReport::compute(&set, &config.catalog, &config.probabilities(), &config.positioning)?;
    info!(
        "positioning: {} of {} candidates non-dominated",
        report.non_dominated.iter().filter(|&&f| f).count(),
        set.len()
    );
    let path = out.join(tables::POSITIONING_FILE);
    tables::write_positioning(&path, &set, &report)?;
    Ok(vec![path])
}

/// Quartile bands under probability and weight perturbation, written to
/// `sensitivity.csv`.
pub fn sensitivity(config: &RunConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let set = load_candidates(config, out)?;
    let bands = vec![
        (PerturbationKind::Probability, probability_sensitivity(&set, &config.catalog, config)?),
        (PerturbationKind::Weight, weight_sensitivity(&set, &config.catalog, config)?),
    ];
    let path = out.join(tables::SENSITIVITY_FILE);
    tables::write_sensitivity(&path, &bands)?;
    Ok(vec![path])
}

#[derive(Debug, Serialize)]
struct Manifest {
    tool_version: &'static str,
    config_digest: String,
    master_seed: u64,
    timings_ms: BTreeMap<&'static str, u128>,
    files: BTreeMap<String, String>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Run all four stages and finish with `manifest.json`. A manifest left by
/// an earlier run is removed first, so its presence marks a complete run.
pub fn run(config: &RunConfig, out: &Path, trace: bool) -> Result<PathBuf, CliError> {
    ensure_dir(out)?;
    let manifest_path = out.join(MANIFEST_FILE);
    match std::fs::remove_file(&manifest_path) {
        Err(e) if e.kind() != std::io::ErrorKind::NotFound => {
            return Err(CliError::Io {
                path: manifest_path,
                source: e,
            })
        }
        _ => {}
    }

    let mut timings = BTreeMap::new();
    let mut files = Vec::new();
    let mut timed = |name: &'static str, stage: &dyn Fn() -> Result<Vec<PathBuf>, CliError>| {
        let start = Instant::now();
        files.extend(stage()?);
        timings.insert(name, start.elapsed().as_millis());
        Ok::<_, CliError>(())
    };
    timed("solve", &|| solve(config, out))?;
    timed("crosseval", &|| crosseval(config, out, trace))?;
    timed("position", &|| position(config, out))?;
    timed("sensitivity", &|| sensitivity(config, out))?;

    let mut inventory = BTreeMap::new();
    for path in files {
        let bytes = std::fs::read(&path).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
        let name = path.strip_prefix(out).unwrap_or(&path).to_string_lossy().replace('\\', "/");
        inventory.insert(name, sha256_hex(&bytes));
    }
    let manifest = Manifest {
        tool_version: env!("CARGO_PKG_VERSION"),
        config_digest: sha256_hex(config.to_document().as_bytes()),
        master_seed: config.master_seed,
        timings_ms: timings,
        files: inventory,
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    tables::write_atomic(&manifest_path, text.as_bytes())?;
    Ok(manifest_path)
}
