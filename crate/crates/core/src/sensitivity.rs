//! Quartile bands of the positioning metrics under biased scenario
//! probabilities and objective weights.
//!
//! Only the analysis layer is perturbed: success rates and costs of the
//! candidates are reused as-is, no future is re-simulated.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use thiserror::Error;

use crate::model::{derive_stream, AssetCatalog, RunConfig, StreamPath, Weights};
use crate::positioning::{metrics_for, scores_and_best, CandidateSet, Metrics, PositioningError, ScoreTable};

/// Resampling attempts before a probability perturbation is declared
/// degenerate.
pub const MAX_RESAMPLES: usize = 1000;

#[derive(Debug, Error, PartialEq)]
pub enum SensitivityError {
    #[error("degenerate perturbation: every probability clamped to zero in {0} attempts")]
    Degenerate(usize),
    #[error(transparent)]
    Positioning(#[from] PositioningError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PerturbationKind {
    Probability,
    Weight,
}

impl PerturbationKind {
    pub fn label(self) -> &'static str {
        match self {
            PerturbationKind::Probability => "probability",
            PerturbationKind::Weight => "weight",
        }
    }

    fn stream_index(self) -> u64 {
        match self {
            PerturbationKind::Probability => 0,
            PerturbationKind::Weight => 1,
        }
    }
}

/// Stream path of perturbation sample `s`.
pub fn sample_path(kind: PerturbationKind, s: usize) -> StreamPath {
    StreamPath::root()
        .with("sensitivity", kind.stream_index())
        .with("sample", s as u64)
}

/// Add `draws` to `nominal`, clamp at zero and renormalise. `None` when
/// nothing survives the clamp.
pub fn perturb_with_draws(nominal: &[f64], draws: &[f64]) -> Option<Vec<f64>> {
    let raw: Vec<f64> = nominal
        .iter()
        .zip(draws)
        .map(|(p, d)| (p + d).max(0.0))
        .collect();
    let total: f64 = raw.iter().sum();
    (total > 0.0).then(|| raw.into_iter().map(|p| p / total).collect())
}

/// Jointly perturb scenario probabilities with `N(0, stddev)` noise.
pub fn perturb_probabilities<R: Rng + ?Sized>(
    nominal: &[f64],
    stream: &mut R,
    stddev: f64,
) -> Result<Vec<f64>, SensitivityError> {
    if stddev == 0.0 {
        return Ok(nominal.to_vec());
    }
    let noise = Normal::new(0.0, stddev).expect("validated stddev");
    for _ in 0..MAX_RESAMPLES {
        let draws: Vec<f64> = nominal.iter().map(|_| noise.sample(stream)).collect();
        if let Some(p) = perturb_with_draws(nominal, &draws) {
            return Ok(p);
        }
    }
    Err(SensitivityError::Degenerate(MAX_RESAMPLES))
}

/// Perturb the cost weight with `N(0, stddev)` noise, clamp it to [0, 1] and
/// give the remainder to the success weight.
pub fn perturb_weights<R: Rng + ?Sized>(nominal: Weights, stream: &mut R, stddev: f64) -> Weights {
    if stddev == 0.0 {
        return nominal;
    }
    let noise = Normal::new(0.0, stddev).expect("validated stddev");
    Weights::from_cost((nominal.cost + noise.sample(stream)).clamp(0.0, 1.0))
}

/// The perturbed probability vectors used by [`probability_sensitivity`].
pub fn probability_samples(config: &RunConfig) -> Result<Vec<Vec<f64>>, SensitivityError> {
    let nominal = config.probabilities();
    (0..config.sensitivity.samples)
        .into_par_iter()
        .map(|s| {
            let mut stream = derive_stream(config.master_seed, &sample_path(PerturbationKind::Probability, s));
            perturb_probabilities(&nominal, &mut stream, config.sensitivity.stddev)
        })
        .collect()
}

/// The perturbed weight pairs used by [`weight_sensitivity`].
pub fn weight_samples(config: &RunConfig) -> Vec<Weights> {
    (0..config.sensitivity.samples)
        .into_par_iter()
        .map(|s| {
            let mut stream = derive_stream(config.master_seed, &sample_path(PerturbationKind::Weight, s));
            perturb_weights(config.positioning.weights, &mut stream, config.sensitivity.stddev)
        })
        .collect()
}

/// Linear-interpolation percentile (`q` in [0, 1]) of sorted data.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (sorted[hi] - sorted[lo]) * frac
    }
}

/// First quartile, median and third quartile of `values`, sorted in place.
pub fn quartiles(values: &mut [f64]) -> (f64, f64, f64) {
    assert!(!values.is_empty(), "quartiles of an empty sample");
    values.sort_by(f64::total_cmp);
    (
        percentile(values, 0.25),
        percentile(values, 0.5),
        percentile(values, 0.75),
    )
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Band {
    pub nominal: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

impl Band {
    pub fn from_samples(nominal: f64, mut samples: Vec<f64>) -> Self {
        let (q1, median, q3) = quartiles(&mut samples);
        Self {
            nominal,
            q1,
            median,
            q3,
        }
    }

    pub fn width(&self) -> f64 {
        self.q3 - self.q1
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricBands {
    pub robustness: Band,
    pub risk: Band,
    pub adapt_cost: Band,
}

fn bands(nominal: &[Metrics], samples: &[Vec<Metrics>]) -> Vec<MetricBands> {
    (0..nominal.len())
        .map(|i| {
            let column = |f: fn(&Metrics) -> f64| samples.iter().map(|s| f(&s[i])).collect::<Vec<_>>();
            MetricBands {
                robustness: Band::from_samples(nominal[i].robustness, column(|m| m.robustness)),
                risk: Band::from_samples(nominal[i].risk, column(|m| m.risk)),
                adapt_cost: Band::from_samples(nominal[i].adapt_cost, column(|m| m.adapt_cost)),
            }
        })
        .collect()
}

/// Bands under perturbed scenario probabilities. Scores and best portfolios
/// do not depend on the probabilities and are computed once.
pub fn probability_sensitivity(
    candidates: &CandidateSet,
    catalog: &AssetCatalog,
    config: &RunConfig,
) -> Result<Vec<MetricBands>, SensitivityError> {
    let settings = &config.positioning;
    let (scores, best) = scores_and_best(candidates, settings.weights)?;
    let nominal = metrics_for(candidates, &scores, &best, catalog, &config.probabilities(), settings);
    let samples: Vec<Vec<Metrics>> = probability_samples(config)?
        .par_iter()
        .map(|p| metrics_for(candidates, &scores, &best, catalog, p, settings))
        .collect();
    Ok(bands(&nominal, &samples))
}

/// Bands under perturbed objective weights. Scores and best portfolios are
/// recomputed per sample; risk does not depend on the weights.
pub fn weight_sensitivity(
    candidates: &CandidateSet,
    catalog: &AssetCatalog,
    config: &RunConfig,
) -> Result<Vec<MetricBands>, SensitivityError> {
    let settings = &config.positioning;
    let probabilities = config.probabilities();
    let at = |weights: Weights| -> Result<Vec<Metrics>, PositioningError> {
        let (scores, best): (ScoreTable, Vec<usize>) = scores_and_best(candidates, weights)?;
        Ok(metrics_for(candidates, &scores, &best, catalog, &probabilities, settings))
    };
    let nominal = at(settings.weights)?;
    let samples: Vec<Vec<Metrics>> = weight_samples(config)
        .into_par_iter()
        .map(at)
        .collect::<Result<_, _>>()?;
    Ok(bands(&nominal, &samples))
}
