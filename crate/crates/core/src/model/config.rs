//! The canonical JSON config document and its mapping onto [`RunConfig`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{
    AssetCatalog, AssetType, EaSettings, MutationProb, PositioningSettings, RunConfig, Scenario,
    ScenarioSpace, SensitivitySettings, Weights,
};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("malformed config document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config at `{path}`: {message}")]
    Invalid { path: String, message: String },
}

impl ConfigError {
    pub(crate) fn invalid(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Invalid {
            path: path.into(),
            message: message.into(),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    assets: Vec<AssetType>,
    scenarios: Vec<Scenario>,
    #[serde(default)]
    space: SpaceDoc,
    #[serde(default = "default_x_max")]
    x_max: u32,
    #[serde(default)]
    ea: EaDoc,
    #[serde(default)]
    positioning: PositioningDoc,
    #[serde(default)]
    sensitivity: SensitivityDoc,
    #[serde(default)]
    seed: u64,
}

fn default_x_max() -> u32 {
    500
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct SpaceDoc {
    beta_min: f64,
    beta_max: f64,
    time_points: usize,
    instances: usize,
    futures_per_instance: usize,
}

impl Default for SpaceDoc {
    fn default() -> Self {
        Self {
            beta_min: 1.0,
            beta_max: 10.0,
            time_points: 10,
            instances: 10,
            futures_per_instance: 10,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct EaDoc {
    population: usize,
    evaluations: usize,
    mutation_stddev: f64,
    mutation_prob: MutationProbRepr,
}

impl Default for EaDoc {
    fn default() -> Self {
        let d = EaSettings::default();
        Self {
            population: d.population,
            evaluations: d.evaluations,
            mutation_stddev: d.mutation_stddev,
            mutation_prob: d.mutation_prob.into(),
        }
    }
}

/// `"k/n"` or a plain number.
#[derive(Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum MutationProbRepr {
    Number(f64),
    Text(String),
}

impl From<MutationProb> for MutationProbRepr {
    fn from(p: MutationProb) -> Self {
        match p {
            MutationProb::Fixed(p) => MutationProbRepr::Number(p),
            MutationProb::PerGenes(k) => MutationProbRepr::Text(format!("{k}/n")),
        }
    }
}

impl TryFrom<MutationProbRepr> for MutationProb {
    type Error = ConfigError;

    fn try_from(repr: MutationProbRepr) -> Result<Self, ConfigError> {
        let bad = |s: &str| {
            ConfigError::invalid(
                "ea.mutation_prob",
                format!("expected a number or \"k/n\", got {s:?}"),
            )
        };
        match repr {
            MutationProbRepr::Number(p) => Ok(MutationProb::Fixed(p)),
            MutationProbRepr::Text(s) => {
                let k = s
                    .trim()
                    .strip_suffix("/n")
                    .ok_or_else(|| bad(&s))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| bad(&s))?;
                if !(k.is_finite() && k >= 0.0) {
                    return Err(bad(&s));
                }
                Ok(MutationProb::PerGenes(k))
            }
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct PositioningDoc {
    w_cost: f64,
    w_success: f64,
    aspiration: f64,
    failure_threshold: f64,
}

impl Default for PositioningDoc {
    fn default() -> Self {
        let d = PositioningSettings::default();
        Self {
            w_cost: d.weights.cost,
            w_success: d.weights.success,
            aspiration: d.aspiration,
            failure_threshold: d.failure_threshold,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct SensitivityDoc {
    stddev: f64,
    samples: usize,
}

impl Default for SensitivityDoc {
    fn default() -> Self {
        let d = SensitivitySettings::default();
        Self {
            stddev: d.stddev,
            samples: d.samples,
        }
    }
}

/// Parse and fully validate a config document.
pub fn load_config(source: &str) -> Result<RunConfig, ConfigError> {
    let doc: Document = serde_json::from_str(source)?;
    let catalog = AssetCatalog::new(doc.assets)?;
    let config = RunConfig {
        catalog,
        space: ScenarioSpace {
            scenarios: doc.scenarios,
            beta_min: doc.space.beta_min,
            beta_max: doc.space.beta_max,
            time_points: doc.space.time_points,
            instances_per_scenario: doc.space.instances,
            futures_per_instance: doc.space.futures_per_instance,
        },
        x_max: doc.x_max,
        ea: EaSettings {
            population: doc.ea.population,
            evaluations: doc.ea.evaluations,
            mutation_stddev: doc.ea.mutation_stddev,
            mutation_prob: doc.ea.mutation_prob.try_into()?,
        },
        positioning: PositioningSettings {
            weights: Weights {
                cost: doc.positioning.w_cost,
                success: doc.positioning.w_success,
            },
            aspiration: doc.positioning.aspiration,
            failure_threshold: doc.positioning.failure_threshold,
        },
        sensitivity: SensitivitySettings {
            stddev: doc.sensitivity.stddev,
            samples: doc.sensitivity.samples,
        },
        master_seed: doc.seed,
    };
    config.validate()?;
    Ok(config)
}

pub(super) fn to_document(config: &RunConfig) -> String {
    let doc = Document {
        assets: config.catalog.assets().to_vec(),
        scenarios: config.space.scenarios.clone(),
        space: SpaceDoc {
            beta_min: config.space.beta_min,
            beta_max: config.space.beta_max,
            time_points: config.space.time_points,
            instances: config.space.instances_per_scenario,
            futures_per_instance: config.space.futures_per_instance,
        },
        x_max: config.x_max,
        ea: EaDoc {
            population: config.ea.population,
            evaluations: config.ea.evaluations,
            mutation_stddev: config.ea.mutation_stddev,
            mutation_prob: config.ea.mutation_prob.into(),
        },
        positioning: PositioningDoc {
            w_cost: config.positioning.weights.cost,
            w_success: config.positioning.weights.success,
            aspiration: config.positioning.aspiration,
            failure_threshold: config.positioning.failure_threshold,
        },
        sensitivity: SensitivityDoc {
            stddev: config.sensitivity.stddev,
            samples: config.sensitivity.samples,
        },
        seed: config.master_seed,
    };
    serde_json::to_string_pretty(&doc).expect("config document serializes")
}
