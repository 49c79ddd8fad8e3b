//! Domain types, configuration and random stream derivation.

mod config;
mod stream;

pub use config::{load_config, ConfigError};
pub use stream::{derive_stream, LazyStream, Stream, StreamPath};

use serde::{Deserialize, Serialize};

/// Tolerance applied to "sums to one" checks on probabilities and weights.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// One investable asset type. Its id is its index in the catalog.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssetType {
    /// Cost per unit of the asset.
    #[serde(rename = "cost")]
    pub unit_cost: f64,
    /// Demand units satisfied per asset unit, one entry per demand type.
    pub capability: Vec<f64>,
}

impl AssetType {
    pub fn new(unit_cost: f64, capability: Vec<f64>) -> Self {
        Self {
            unit_cost,
            capability,
        }
    }

    /// Cost per unit of satisfied demand of type `k`, `None` if incapable.
    pub fn cost_per_capability(&self, k: usize) -> Option<f64> {
        let w = self.capability[k];
        (w > 0.0).then(|| self.unit_cost / w)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AssetCatalog {
    assets: Vec<AssetType>,
    demand_types: usize,
}

impl AssetCatalog {
    /// Build a catalog, checking every asset and demand-type invariant.
    pub fn new(assets: Vec<AssetType>) -> Result<Self, ConfigError> {
        if assets.is_empty() {
            return Err(ConfigError::invalid("assets", "at least one asset type required (n >= 1)"));
        }
        let m = assets[0].capability.len();
        if m == 0 {
            return Err(ConfigError::invalid(
                "assets[0].capability",
                "at least one demand type required (m >= 1)",
            ));
        }
        for (i, a) in assets.iter().enumerate() {
            if !(a.unit_cost.is_finite() && a.unit_cost >= 0.0) {
                return Err(ConfigError::invalid(
                    format!("assets[{i}].cost"),
                    format!("unit cost must be finite and >= 0, got {}", a.unit_cost),
                ));
            }
            if a.capability.len() != m {
                return Err(ConfigError::invalid(
                    format!("assets[{i}].capability"),
                    format!("expected {m} entries, got {}", a.capability.len()),
                ));
            }
            if let Some(k) = a.capability.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
                return Err(ConfigError::invalid(
                    format!("assets[{i}].capability[{k}]"),
                    "capability must be finite and >= 0",
                ));
            }
            if a.capability.iter().all(|w| *w == 0.0) {
                return Err(ConfigError::invalid(
                    format!("assets[{i}].capability"),
                    "asset has no capability for any demand type",
                ));
            }
        }
        for k in 0..m {
            if assets.iter().all(|a| a.capability[k] == 0.0) {
                return Err(ConfigError::invalid(
                    "assets",
                    format!("no asset can serve demand type {k}"),
                ));
            }
        }
        Ok(Self {
            assets,
            demand_types: m,
        })
    }

    pub fn assets(&self) -> &[AssetType] {
        &self.assets
    }

    /// Number of asset types `n`.
    pub fn len(&self) -> usize {
        self.assets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assets.is_empty()
    }

    /// Number of demand types `m`.
    pub fn demand_type_count(&self) -> usize {
        self.demand_types
    }

    /// Total investment cost `sum_i c_i x_i` of a set of asset counts.
    pub fn cost(&self, counts: &[u32]) -> f64 {
        self.assets
            .iter()
            .zip(counts)
            .map(|(a, &x)| a.unit_cost * f64::from(x))
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(rename = "mean")]
    pub demand_mean: Vec<f64>,
    #[serde(rename = "stddev")]
    pub demand_stddev: Vec<f64>,
    pub probability: f64,
}

impl Scenario {
    pub fn new(demand_mean: Vec<f64>, demand_stddev: Vec<f64>, probability: f64) -> Self {
        Self {
            demand_mean,
            demand_stddev,
            probability,
        }
    }
}

/// The weighted scenario space together with the sampling shape shared by
/// every scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioSpace {
    pub scenarios: Vec<Scenario>,
    pub beta_min: f64,
    pub beta_max: f64,
    /// Time points per future (`I_t`).
    pub time_points: usize,
    pub instances_per_scenario: usize,
    pub futures_per_instance: usize,
}

impl ScenarioSpace {
    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    /// Simulated futures per scenario, `r`.
    pub fn futures_per_scenario(&self) -> usize {
        self.instances_per_scenario * self.futures_per_instance
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.scenarios.iter().map(|s| s.probability).collect()
    }

    pub fn validate(&self, demand_types: usize) -> Result<(), ConfigError> {
        if self.scenarios.is_empty() {
            return Err(ConfigError::invalid("scenarios", "at least one scenario required"));
        }
        for (j, s) in self.scenarios.iter().enumerate() {
            for (name, v) in [("mean", &s.demand_mean), ("stddev", &s.demand_stddev)] {
                if v.len() != demand_types {
                    return Err(ConfigError::invalid(
                        format!("scenarios[{j}].{name}"),
                        format!("expected {demand_types} entries, got {}", v.len()),
                    ));
                }
                if let Some(k) = v.iter().position(|x| !(x.is_finite() && *x >= 0.0)) {
                    return Err(ConfigError::invalid(
                        format!("scenarios[{j}].{name}[{k}]"),
                        "must be finite and >= 0",
                    ));
                }
            }
            if !(0.0..=1.0).contains(&s.probability) {
                return Err(ConfigError::invalid(
                    format!("scenarios[{j}].probability"),
                    format!("probability must lie in [0, 1], got {}", s.probability),
                ));
            }
        }
        let total: f64 = self.scenarios.iter().map(|s| s.probability).sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(ConfigError::invalid(
                "scenarios",
                format!("probabilities sum to {total}, must sum to 1"),
            ));
        }
        if !(self.beta_min.is_finite() && self.beta_max.is_finite() && self.beta_min > 0.0) {
            return Err(ConfigError::invalid("space.beta_min", "beta range must be finite with lower bound > 0"));
        }
        if self.beta_min > self.beta_max {
            return Err(ConfigError::invalid("space", "beta_min must be <= beta_max"));
        }
        if self.time_points == 0 {
            return Err(ConfigError::invalid("space.time_points", "must be >= 1"));
        }
        if self.futures_per_scenario() == 0 {
            return Err(ConfigError::invalid(
                "space",
                "instances * futures_per_instance must be >= 1",
            ));
        }
        Ok(())
    }
}

/// A candidate plan: a real-valued genotype and its decoded integer counts.
#[derive(Clone, Debug, PartialEq)]
pub struct Portfolio {
    genotype: Vec<f64>,
    counts: Vec<u32>,
}

impl Portfolio {
    /// Decode `genotype` (each gene clamped to [0, 1]) into counts
    /// `round(g * x_max)`.
    pub fn from_genotype(genotype: Vec<f64>, x_max: u32) -> Self {
        let genotype: Vec<f64> = genotype.into_iter().map(|g| g.clamp(0.0, 1.0)).collect();
        let counts = genotype
            .iter()
            .map(|g| (g * f64::from(x_max)).round() as u32)
            .collect();
        Self { genotype, counts }
    }

    /// Portfolio with the given counts and the genotype `x / x_max` that
    /// decodes back to them. Counts above `x_max` are clamped.
    pub fn from_counts(counts: &[u32], x_max: u32) -> Self {
        let genotype = counts
            .iter()
            .map(|&x| f64::from(x.min(x_max)) / f64::from(x_max))
            .collect();
        Self::from_genotype(genotype, x_max)
    }

    pub fn genotype(&self) -> &[f64] {
        &self.genotype
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }
}

/// Per-gene mutation probability, either fixed or `k / n` in the number of
/// genes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MutationProb {
    Fixed(f64),
    PerGenes(f64),
}

impl MutationProb {
    pub fn resolve(self, genes: usize) -> f64 {
        match self {
            MutationProb::Fixed(p) => p,
            MutationProb::PerGenes(k) => (k / genes as f64).min(1.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EaSettings {
    pub population: usize,
    pub evaluations: usize,
    pub mutation_stddev: f64,
    pub mutation_prob: MutationProb,
}

impl Default for EaSettings {
    fn default() -> Self {
        Self {
            population: 20,
            evaluations: 2000,
            mutation_stddev: 0.1,
            mutation_prob: MutationProb::PerGenes(2.0),
        }
    }
}

/// Aggregation weights for the cost and success objectives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Weights {
    pub cost: f64,
    pub success: f64,
}

impl Weights {
    /// Weights `(w, 1 - w)`.
    pub fn from_cost(w_cost: f64) -> Self {
        Self {
            cost: w_cost,
            success: 1.0 - w_cost,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PositioningSettings {
    pub weights: Weights,
    /// Aggregated score at or above which a scenario counts as handled.
    pub aspiration: f64,
    /// Success rate strictly below which a scenario counts as failed.
    pub failure_threshold: f64,
}

impl Default for PositioningSettings {
    fn default() -> Self {
        Self {
            weights: Weights {
                cost: 0.3,
                success: 0.7,
            },
            aspiration: 0.8,
            failure_threshold: 0.6,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SensitivitySettings {
    pub stddev: f64,
    pub samples: usize,
}

impl Default for SensitivitySettings {
    fn default() -> Self {
        Self {
            stddev: 0.1,
            samples: 1000,
        }
    }
}

/// Fully validated run configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub catalog: AssetCatalog,
    pub space: ScenarioSpace,
    /// Upper bound of every asset count.
    pub x_max: u32,
    pub ea: EaSettings,
    pub positioning: PositioningSettings,
    pub sensitivity: SensitivitySettings,
    pub master_seed: u64,
}

impl RunConfig {
    /// Check every cross-field invariant. The catalog validates itself on
    /// construction.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.space.validate(self.catalog.demand_type_count())?;
        if self.x_max == 0 {
            return Err(ConfigError::invalid("x_max", "must be >= 1"));
        }
        let ea = &self.ea;
        if ea.population == 0 {
            return Err(ConfigError::invalid("ea.population", "must be >= 1"));
        }
        if ea.evaluations < ea.population {
            return Err(ConfigError::invalid(
                "ea.evaluations",
                format!(
                    "budget {} is smaller than the initial population {}",
                    ea.evaluations, ea.population
                ),
            ));
        }
        if !(ea.mutation_stddev.is_finite() && ea.mutation_stddev >= 0.0) {
            return Err(ConfigError::invalid("ea.mutation_stddev", "must be finite and >= 0"));
        }
        let p = ea.mutation_prob.resolve(self.catalog.len());
        if !(0.0..=1.0).contains(&p) {
            return Err(ConfigError::invalid("ea.mutation_prob", "must resolve to a probability in [0, 1]"));
        }
        let pos = &self.positioning;
        let w = pos.weights;
        if !(w.cost >= 0.0 && w.success >= 0.0) {
            return Err(ConfigError::invalid("positioning", "weights must be >= 0"));
        }
        if (w.cost + w.success - 1.0).abs() > SUM_TOLERANCE {
            return Err(ConfigError::invalid(
                "positioning",
                format!("w_cost + w_success = {}, must equal 1", w.cost + w.success),
            ));
        }
        if !(0.0..=1.0).contains(&pos.aspiration) {
            return Err(ConfigError::invalid("positioning.aspiration", "must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&pos.failure_threshold) {
            return Err(ConfigError::invalid("positioning.failure_threshold", "must lie in [0, 1]"));
        }
        let sens = &self.sensitivity;
        if !(sens.stddev.is_finite() && sens.stddev >= 0.0) {
            return Err(ConfigError::invalid("sensitivity.stddev", "must be finite and >= 0"));
        }
        if sens.samples == 0 {
            return Err(ConfigError::invalid("sensitivity.samples", "must be >= 1"));
        }
        Ok(())
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.space.probabilities()
    }

    /// Serialize to the canonical config document.
    pub fn to_document(&self) -> String {
        config::to_document(self)
    }
}

/// The experimental setup of the reference case study: five asset types,
/// four demand types, four equiprobable scenarios.
pub mod reference {
    use super::*;

    pub fn catalog() -> AssetCatalog {
        AssetCatalog::new(vec![
            AssetType::new(1.0, vec![3.0, 3.0, 3.0, 3.0]),
            AssetType::new(1.0, vec![1.0, 6.0, 5.0, 0.0]),
            AssetType::new(1.0, vec![0.0, 0.0, 6.0, 6.0]),
            AssetType::new(1.0, vec![10.0, 0.0, 0.0, 2.0]),
            AssetType::new(1.0, vec![0.0, 4.0, 4.0, 4.0]),
        ])
        .expect("reference catalog is valid")
    }

    pub fn scenarios() -> Vec<Scenario> {
        vec![
            Scenario::new(vec![2.0, 2.0, 3.0, 3.0], vec![1.0, 3.0, 4.0, 2.0], 0.25),
            Scenario::new(vec![10.0, 6.0, 6.0, 7.0], vec![4.0, 3.0, 2.0, 2.0], 0.25),
            Scenario::new(vec![0.0, 10.0, 9.0, 5.0], vec![1.0, 1.0, 4.0, 4.0], 0.25),
            Scenario::new(vec![4.0, 6.0, 6.0, 5.0], vec![2.0, 2.0, 3.0, 3.0], 0.25),
        ]
    }

    pub fn space() -> ScenarioSpace {
        ScenarioSpace {
            scenarios: scenarios(),
            beta_min: 1.0,
            beta_max: 10.0,
            time_points: 10,
            instances_per_scenario: 10,
            futures_per_instance: 10,
        }
    }

    pub fn config(master_seed: u64) -> RunConfig {
        RunConfig {
            catalog: catalog(),
            space: space(),
            x_max: 500,
            ea: EaSettings::default(),
            positioning: PositioningSettings::default(),
            sensitivity: SensitivitySettings::default(),
            master_seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_rejects_useless_asset() {
        let err = AssetCatalog::new(vec![
            AssetType::new(1.0, vec![1.0, 1.0]),
            AssetType::new(1.0, vec![0.0, 0.0]),
        ])
        .unwrap_err();
        assert!(err.to_string().contains("assets[1].capability"), "{err}");
    }

    #[test]
    fn catalog_rejects_uncovered_demand_type() {
        let err = AssetCatalog::new(vec![AssetType::new(1.0, vec![1.0, 0.0])]).unwrap_err();
        assert!(err.to_string().contains("demand type 1"), "{err}");
    }

    #[test]
    fn catalog_rejects_ragged_capability() {
        let err = AssetCatalog::new(vec![
            AssetType::new(1.0, vec![1.0, 1.0]),
            AssetType::new(1.0, vec![1.0]),
        ])
        .unwrap_err();
        assert!(err.to_string().contains("expected 2 entries"), "{err}");
    }

    #[test]
    fn catalog_rejects_negative_cost() {
        assert!(AssetCatalog::new(vec![AssetType::new(-1.0, vec![1.0])]).is_err());
    }

    #[test]
    fn cost_is_weighted_sum() {
        let c = reference::catalog();
        assert_eq!(c.cost(&[3, 1, 0, 2, 0]), 6.0);
        assert_eq!(c.cost(&[0; 5]), 0.0);
    }

    #[test]
    fn decoder_rounds_and_clamps() {
        let p = Portfolio::from_genotype(vec![0.5, 0.501, 1.2, -0.3, 0.98 + 0.05], 500);
        assert_eq!(p.counts(), &[250, 251, 500, 0, 500]);
        assert_eq!(p.genotype()[2], 1.0);
        assert_eq!(p.genotype()[3], 0.0);
    }

    #[test]
    fn from_counts_round_trips() {
        for x in 0..=500u32 {
            assert_eq!(Portfolio::from_counts(&[x], 500).counts(), &[x]);
        }
    }

    #[test]
    fn mutation_prob_resolves_against_gene_count() {
        assert_eq!(MutationProb::PerGenes(2.0).resolve(5), 0.4);
        assert_eq!(MutationProb::PerGenes(2.0).resolve(1), 1.0);
        assert_eq!(MutationProb::Fixed(0.3).resolve(5), 0.3);
    }

    #[test]
    fn reference_config_is_valid() {
        let cfg = reference::config(42);
        cfg.validate().unwrap();
        assert_eq!(cfg.space.futures_per_scenario(), 100);
    }

    #[test]
    fn budget_below_population_rejected() {
        let mut cfg = reference::config(1);
        cfg.ea.evaluations = 10;
        assert!(cfg.validate().unwrap_err().to_string().contains("ea.evaluations"));
    }

    #[test]
    fn weights_must_sum_to_one() {
        let mut cfg = reference::config(1);
        cfg.positioning.weights = Weights {
            cost: 0.5,
            success: 0.6,
        };
        assert!(cfg.validate().is_err());
    }
}
