//! Scenario-based tactical resource planning.
//!
//! The crate is organised as a pipeline:
//!
//! - [`model`]: domain types, configuration ingestion and the keyed random
//!   stream derivation every other module draws from.
//! - [`simulate`]: demand sampling for possible futures and the greedy
//!   asset-assignment kernel that decides whether a portfolio copes with a
//!   future.
//! - [`moea`]: a steady-state multi-objective EA that evolves portfolios
//!   against (cost, success rate) inside a single scenario.
//! - [`positioning`]: cross-scenario scoring of the pooled candidates on
//!   robustness, risk and cost of adaptation.
//! - [`sensitivity`]: quartile bands of those metrics under perturbed scenario
//!   probabilities and objective weights.
//!
//! Every stochastic step is driven by [`model::derive_stream`], so a run is a
//! pure function of its configuration and master seed.

pub mod model;
pub mod moea;
pub mod positioning;
pub mod sensitivity;
pub mod simulate;

pub use model::{
    derive_stream, load_config, AssetCatalog, AssetType, ConfigError, Portfolio, RunConfig,
    Scenario, ScenarioSpace, Stream, StreamPath,
};
pub use moea::{dominates, solve_scenario, Member, ObjectivePair, Population, ScenarioEvaluator};
pub use positioning::{Candidate, CandidateSet, Metrics, PositioningReport};
pub use sensitivity::{Band, MetricBands, PerturbationKind};
pub use simulate::{FutureDemands, ScenarioFutures};
