//! Strategic positioning of pooled candidate portfolios across scenarios.
//!
//! Every candidate carries one static cost and a success rate per scenario.
//! Per scenario, both objectives are min-max normalised over the whole pool
//! and combined into a score in [0, 1]. From those scores come:
//!
//! - robustness: probability mass of scenarios whose score reaches the
//!   aspiration level;
//! - risk: probability mass of scenarios whose raw success rate is below the
//!   failure threshold;
//! - adaptation cost: expected purchase cost of topping the candidate up to
//!   each scenario's best candidate.

use thiserror::Error;

use crate::model::{AssetCatalog, PositioningSettings, Weights};

#[derive(Debug, Error, PartialEq)]
pub enum PositioningError {
    #[error("empty candidate set")]
    Empty,
    #[error("candidate {index} has {got} success rates, expected {expected}")]
    ScenarioCount {
        index: usize,
        got: usize,
        expected: usize,
    },
    #[error("candidates {first} and {second} share counts {counts:?}")]
    Duplicate {
        first: usize,
        second: usize,
        counts: Vec<u32>,
    },
    #[error("candidate {index} has {got} asset counts, expected {expected}")]
    AssetCount {
        index: usize,
        got: usize,
        expected: usize,
    },
}

/// A pooled portfolio with its cross-scenario evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub counts: Vec<u32>,
    pub cost: f64,
    /// Success rate per scenario.
    pub success: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CandidateSet {
    candidates: Vec<Candidate>,
    scenarios: usize,
}

impl CandidateSet {
    pub fn new(candidates: Vec<Candidate>) -> Result<Self, PositioningError> {
        let first = candidates.first().ok_or(PositioningError::Empty)?;
        let scenarios = first.success.len();
        let genes = first.counts.len();
        let mut seen = std::collections::HashMap::new();
        for (index, c) in candidates.iter().enumerate() {
            if c.success.len() != scenarios {
                return Err(PositioningError::ScenarioCount {
                    index,
                    got: c.success.len(),
                    expected: scenarios,
                });
            }
            if c.counts.len() != genes {
                return Err(PositioningError::AssetCount {
                    index,
                    got: c.counts.len(),
                    expected: genes,
                });
            }
            if let Some(&prev) = seen.get(&c.counts) {
                return Err(PositioningError::Duplicate {
                    first: prev,
                    second: index,
                    counts: c.counts.clone(),
                });
            }
            seen.insert(c.counts.clone(), index);
        }
        Ok(Self {
            candidates,
            scenarios,
        })
    }

    /// Deduplicate `counts` (first occurrence wins, order preserved) and
    /// evaluate each distinct portfolio with `success_in`, which receives
    /// the counts and a scenario index.
    pub fn pool<I, F>(
        counts: I,
        scenarios: usize,
        catalog: &AssetCatalog,
        mut success_in: F,
    ) -> Result<Self, PositioningError>
    where
        I: IntoIterator<Item = Vec<u32>>,
        F: FnMut(&[u32], usize) -> f64,
    {
        let mut seen = std::collections::HashSet::new();
        let candidates = counts
            .into_iter()
            .filter(|c| seen.insert(c.clone()))
            .map(|c| Candidate {
                cost: catalog.cost(&c),
                success: (0..scenarios).map(|j| success_in(&c, j)).collect(),
                counts: c,
            })
            .collect();
        Self::new(candidates)
    }

    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn scenario_count(&self) -> usize {
        self.scenarios
    }
}

/// `(max - v) / (max - min)` when `lower_is_better`, `(v - min) / (max - min)`
/// otherwise; a constant column normalises to 1.
fn normalize(values: &[f64], lower_is_better: bool) -> Vec<f64> {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    values
        .iter()
        .map(|&v| {
            if span == 0.0 {
                1.0
            } else if lower_is_better {
                (max - v) / span
            } else {
                (v - min) / span
            }
        })
        .collect()
}

/// Aggregated score of every candidate in scenario `j`.
pub fn aggregate_score(
    candidates: &CandidateSet,
    j: usize,
    weights: Weights,
) -> Result<Vec<f64>, PositioningError> {
    if candidates.is_empty() {
        return Err(PositioningError::Empty);
    }
    let costs: Vec<f64> = candidates.candidates.iter().map(|c| c.cost).collect();
    let succ: Vec<f64> = candidates.candidates.iter().map(|c| c.success[j]).collect();
    let nc = normalize(&costs, true);
    let ns = normalize(&succ, false);
    Ok(nc
        .iter()
        .zip(&ns)
        .map(|(c, s)| (weights.cost * c + weights.success * s).clamp(0.0, 1.0))
        .collect())
}

/// Scores indexed `[candidate][scenario]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreTable {
    rows: Vec<Vec<f64>>,
}

impl ScoreTable {
    pub fn compute(candidates: &CandidateSet, weights: Weights) -> Result<Self, PositioningError> {
        let per_scenario: Vec<Vec<f64>> = (0..candidates.scenario_count())
            .map(|j| aggregate_score(candidates, j, weights))
            .collect::<Result<_, _>>()?;
        let rows = (0..candidates.len())
            .map(|i| per_scenario.iter().map(|s| s[i]).collect())
            .collect();
        Ok(Self { rows })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        Self { rows }
    }

    pub fn row(&self, candidate: usize) -> &[f64] {
        &self.rows[candidate]
    }

    pub fn get(&self, candidate: usize, j: usize) -> f64 {
        self.rows[candidate][j]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }
}

/// Probability mass of scenarios whose score is at least `aspiration`.
pub fn robustness(scores: &[f64], probabilities: &[f64], aspiration: f64) -> f64 {
    scores
        .iter()
        .zip(probabilities)
        .filter(|(f, _)| **f >= aspiration)
        .fold(0.0, |acc, (_, p)| acc + p)
}

/// Probability mass of scenarios with a success rate strictly below
/// `threshold`.
pub fn risk(success_rates: &[f64], probabilities: &[f64], threshold: f64) -> f64 {
    success_rates
        .iter()
        .zip(probabilities)
        .filter(|(s, _)| **s < threshold)
        .fold(0.0, |acc, (_, p)| acc + p)
}

/// Index of the best candidate in scenario `j`: highest score, then lowest
/// cost, then lexicographically smallest counts.
pub fn select_best(
    candidates: &CandidateSet,
    j: usize,
    scores: &ScoreTable,
) -> Result<usize, PositioningError> {
    let cs = &candidates.candidates;
    (0..cs.len())
        .min_by(|&a, &b| {
            scores
                .get(b, j)
                .total_cmp(&scores.get(a, j))
                .then(cs[a].cost.total_cmp(&cs[b].cost))
                .then_with(|| cs[a].counts.cmp(&cs[b].counts))
        })
        .ok_or(PositioningError::Empty)
}

/// Expected cost of buying the missing units to reach each scenario's best
/// portfolio. Surplus units are neither charged nor credited.
pub fn adaptation_cost(
    counts: &[u32],
    best_per_scenario: &[&[u32]],
    catalog: &AssetCatalog,
    probabilities: &[f64],
) -> f64 {
    best_per_scenario
        .iter()
        .zip(probabilities)
        .map(|(best, p)| {
            let purchase: f64 = catalog
                .assets()
                .iter()
                .zip(best.iter().zip(counts))
                .map(|(a, (&target, &have))| a.unit_cost * f64::from(target.saturating_sub(have)))
                .sum();
            purchase * p
        })
        .sum()
}

/// The three positioning metrics of one portfolio.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Metrics {
    pub robustness: f64,
    pub risk: f64,
    pub adapt_cost: f64,
}

impl Metrics {
    /// Dominance with robustness maximised, risk and adaptation cost
    /// minimised.
    pub fn dominates(&self, other: &Metrics) -> bool {
        let no_worse = self.robustness >= other.robustness
            && self.risk <= other.risk
            && self.adapt_cost <= other.adapt_cost;
        let better = self.robustness > other.robustness
            || self.risk < other.risk
            || self.adapt_cost < other.adapt_cost;
        no_worse && better
    }
}

/// Flags the rank-1 members of `metrics`.
///
/// Candidates are visited best-first in lexicographic (robustness desc,
/// risk asc, adapt asc) order. A dominator always sorts strictly earlier,
/// and dominance is transitive, so each point only needs checking against
/// the non-dominated points already found.
pub fn pareto_filter_3d(metrics: &[Metrics]) -> Vec<bool> {
    let mut order: Vec<usize> = (0..metrics.len()).collect();
    order.sort_by(|&a, &b| {
        let (x, y) = (&metrics[a], &metrics[b]);
        y.robustness
            .total_cmp(&x.robustness)
            .then(x.risk.total_cmp(&y.risk))
            .then(x.adapt_cost.total_cmp(&y.adapt_cost))
    });
    let mut flags = vec![false; metrics.len()];
    let mut front: Vec<usize> = Vec::new();
    for i in order {
        if !front.iter().any(|&f| metrics[f].dominates(&metrics[i])) {
            flags[i] = true;
            front.push(i);
        }
    }
    flags
}

/// Map metrics to [0, 100]: robustness and risk are scaled by 100,
/// adaptation cost is min-max scaled over the set (constant set maps to 0).
pub fn display_scale(metrics: &[Metrics]) -> Vec<Metrics> {
    let min = metrics.iter().map(|m| m.adapt_cost).fold(f64::INFINITY, f64::min);
    let max = metrics.iter().map(|m| m.adapt_cost).fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    metrics
        .iter()
        .map(|m| Metrics {
            robustness: m.robustness * 100.0,
            risk: m.risk * 100.0,
            adapt_cost: if span > 0.0 {
                (m.adapt_cost - min) / span * 100.0
            } else {
                0.0
            },
        })
        .collect()
}

/// Metrics for every candidate under the given probabilities, reusing
/// precomputed scores and best-per-scenario indices.
pub fn metrics_for(
    candidates: &CandidateSet,
    scores: &ScoreTable,
    best: &[usize],
    catalog: &AssetCatalog,
    probabilities: &[f64],
    settings: &PositioningSettings,
) -> Vec<Metrics> {
    let cs = candidates.candidates();
    let best_counts: Vec<&[u32]> = best.iter().map(|&b| cs[b].counts.as_slice()).collect();
    cs.iter()
        .enumerate()
        .map(|(i, c)| Metrics {
            robustness: robustness(scores.row(i), probabilities, settings.aspiration),
            risk: risk(&c.success, probabilities, settings.failure_threshold),
            adapt_cost: adaptation_cost(&c.counts, &best_counts, catalog, probabilities),
        })
        .collect()
}

/// Scores, best-per-scenario indices and positioning metrics of a pool.
#[derive(Clone, Debug, PartialEq)]
pub struct PositioningReport {
    pub scores: ScoreTable,
    /// Index of the best candidate per scenario.
    pub best: Vec<usize>,
    pub metrics: Vec<Metrics>,
    pub display: Vec<Metrics>,
    pub non_dominated: Vec<bool>,
}

impl PositioningReport {
    pub fn compute(
        candidates: &CandidateSet,
        catalog: &AssetCatalog,
        probabilities: &[f64],
        settings: &PositioningSettings,
    ) -> Result<Self, PositioningError> {
        let (scores, best) = scores_and_best(candidates, settings.weights)?;
        let metrics = metrics_for(candidates, &scores, &best, catalog, probabilities, settings);
        Ok(Self {
            display: display_scale(&metrics),
            non_dominated: pareto_filter_3d(&metrics),
            scores,
            best,
            metrics,
        })
    }
}

/// Score table plus the best candidate of every scenario under `weights`.
pub fn scores_and_best(
    candidates: &CandidateSet,
    weights: Weights,
) -> Result<(ScoreTable, Vec<usize>), PositioningError> {
    let scores = ScoreTable::compute(candidates, weights)?;
    let best = (0..candidates.scenario_count())
        .map(|j| select_best(candidates, j, &scores))
        .collect::<Result<_, _>>()?;
    Ok((scores, best))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{reference, AssetType};

    fn cand(counts: Vec<u32>, cost: f64, success: Vec<f64>) -> Candidate {
        Candidate { counts, cost, success }
    }

    #[test]
    fn empty_mass_is_positive_zero() {
        // Float `sum` of an empty iterator is -0.0, which would render as "-0".
        assert_eq!(robustness(&[0.1], &[1.0], 0.8).to_bits(), 0.0f64.to_bits());
        assert_eq!(risk(&[0.9], &[1.0], 0.6).to_bits(), 0.0f64.to_bits());
    }

    const W: Weights = Weights {
        cost: 0.3,
        success: 0.7,
    };

    fn m(r: f64, k: f64, a: f64) -> Metrics {
        Metrics {
            robustness: r,
            risk: k,
            adapt_cost: a,
        }
    }

    #[test]
    fn aggregate_extremes_and_midpoints() {
        let set = CandidateSet::new(vec![
            cand(vec![1], 10.0, vec![0.5]),
            cand(vec![2], 20.0, vec![1.0]),
        ])
        .unwrap();
        let f = aggregate_score(&set, 0, W).unwrap();
        assert!((f[0] - 0.3).abs() < 1e-15);
        assert!((f[1] - 0.7).abs() < 1e-15);

        let set = CandidateSet::new(vec![
            cand(vec![1], 1.0, vec![1.0]),
            cand(vec![2], 5.0, vec![0.2]),
            cand(vec![3], 3.0, vec![0.6]),
        ])
        .unwrap();
        let f = aggregate_score(&set, 0, W).unwrap();
        assert_eq!(f[0], 1.0);
        assert_eq!(f[1], 0.0);
    }

    #[test]
    fn singleton_normalises_to_one() {
        let set = CandidateSet::new(vec![cand(vec![4], 7.0, vec![0.3, 0.0])]).unwrap();
        let (scores, best) = scores_and_best(&set, W).unwrap();
        assert_eq!(scores.row(0), &[1.0, 1.0]);
        assert_eq!(best, vec![0, 0]);
    }

    #[test]
    fn empty_set_is_an_error() {
        assert_eq!(CandidateSet::new(vec![]).unwrap_err(), PositioningError::Empty);
    }

    #[test]
    fn duplicate_counts_rejected() {
        let err = CandidateSet::new(vec![cand(vec![1, 2], 3.0, vec![0.1]), cand(vec![1, 2], 3.0, vec![0.1])])
            .unwrap_err();
        assert!(matches!(err, PositioningError::Duplicate { first: 0, second: 1, .. }));
    }

    #[test]
    fn pool_deduplicates() {
        let cat = reference::catalog();
        let fronts = vec![vec![1, 0, 0, 0, 0], vec![0, 1, 0, 0, 0], vec![1, 0, 0, 0, 0]];
        let set = CandidateSet::pool(fronts, 2, &cat, |_, _| 0.5).unwrap();
        assert_eq!(set.len(), 2);
        assert_eq!(set.candidates()[0].counts, vec![1, 0, 0, 0, 0]);
    }

    #[test]
    fn robustness_cases() {
        let p = [0.25; 4];
        assert_eq!(robustness(&[1.0; 4], &p, 0.8), 1.0);
        assert_eq!(robustness(&[0.9, 0.9, 0.1, 0.1], &p, 0.8), 0.5);
        assert_eq!(robustness(&[0.8, 0.0, 0.0, 0.0], &p, 0.8), 0.25);
    }

    #[test]
    fn risk_cases() {
        let p = [0.25; 4];
        assert_eq!(risk(&[0.9, 0.7, 0.65, 0.61], &p, 0.6), 0.0);
        assert_eq!(risk(&[0.1; 4], &p, 0.6), 1.0);
        assert_eq!(risk(&[0.6, 0.6, 0.6, 0.6], &p, 0.6), 0.0);
    }

    #[test]
    fn adaptation_costs_purchases_only() {
        let cat = reference::catalog();
        let best: Vec<&[u32]> = vec![&[3, 1, 0, 2, 0]; 4];
        let p = [0.25; 4];
        assert_eq!(adaptation_cost(&[0; 5], &best, &cat, &p), 6.0);
        assert_eq!(adaptation_cost(&[10; 5], &best, &cat, &p), 0.0);
        assert_eq!(adaptation_cost(&[3, 1, 0, 2, 0], &best, &cat, &p), 0.0);
    }

    #[test]
    fn adaptation_uses_unit_costs() {
        let cat = AssetCatalog::new(vec![AssetType::new(2.0, vec![1.0]), AssetType::new(5.0, vec![1.0])]).unwrap();
        let best: Vec<&[u32]> = vec![&[3, 1], &[0, 4]];
        // scenario 0: 2*3 + 5*1 = 11; scenario 1: 5*4 = 20
        assert_eq!(adaptation_cost(&[0, 0], &best, &cat, &[0.5, 0.5]), 15.5);
    }

    #[test]
    fn select_best_tie_breaks() {
        let set = CandidateSet::new(vec![cand(vec![9], 9.0, vec![0.5])]).unwrap();
        let s = ScoreTable::from_rows(vec![vec![0.2]]);
        assert_eq!(select_best(&set, 0, &s).unwrap(), 0);

        let set = CandidateSet::new(vec![cand(vec![2], 8.0, vec![0.5]), cand(vec![1], 5.0, vec![0.5])]).unwrap();
        let s = ScoreTable::from_rows(vec![vec![0.7], vec![0.9]]);
        assert_eq!(select_best(&set, 0, &s).unwrap(), 1);
        let s = ScoreTable::from_rows(vec![vec![1.0], vec![1.0]]);
        assert_eq!(select_best(&set, 0, &s).unwrap(), 1);

        let set = CandidateSet::new(vec![cand(vec![2, 0], 5.0, vec![0.5]), cand(vec![0, 2], 5.0, vec![0.5])]).unwrap();
        let s = ScoreTable::from_rows(vec![vec![1.0], vec![1.0]]);
        assert_eq!(select_best(&set, 0, &s).unwrap(), 1);
    }

    #[test]
    fn ideal_point_dominates_all_others() {
        let ms = vec![m(1.0, 0.0, 0.0), m(0.75, 0.0, 0.0), m(1.0, 0.25, 0.0), m(1.0, 0.0, 0.0), m(0.5, 0.5, 9.0)];
        assert_eq!(pareto_filter_3d(&ms), vec![true, false, false, true, false]);
    }

    #[test]
    fn incomparable_and_duplicate_points_retained() {
        assert_eq!(pareto_filter_3d(&[m(0.75, 0.25, 10.0), m(0.5, 0.0, 3.0)]), vec![true, true]);
        assert_eq!(pareto_filter_3d(&[m(0.5, 0.5, 1.0), m(0.5, 0.5, 1.0)]), vec![true, true]);
        assert!(pareto_filter_3d(&[]).is_empty());
    }

    #[test]
    fn display_scaling() {
        let d = display_scale(&[m(0.5, 0.25, 0.0), m(1.0, 0.0, 20.0)]);
        assert_eq!(d[0], m(50.0, 25.0, 0.0));
        assert_eq!(d[1], m(100.0, 0.0, 100.0));
        let d = display_scale(&[m(0.5, 0.25, 4.0), m(1.0, 0.0, 4.0)]);
        assert!(d.iter().all(|x| x.adapt_cost == 0.0));
    }

    #[test]
    fn partition_of_probability_mass() {
        let p = [0.1, 0.2, 0.3, 0.4];
        let f = [0.8, 0.79, 1.0, 0.0];
        let fail: f64 = f.iter().zip(&p).filter(|(x, _)| **x < 0.8).map(|(_, q)| q).sum();
        assert!((robustness(&f, &p, 0.8) + fail - 1.0).abs() < 1e-15);
    }
}
