//! Possible futures and the greedy asset-assignment kernel.
//!
//! A future is an `I_t x m` matrix of demands. At each time point every asset
//! type is available at its full portfolio count; demand types are served in
//! ascending order from that shared pool, each by repeatedly picking the
//! capable asset with the lowest cost per unit of demand satisfied.

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::model::{derive_stream, AssetCatalog, LazyStream, Scenario, ScenarioSpace, StreamPath};

/// `I_t x m` demand matrix of one possible future, already scaled by the
/// instance's beta.
#[derive(Clone, Debug, PartialEq)]
pub struct FutureDemands {
    time_points: usize,
    demand_types: usize,
    values: Vec<f64>,
}

impl FutureDemands {
    /// Build from rows; every row must have the same length.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let time_points = rows.len();
        let demand_types = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == demand_types), "ragged demand rows");
        let values: Vec<f64> = rows.into_iter().flatten().collect();
        assert!(values.iter().all(|d| *d >= 0.0), "negative demand");
        Self {
            time_points,
            demand_types,
            values,
        }
    }

    pub fn time_points(&self) -> usize {
        self.time_points
    }

    pub fn demand_types(&self) -> usize {
        self.demand_types
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.values[t * self.demand_types..(t + 1) * self.demand_types]
    }

    pub fn get(&self, t: usize, k: usize) -> f64 {
        self.row(t)[k]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Sample one future: each entry is `max(0, N(mu_k, sigma_k)) * beta`, drawn
/// time point by time point, demand type by demand type.
pub fn sample_future<R: Rng + ?Sized>(
    scenario: &Scenario,
    beta: f64,
    stream: &mut R,
    space: &ScenarioSpace,
) -> FutureDemands {
    let dists: Vec<Normal<f64>> = scenario
        .demand_mean
        .iter()
        .zip(&scenario.demand_stddev)
        .map(|(&mu, &sigma)| Normal::new(mu, sigma).expect("validated stddev"))
        .collect();
    let m = dists.len();
    let mut values = Vec::with_capacity(space.time_points * m);
    for _ in 0..space.time_points {
        for d in &dists {
            values.push(d.sample(stream).max(0.0) * beta);
        }
    }
    FutureDemands {
        time_points: space.time_points,
        demand_types: m,
        values,
    }
}

/// Units of one asset type committed to one demand.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Commitment {
    pub asset: usize,
    pub units: u32,
}

/// Full record of an assignment pass over one future.
#[derive(Clone, Debug, PartialEq)]
pub struct AssignmentTrace {
    demand_types: usize,
    commitments: Vec<Vec<Commitment>>,
    residuals: Vec<f64>,
}

impl AssignmentTrace {
    fn new(time_points: usize, demand_types: usize) -> Self {
        Self {
            demand_types,
            commitments: vec![Vec::new(); time_points * demand_types],
            residuals: vec![0.0; time_points * demand_types],
        }
    }

    pub fn commitments(&self, t: usize, k: usize) -> &[Commitment] {
        &self.commitments[t * self.demand_types + k]
    }

    /// Unmet demand left at `(t, k)`.
    pub fn residual(&self, t: usize, k: usize) -> f64 {
        self.residuals[t * self.demand_types + k]
    }

    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    pub fn time_points(&self) -> usize {
        self.residuals.len() / self.demand_types.max(1)
    }

    /// Units of asset `i` used across all demand types at time point `t`.
    pub fn units_used(&self, t: usize, asset: usize) -> u32 {
        (0..self.demand_types)
            .flat_map(|k| self.commitments(t, k))
            .filter(|c| c.asset == asset)
            .map(|c| c.units)
            .sum()
    }

    pub fn is_success(&self) -> bool {
        self.residuals.iter().all(|r| *r == 0.0)
    }

    /// Tab-separated dump: time point, demand type, asset, units, residual.
    /// Demands needing no asset appear with `-` in the asset column.
    pub fn to_table(&self) -> String {
        let mut out = String::from("time_point\tdemand_type\tasset\tunits\tresidual\n");
        for t in 0..self.time_points() {
            for k in 0..self.demand_types {
                let r = self.residual(t, k);
                let cs = self.commitments(t, k);
                if cs.is_empty() {
                    let _ = writeln!(out, "{t}\t{k}\t-\t0\t{r}");
                }
                for c in cs {
                    let _ = writeln!(out, "{t}\t{k}\t{}\t{}\t{r}", c.asset, c.units);
                }
            }
        }
        out
    }
}

/// Shared assignment loop. Returns `true` iff every demand was met; when
/// `trace` is given it also records commitments and residuals.
fn run_assignment<R: Rng + ?Sized>(
    counts: &[u32],
    demands: &FutureDemands,
    catalog: &AssetCatalog,
    ties: &mut R,
    mut trace: Option<&mut AssignmentTrace>,
) -> bool {
    let assets = catalog.assets();
    debug_assert_eq!(counts.len(), assets.len());
    let mut available = vec![0u32; assets.len()];
    let mut best: Vec<usize> = Vec::with_capacity(assets.len());
    let mut success = true;

    for t in 0..demands.time_points() {
        available.copy_from_slice(counts);
        for (k, &demand) in demands.row(t).iter().enumerate() {
            let mut residual = demand;
            while residual > 0.0 {
                // Capable, still-available assets with the lowest c_i / w_ik.
                // Ratios are compared by cross-multiplication so exact ties
                // are detected exactly.
                best.clear();
                for (i, a) in assets.iter().enumerate() {
                    let w = a.capability[k];
                    if w <= 0.0 || available[i] == 0 {
                        continue;
                    }
                    match best.first() {
                        None => best.push(i),
                        Some(&b) => {
                            let (lhs, rhs) =
                                (a.unit_cost * assets[b].capability[k], assets[b].unit_cost * w);
                            if lhs < rhs {
                                best.clear();
                                best.push(i);
                            } else if lhs == rhs {
                                best.push(i);
                            }
                        }
                    }
                }
                let chosen = match best.len() {
                    0 => break,
                    1 => best[0],
                    n => best[ties.random_range(0..n)],
                };
                let w = assets[chosen].capability[k];
                let needed = (residual / w).ceil();
                let units = if needed <= f64::from(available[chosen]) {
                    residual = 0.0;
                    needed as u32
                } else {
                    let units = available[chosen];
                    residual = (residual - f64::from(units) * w).max(0.0);
                    units
                };
                available[chosen] -= units;
                if let Some(tr) = trace.as_deref_mut() {
                    tr.commitments[t * demands.demand_types() + k].push(Commitment {
                        asset: chosen,
                        units,
                    });
                }
            }
            if residual > 0.0 {
                success = false;
                match trace.as_deref_mut() {
                    Some(tr) => tr.residuals[t * demands.demand_types() + k] = residual,
                    // Without a trace, the first unmet demand settles the outcome.
                    None => return false,
                }
            }
        }
    }
    success
}

/// Run the greedy assignment and record every commitment.
pub fn assign_assets<R: Rng + ?Sized>(
    counts: &[u32],
    demands: &FutureDemands,
    catalog: &AssetCatalog,
    stream: &mut R,
) -> AssignmentTrace {
    let mut trace = AssignmentTrace::new(demands.time_points(), demands.demand_types());
    run_assignment(counts, demands, catalog, stream, Some(&mut trace));
    trace
}

/// Whether the portfolio meets every demand of the future.
pub fn future_success<R: Rng + ?Sized>(
    counts: &[u32],
    demands: &FutureDemands,
    catalog: &AssetCatalog,
    stream: &mut R,
) -> bool {
    run_assignment(counts, demands, catalog, stream, None)
}

/// Stream path for the beta of instance `p` in scenario `j`.
pub fn instance_path(j: usize, p: usize) -> StreamPath {
    StreamPath::scenario(j).with("instance", p as u64)
}

/// Stream path for the demands of future `h` of instance `p` in scenario `j`.
pub fn future_path(j: usize, p: usize, h: usize) -> StreamPath {
    instance_path(j, p).with("future", h as u64)
}

/// Stream path for assignment tie-breaks within one future.
pub fn tie_break_path(j: usize, p: usize, h: usize) -> StreamPath {
    future_path(j, p, h).with("ties", 0)
}

/// Draw the beta of instance `p` of scenario `j`.
pub fn sample_beta(space: &ScenarioSpace, master_seed: u64, j: usize, p: usize) -> f64 {
    if space.beta_min == space.beta_max {
        return space.beta_min;
    }
    derive_stream(master_seed, &instance_path(j, p)).random_range(space.beta_min..=space.beta_max)
}

/// One simulated future together with its stream coordinates.
#[derive(Clone, Debug)]
pub struct SimulatedFuture {
    pub instance: usize,
    pub future: usize,
    pub beta: f64,
    pub demands: FutureDemands,
}

/// The `r` futures of one scenario, shared by every portfolio evaluated in
/// it (common random numbers).
#[derive(Clone, Debug)]
pub struct ScenarioFutures {
    scenario: usize,
    master_seed: u64,
    futures: Vec<SimulatedFuture>,
}

impl ScenarioFutures {
    pub fn generate(space: &ScenarioSpace, j: usize, master_seed: u64) -> Self {
        let scenario = &space.scenarios[j];
        let mut futures = Vec::with_capacity(space.futures_per_scenario());
        for p in 0..space.instances_per_scenario {
            let beta = sample_beta(space, master_seed, j, p);
            for h in 0..space.futures_per_instance {
                let mut stream = derive_stream(master_seed, &future_path(j, p, h));
                futures.push(SimulatedFuture {
                    instance: p,
                    future: h,
                    beta,
                    demands: sample_future(scenario, beta, &mut stream, space),
                });
            }
        }
        Self {
            scenario: j,
            master_seed,
            futures,
        }
    }

    pub fn scenario(&self) -> usize {
        self.scenario
    }

    pub fn futures(&self) -> &[SimulatedFuture] {
        &self.futures
    }

    fn ties(&self, f: &SimulatedFuture) -> LazyStream {
        LazyStream::new(self.master_seed, tie_break_path(self.scenario, f.instance, f.future))
    }

    /// Per-future success flags, in (instance, future) order.
    pub fn outcomes(&self, counts: &[u32], catalog: &AssetCatalog) -> Vec<bool> {
        self.futures
            .iter()
            .map(|f| future_success(counts, &f.demands, catalog, &mut self.ties(f)))
            .collect()
    }

    /// Fraction of futures in which the portfolio meets every demand.
    pub fn success_rate(&self, counts: &[u32], catalog: &AssetCatalog) -> f64 {
        let wins = self.outcomes(counts, catalog).into_iter().filter(|&s| s).count();
        wins as f64 / self.futures.len() as f64
    }

    /// Assignment traces for every future, in (instance, future) order.
    pub fn traces(&self, counts: &[u32], catalog: &AssetCatalog) -> Vec<AssignmentTrace> {
        self.futures
            .iter()
            .map(|f| assign_assets(counts, &f.demands, catalog, &mut self.ties(f)))
            .collect()
    }
}

/// Success rate of `counts` in scenario `j` over its `r` common futures.
pub fn scenario_success_rate(
    counts: &[u32],
    j: usize,
    space: &ScenarioSpace,
    catalog: &AssetCatalog,
    master_seed: u64,
) -> f64 {
    ScenarioFutures::generate(space, j, master_seed).success_rate(counts, catalog)
}
