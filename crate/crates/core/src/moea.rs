//! Steady-state multi-objective EA over asset portfolios.
//!
//! Objectives are investment cost (minimised) and success rate within one
//! scenario (maximised). Each iteration picks two random parents, produces a
//! single child via uniform crossover and Gaussian mutation, and then inserts
//! it only if no member dominates it.

use log::debug;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::model::{derive_stream, AssetCatalog, MutationProb, Portfolio, RunConfig, StreamPath};
use crate::simulate::ScenarioFutures;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObjectivePair {
    pub cost: f64,
    pub success_rate: f64,
}

impl ObjectivePair {
    pub fn new(cost: f64, success_rate: f64) -> Self {
        Self { cost, success_rate }
    }
}

/// Pareto dominance with cost minimised and success rate maximised.
pub fn dominates(a: &ObjectivePair, b: &ObjectivePair) -> bool {
    a.cost <= b.cost
        && a.success_rate >= b.success_rate
        && (a.cost < b.cost || a.success_rate > b.success_rate)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Member {
    pub portfolio: Portfolio,
    pub objectives: ObjectivePair,
}

/// Evaluates portfolios in one scenario against a fixed, pre-sampled set of
/// futures.
pub struct ScenarioEvaluator<'a> {
    catalog: &'a AssetCatalog,
    futures: ScenarioFutures,
}

impl<'a> ScenarioEvaluator<'a> {
    pub fn new(config: &'a RunConfig, j: usize) -> Self {
        Self {
            catalog: &config.catalog,
            futures: ScenarioFutures::generate(&config.space, j, config.master_seed),
        }
    }

    pub fn futures(&self) -> &ScenarioFutures {
        &self.futures
    }

    pub fn evaluate(&self, portfolio: &Portfolio) -> ObjectivePair {
        self.evaluate_counts(portfolio.counts())
    }

    pub fn evaluate_counts(&self, counts: &[u32]) -> ObjectivePair {
        ObjectivePair {
            cost: self.catalog.cost(counts),
            success_rate: self.futures.success_rate(counts, self.catalog),
        }
    }
}

/// One-shot evaluation of a portfolio in scenario `j`.
pub fn evaluate(portfolio: &Portfolio, j: usize, config: &RunConfig) -> ObjectivePair {
    ScenarioEvaluator::new(config, j).evaluate(portfolio)
}

/// Variation settings resolved for a given genome length.
#[derive(Clone, Copy, Debug)]
pub struct Variation {
    pub x_max: u32,
    pub mutation_prob: f64,
    pub mutation_stddev: f64,
}

impl Variation {
    pub fn new(x_max: u32, mutation_prob: MutationProb, mutation_stddev: f64, genes: usize) -> Self {
        Self {
            x_max,
            mutation_prob: mutation_prob.resolve(genes),
            mutation_stddev,
        }
    }

    pub fn from_config(config: &RunConfig) -> Self {
        Self::new(
            config.x_max,
            config.ea.mutation_prob,
            config.ea.mutation_stddev,
            config.catalog.len(),
        )
    }
}

/// Uniform crossover followed by per-gene Gaussian mutation in genotype
/// space; genes are clamped to [0, 1] and decoded by rounding.
pub fn make_offspring<R: Rng + ?Sized>(
    p1: &Portfolio,
    p2: &Portfolio,
    variation: &Variation,
    stream: &mut R,
) -> Portfolio {
    let mut genes: Vec<f64> = p1
        .genotype()
        .iter()
        .zip(p2.genotype())
        .map(|(&a, &b)| if stream.random_bool(0.5) { a } else { b })
        .collect();
    let noise = Normal::new(0.0, variation.mutation_stddev).expect("validated stddev");
    for g in &mut genes {
        if stream.random::<f64>() < variation.mutation_prob {
            *g += noise.sample(stream);
        }
    }
    Portfolio::from_genotype(genes, variation.x_max)
}

/// What a steady-state update did with the child.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UpdateOutcome {
    /// Some member dominates the child.
    Discarded,
    /// The child took the slot at this index.
    Replaced(usize),
    Appended,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Population {
    members: Vec<Member>,
}

impl Population {
    pub fn new(members: Vec<Member>) -> Self {
        Self { members }
    }

    pub fn members(&self) -> &[Member] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    fn dominated_by_other(&self, idx: usize) -> bool {
        let target = &self.members[idx].objectives;
        self.members
            .iter()
            .enumerate()
            .any(|(i, m)| i != idx && dominates(&m.objectives, target))
    }

    /// Insert `child` unless a member dominates it. A member dominated by
    /// the child is replaced first; failing that, a member dominated by
    /// another member; failing that, the child is appended. Ties among
    /// replacement candidates are broken uniformly from `stream`.
    pub fn steady_state_update<R: Rng + ?Sized>(&mut self, child: Member, stream: &mut R) -> UpdateOutcome {
        if self
            .members
            .iter()
            .any(|m| dominates(&m.objectives, &child.objectives))
        {
            return UpdateOutcome::Discarded;
        }
        let by_child: Vec<usize> = (0..self.members.len())
            .filter(|&i| dominates(&child.objectives, &self.members[i].objectives))
            .collect();
        let pool = if by_child.is_empty() {
            (0..self.members.len())
                .filter(|&i| self.dominated_by_other(i))
                .collect()
        } else {
            by_child
        };
        if pool.is_empty() {
            self.members.push(child);
            return UpdateOutcome::Appended;
        }
        let slot = pool[stream.random_range(0..pool.len())];
        self.members[slot] = child;
        UpdateOutcome::Replaced(slot)
    }

    /// Members not dominated by any other member.
    pub fn non_dominated(&self) -> Vec<Member> {
        (0..self.members.len())
            .filter(|&i| !self.dominated_by_other(i))
            .map(|i| self.members[i].clone())
            .collect()
    }
}

/// Result of evolving one scenario.
#[derive(Clone, Debug)]
pub struct ScenarioFront {
    pub scenario: usize,
    /// Rank-1 members of the final population (duplicates possible).
    pub members: Vec<Member>,
    pub evaluations: usize,
    pub final_population: usize,
}

/// Stream path for the initial population of scenario `j`.
pub fn init_path(j: usize) -> StreamPath {
    StreamPath::root().with("ea", j as u64).with("init", 0)
}

/// Stream path for offspring `t` (counted from the first evaluation after
/// initialisation) of scenario `j`.
pub fn offspring_path(j: usize, t: usize) -> StreamPath {
    StreamPath::root().with("ea", j as u64).with("offspring", t as u64)
}

/// Evolve portfolios for scenario `j` until the evaluation budget is spent.
pub fn solve_scenario(config: &RunConfig, j: usize) -> ScenarioFront {
    let evaluator = ScenarioEvaluator::new(config, j);
    let variation = Variation::from_config(config);
    let n = config.catalog.len();
    let seed = config.master_seed;

    let mut init = derive_stream(seed, &init_path(j));
    let mut members = Vec::with_capacity(config.ea.population);
    for _ in 0..config.ea.population {
        let genes: Vec<f64> = (0..n).map(|_| init.random::<f64>()).collect();
        let portfolio = Portfolio::from_genotype(genes, config.x_max);
        let objectives = evaluator.evaluate(&portfolio);
        members.push(Member { portfolio, objectives });
    }
    let mut population = Population::new(members);
    let mut evaluations = config.ea.population;

    let mut t = 0;
    while evaluations < config.ea.evaluations {
        let mut stream = derive_stream(seed, &offspring_path(j, t));
        let a = stream.random_range(0..population.len());
        let b = stream.random_range(0..population.len());
        let child = make_offspring(
            &population.members()[a].portfolio,
            &population.members()[b].portfolio,
            &variation,
            &mut stream,
        );
        let objectives = evaluator.evaluate(&child);
        evaluations += 1;
        population.steady_state_update(
            Member {
                portfolio: child,
                objectives,
            },
            &mut stream,
        );
        if evaluations.is_multiple_of(100) {
            debug!(
                "scenario {j}: {evaluations} evaluations, population {}, front {}",
                population.len(),
                population.non_dominated().len()
            );
        }
        t += 1;
    }

    ScenarioFront {
        scenario: j,
        members: population.non_dominated(),
        evaluations,
        final_population: population.len(),
    }
}
