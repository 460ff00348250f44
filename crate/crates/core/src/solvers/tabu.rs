use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::greedy::IMPROVEMENT_EPS;
use super::{CostModel, SampleSet, Sampler};
use crate::qubo::QuboInstance;
use crate::{Error, Result};

/// Multistart single-flip tabu search parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TabuParams {
    /// Iterations a flipped bit stays tabu.
    pub tenure: usize,
    pub max_iterations: usize,
    /// Extra runs from random starts after the first run from all zeros.
    pub restarts: usize,
    pub seed: u64,
}

impl TabuParams {
    pub fn new(tenure: usize, max_iterations: usize, restarts: usize, seed: u64) -> Result<Self> {
        let p = Self {
            tenure,
            max_iterations,
            restarts,
            seed,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.tenure == 0 || self.max_iterations == 0 {
            return Err(Error::InvalidInput(
                "tabu tenure and max_iterations must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Starting string of run `run` (0 is all zeros).
    pub fn start(&self, n: usize, run: usize) -> Vec<bool> {
        if run == 0 {
            return vec![false; n];
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(run as u64);
        (0..n).map(|_| rng.random::<bool>()).collect()
    }
}

impl Default for TabuParams {
    fn default() -> Self {
        Self {
            tenure: 7,
            max_iterations: 500,
            restarts: 1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct TabuSolver {
    pub params: TabuParams,
}

impl TabuSolver {
    pub fn new(params: TabuParams) -> Self {
        Self { params }
    }
}

impl Sampler for TabuSolver {
    fn sample(&self, q: &QuboInstance) -> Result<SampleSet> {
        solve_tabu(q, &self.params)
    }

    fn name(&self) -> &str {
        "tabu"
    }
}

/// Runs `1 + restarts` tabu searches and returns the best string of each run.
///
/// Each iteration applies the best admissible flip even when it worsens the
/// objective. A flip is admissible when its bit is not tabu or when it would
/// produce a new overall best (aspiration).
pub fn solve_tabu(q: &QuboInstance, p: &TabuParams) -> Result<SampleSet> {
    p.validate()?;
    if q.n() == 0 {
        return Err(Error::EmptyInput("tabu search needs at least one variable"));
    }
    let model = CostModel::new(q);
    let runs = (0..=p.restarts).map(|run| tabu_run(&model, p, p.start(q.n(), run)));
    Ok(SampleSet::from_reads(q, runs.collect::<Vec<_>>()))
}

fn tabu_run(model: &CostModel, p: &TabuParams, start: Vec<bool>) -> Vec<bool> {
    let n = model.n();
    let mut x = start;
    let mut fields = model.fields(&x);
    let mut cost = model.cost(&x);
    let mut best_x = x.clone();
    let mut best_cost = cost;
    // bit i is tabu while iteration < tabu_until[i]
    let mut tabu_until = vec![0usize; n];

    for iter in 0..p.max_iterations {
        let mut chosen: Option<(usize, f64)> = None;
        let mut fallback: Option<(usize, f64)> = None;
        for i in 0..n {
            let d = model.delta(&x, &fields, i);
            if fallback.is_none_or(|(_, fd)| d < fd) {
                fallback = Some((i, d));
            }
            let admissible = tabu_until[i] <= iter || cost + d < best_cost - IMPROVEMENT_EPS;
            if admissible && chosen.is_none_or(|(_, cd)| d < cd) {
                chosen = Some((i, d));
            }
        }
        // every bit tabu and none aspirating: take the best move anyway
        let (i, d) = chosen.or(fallback).expect("n >= 1");
        model.flip(&mut x, &mut fields, i);
        cost += d;
        tabu_until[i] = iter + 1 + p.tenure;
        if cost < best_cost - IMPROVEMENT_EPS {
            best_cost = cost;
            best_x.copy_from_slice(&x);
        }
    }
    best_x
}
