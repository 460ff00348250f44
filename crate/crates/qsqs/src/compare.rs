//! Match rate of each solver against the exhaustive optimum on random
//! detection-shaped QUBOs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use qsqs_core::solvers::{
    pick_solution, random_instance, solve_exhaustive, AnnealSolver, GreedySolver, TabuSolver,
    ENERGY_TOLERANCE, EXHAUSTIVE_MAX_VARS,
};
use qsqs_core::{AnnealSchedule, Sampler, TabuParams};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum CompareSolver {
    Greedy,
    Tabu,
    Anneal,
}

impl CompareSolver {
    pub fn name(self) -> &'static str {
        match self {
            CompareSolver::Greedy => "greedy",
            CompareSolver::Tabu => "tabu",
            CompareSolver::Anneal => "anneal",
        }
    }
}

impl FromStr for CompareSolver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "greedy" => Ok(CompareSolver::Greedy),
            "tabu" => Ok(CompareSolver::Tabu),
            "anneal" => Ok(CompareSolver::Anneal),
            other => Err(Error::Validation(format!(
                "unknown solver '{other}', expected greedy, tabu or anneal"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareParams {
    pub n_vars: Vec<usize>,
    pub instances: usize,
    pub seed: u64,
    pub density: f64,
    pub schedule: AnnealSchedule,
    pub tabu: TabuParams,
    pub solvers: Vec<CompareSolver>,
    pub oracle: bool,
}

impl Default for CompareParams {
    fn default() -> Self {
        Self {
            n_vars: vec![9, 15],
            instances: 100,
            seed: 0,
            density: 0.5,
            schedule: AnnealSchedule::default(),
            tabu: TabuParams::default(),
            solvers: vec![CompareSolver::Greedy, CompareSolver::Tabu, CompareSolver::Anneal],
            oracle: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub instance_id: usize,
    pub n: usize,
    pub solver: CompareSolver,
    /// Energy of the solver's chosen (most frequent) string.
    pub best_energy: f64,
    pub optimum_energy: Option<f64>,
    pub matched_optimum: Option<bool>,
    pub wall_time_ms: f64,
}

/// SplitMix64 finaliser, used to derive independent per-instance seeds.
pub fn mix_seed(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of instance `idx` among the `n`-variable instances.
pub fn instance_seed(seed: u64, n: usize, idx: usize) -> u64 {
    mix_seed(mix_seed(seed, n as u64), idx as u64)
}

pub fn run_compare(p: &CompareParams) -> Result<Vec<CompareRow>> {
    if p.oracle {
        if let Some(&n) = p.n_vars.iter().find(|&&n| n > EXHAUSTIVE_MAX_VARS) {
            return Err(Error::Validation(format!(
                "n = {n} exceeds the exhaustive oracle limit of {EXHAUSTIVE_MAX_VARS}; pass --no-oracle"
            )));
        }
    }
    if p.n_vars.contains(&0) {
        return Err(Error::Validation("variable counts must be positive".into()));
    }
    p.tabu.validate()?;
    let jobs: Vec<(usize, usize)> = p
        .n_vars
        .iter()
        .flat_map(|&n| (0..p.instances).map(move |i| (n, i)))
        .collect();
    let rows: Vec<Vec<CompareRow>> = jobs
        .par_iter()
        .map(|&(n, idx)| compare_instance(p, n, idx))
        .collect::<Result<_>>()?;
    Ok(rows.into_iter().flatten().collect())
}

fn compare_instance(p: &CompareParams, n: usize, idx: usize) -> Result<Vec<CompareRow>> {
    let seed = instance_seed(p.seed, n, idx);
    let q = random_instance(n, p.density, seed);
    let optimum = if p.oracle {
        Some(solve_exhaustive(&q)?.samples()[0].energy)
    } else {
        None
    };
    p.solvers
        .iter()
        .map(|&which| {
            let solver_seed = mix_seed(seed, which as u64 + 1);
            let sampler: Box<dyn Sampler> = match which {
                CompareSolver::Greedy => Box::new(GreedySolver),
                CompareSolver::Tabu => Box::new(TabuSolver::new(TabuParams {
                    seed: solver_seed,
                    ..p.tabu
                })),
                CompareSolver::Anneal => Box::new(AnnealSolver::new(p.schedule, solver_seed)),
            };
            let start = Instant::now();
            let samples = sampler.sample(&q)?;
            let bits = pick_solution(&samples)?;
            let wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
            let best_energy = q.energy(&bits)?;
            Ok(CompareRow {
                instance_id: idx,
                n,
                solver: which,
                best_energy,
                optimum_energy: optimum,
                matched_optimum: optimum.map(|o| (o - best_energy).abs() <= ENERGY_TOLERANCE),
                wall_time_ms,
            })
        })
        .collect()
}

pub fn compare_csv(rows: &[CompareRow]) -> String {
    let mut s = String::from("instance_id,n,solver,best_energy,optimum_energy,matched_optimum,wall_time_ms\n");
    for r in rows {
        let opt = r.optimum_energy.map(|o| o.to_string()).unwrap_or_default();
        let matched = r.matched_optimum.map(|m| m.to_string()).unwrap_or_default();
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.instance_id,
            r.n,
            r.solver.name(),
            r.best_energy,
            opt,
            matched,
            r.wall_time_ms
        );
    }
    s
}

/// Fraction of instances matched, keyed by `(n, solver)`.
pub fn match_rates(rows: &[CompareRow]) -> BTreeMap<(usize, CompareSolver), f64> {
    let mut tally: BTreeMap<(usize, CompareSolver), (usize, usize)> = BTreeMap::new();
    for r in rows {
        if let Some(m) = r.matched_optimum {
            let e = tally.entry((r.n, r.solver)).or_default();
            e.0 += usize::from(m);
            e.1 += 1;
        }
    }
    tally
        .into_iter()
        .map(|(k, (hit, total))| (k, hit as f64 / total as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_cap_enforced() {
        let p = CompareParams {
            n_vars: vec![30],
            instances: 1,
            ..CompareParams::default()
        };
        assert!(matches!(run_compare(&p), Err(Error::Validation(_))));
    }

    #[test]
    fn small_run_without_oracle() {
        let p = CompareParams {
            n_vars: vec![6],
            instances: 3,
            schedule: AnnealSchedule::default().with_reads(20),
            oracle: false,
            ..CompareParams::default()
        };
        let rows = run_compare(&p).unwrap();
        assert_eq!(rows.len(), 9);
        assert!(rows.iter().all(|r| r.matched_optimum.is_none()));
        assert!(match_rates(&rows).is_empty());
    }

    #[test]
    fn seeds_differ_per_instance() {
        assert_ne!(instance_seed(0, 9, 0), instance_seed(0, 9, 1));
        assert_ne!(instance_seed(0, 9, 0), instance_seed(0, 15, 0));
    }
}
