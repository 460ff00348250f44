//! QUBO samplers.
//!
//! Every solver maps an instance to a [`SampleSet`]: distinct bit strings with
//! occurrence counts and their objective values. [`pick_solution`] then
//! selects the most frequently observed string, which is how multi-read
//! annealing output is turned into a single answer.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::qubo::{QuboInstance, Sense};
use crate::{Error, Result};

mod anneal;
mod exhaustive;
mod greedy;
mod tabu;

pub use anneal::{solve_anneal, AnnealSchedule, AnnealSolver};
pub use exhaustive::{solve_exhaustive, ExhaustiveSolver, EXHAUSTIVE_MAX_VARS, MAX_REPORTED_OPTIMA};
pub use greedy::{greedy_descent, GreedySolver};
pub use tabu::{solve_tabu, TabuParams, TabuSolver};

/// Tolerance under which two objective values are treated as equal.
pub const ENERGY_TOLERANCE: f64 = 1e-9;

/// Anything that turns a QUBO into samples.
pub trait Sampler {
    fn sample(&self, q: &QuboInstance) -> Result<SampleSet>;

    fn name(&self) -> &str;
}

impl<S: Sampler + ?Sized> Sampler for &S {
    fn sample(&self, q: &QuboInstance) -> Result<SampleSet> {
        (**self).sample(q)
    }

    fn name(&self) -> &str {
        (**self).name()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub bits: Vec<bool>,
    pub energy: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    samples: Vec<Sample>,
    total_reads: usize,
    sense: Sense,
}

impl SampleSet {
    /// Aggregates raw reads into distinct strings, recomputing energies on `q`.
    pub fn from_reads(q: &QuboInstance, reads: impl IntoIterator<Item = Vec<bool>>) -> Self {
        let mut counts: BTreeMap<Vec<bool>, usize> = BTreeMap::new();
        for r in reads {
            *counts.entry(r).or_default() += 1;
        }
        let samples = counts
            .into_iter()
            .map(|(bits, count)| Sample {
                energy: q.energy_unchecked(&bits),
                bits,
                count,
            })
            .collect();
        Self::assemble(samples, q.sense())
    }

    /// Builds a set from explicit samples. Strings must be distinct, of equal
    /// length, with positive counts.
    pub fn from_samples(sense: Sense, samples: Vec<Sample>) -> Result<Self> {
        if let Some(first) = samples.first() {
            if samples.iter().any(|s| s.bits.len() != first.bits.len()) {
                return Err(Error::InvalidInput("samples differ in length".into()));
            }
        }
        if samples.iter().any(|s| s.count == 0) {
            return Err(Error::InvalidInput("sample counts must be positive".into()));
        }
        let mut keys: Vec<&Vec<bool>> = samples.iter().map(|s| &s.bits).collect();
        keys.sort();
        if keys.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidInput(format!(
                "{} samples contain duplicate strings",
                samples.len()
            )));
        }
        Ok(Self::assemble(samples, sense))
    }

    fn assemble(mut samples: Vec<Sample>, sense: Sense) -> Self {
        samples.sort_by(|a, b| preference(sense, a, b));
        let total_reads = samples.iter().map(|s| s.count).sum();
        Self {
            samples,
            total_reads,
            sense,
        }
    }

    /// Samples ordered by count, then energy, then lexicographically.
    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn total_reads(&self) -> usize {
        self.total_reads
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// The sample with the best energy; ties go to the lexicographically
    /// smallest string.
    pub fn best(&self) -> Option<&Sample> {
        self.samples.iter().min_by(|a, b| {
            energy_order(self.sense, a.energy, b.energy).then_with(|| a.bits.cmp(&b.bits))
        })
    }
}

fn energy_order(sense: Sense, a: f64, b: f64) -> Ordering {
    // Less means "a is better"
    match sense {
        Sense::Maximize => b.total_cmp(&a),
        Sense::Minimize => a.total_cmp(&b),
    }
}

fn preference(sense: Sense, a: &Sample, b: &Sample) -> Ordering {
    b.count
        .cmp(&a.count)
        .then_with(|| energy_order(sense, a.energy, b.energy))
        .then_with(|| a.bits.cmp(&b.bits))
}

/// The most frequently sampled string. Ties are broken by better energy, then
/// by the lexicographically smallest string.
pub fn pick_solution(ss: &SampleSet) -> Result<Vec<bool>> {
    ss.samples
        .first()
        .map(|s| s.bits.clone())
        .ok_or(Error::EmptyInput("sample set has no samples"))
}

/// Random maximisation instance shaped like a detection QUBO: diagonal drawn
/// from `U(0, 1)`, each off-diagonal entry present with probability `density`
/// and drawn from `U(-1, 0)`.
pub fn random_instance(n: usize, density: f64, seed: u64) -> QuboInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q = QuboInstance::zeros(n, Sense::Maximize);
    for i in 0..n {
        q.set(i, i, rng.random::<f64>());
        for j in i + 1..n {
            if rng.random::<f64>() < density {
                q.set(i, j, -rng.random::<f64>());
            }
        }
    }
    q
}

/// Symmetric cost matrix (always minimised) with incrementally maintained
/// local fields, shared by the local-search solvers.
#[derive(Debug, Clone)]
pub(crate) struct CostModel {
    n: usize,
    linear: Vec<f64>,
    // row-major symmetric couplings, zero diagonal
    coupling: Vec<f64>,
}

impl CostModel {
    pub(crate) fn new(q: &QuboInstance) -> Self {
        let n = q.n();
        let sign = q.sense().cost_sign();
        let mut linear = vec![0.0; n];
        let mut coupling = vec![0.0; n * n];
        for (i, j, v) in q.entries() {
            if i == j {
                linear[i] = sign * v;
            } else {
                coupling[i * n + j] = sign * v;
                coupling[j * n + i] = sign * v;
            }
        }
        Self { n, linear, coupling }
    }

    pub(crate) fn n(&self) -> usize {
        self.n
    }

    /// Local fields `sum_j c_ij x_j` for the state `x`.
    pub(crate) fn fields(&self, x: &[bool]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let row = &self.coupling[i * self.n..(i + 1) * self.n];
                row.iter().zip(x).filter(|(_, &b)| b).map(|(c, _)| c).sum()
            })
            .collect()
    }

    /// Cost change of flipping bit `i`.
    #[inline]
    pub(crate) fn delta(&self, x: &[bool], fields: &[f64], i: usize) -> f64 {
        let d = self.linear[i] + fields[i];
        if x[i] {
            -d
        } else {
            d
        }
    }

    /// Flips bit `i` and updates the local fields.
    #[inline]
    pub(crate) fn flip(&self, x: &mut [bool], fields: &mut [f64], i: usize) {
        x[i] = !x[i];
        let row = &self.coupling[i * self.n..(i + 1) * self.n];
        if x[i] {
            fields.iter_mut().zip(row).for_each(|(f, c)| *f += c);
        } else {
            fields.iter_mut().zip(row).for_each(|(f, c)| *f -= c);
        }
    }

    pub(crate) fn cost(&self, x: &[bool]) -> f64 {
        let mut total = 0.0;
        for i in (0..self.n).filter(|&i| x[i]) {
            total += self.linear[i];
            for j in (i + 1..self.n).filter(|&j| x[j]) {
                total += self.coupling[i * self.n + j];
            }
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(samples: &[(&[bool], f64, usize)]) -> SampleSet {
        SampleSet::from_samples(
            Sense::Maximize,
            samples
                .iter()
                .map(|&(b, e, c)| Sample {
                    bits: b.to_vec(),
                    energy: e,
                    count: c,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn pick_majority() {
        let ss = set(&[(&[true, true], 0.33, 200), (&[true, false], 0.36, 800)]);
        assert_eq!(pick_solution(&ss).unwrap(), vec![true, false]);
        assert_eq!(ss.total_reads(), 1000);
    }

    #[test]
    fn pick_tie_by_energy_then_lexicographic() {
        let ss = set(&[(&[true, true], 0.33, 5), (&[true, false], 0.36, 5)]);
        assert_eq!(pick_solution(&ss).unwrap(), vec![true, false]);
        let ss = set(&[(&[true, false], 0.5, 5), (&[false, true], 0.5, 5)]);
        assert_eq!(pick_solution(&ss).unwrap(), vec![false, true]);
    }

    #[test]
    fn pick_single_and_empty() {
        let ss = set(&[(&[true], 0.4, 1)]);
        assert_eq!(pick_solution(&ss).unwrap(), vec![true]);
        let empty = SampleSet::from_samples(Sense::Minimize, Vec::new()).unwrap();
        assert_eq!(
            pick_solution(&empty),
            Err(Error::EmptyInput("sample set has no samples"))
        );
    }

    #[test]
    fn from_samples_rejects_duplicates() {
        let dup = vec![
            Sample { bits: vec![true], energy: 1.0, count: 1 },
            Sample { bits: vec![true], energy: 1.0, count: 2 },
        ];
        assert!(SampleSet::from_samples(Sense::Maximize, dup).is_err());
    }

    #[test]
    fn cost_model_matches_energy() {
        let q = random_instance(8, 0.5, 3);
        let m = CostModel::new(&q);
        let mut x = vec![false; 8];
        let mut fields = m.fields(&x);
        let mut cost = 0.0;
        for step in [3, 1, 7, 3, 0, 5, 1] {
            cost += m.delta(&x, &fields, step);
            m.flip(&mut x, &mut fields, step);
            assert!((cost - m.cost(&x)).abs() < 1e-12);
            assert!((m.cost(&x) + q.energy(&x).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn random_instance_sign_structure() {
        let q = random_instance(12, 0.5, 9);
        for (i, j, v) in q.entries() {
            if i == j {
                assert!((0.0..1.0).contains(&v));
            } else {
                assert!((-1.0..=0.0).contains(&v));
            }
        }
        assert_eq!(q, random_instance(12, 0.5, 9));
    }
}
