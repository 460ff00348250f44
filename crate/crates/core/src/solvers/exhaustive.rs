use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;

use super::{CostModel, Sample, SampleSet, Sampler, ENERGY_TOLERANCE};
use crate::qubo::QuboInstance;
use crate::{Error, Result};

/// Largest instance the enumeration accepts.
pub const EXHAUSTIVE_MAX_VARS: usize = 25;

/// At most this many optimal strings are reported; with more ties the
/// lexicographically smallest ones are kept.
pub const MAX_REPORTED_OPTIMA: usize = 64;

#[derive(Debug, Clone, Copy, Default)]
pub struct ExhaustiveSolver;

impl Sampler for ExhaustiveSolver {
    fn sample(&self, q: &QuboInstance) -> Result<SampleSet> {
        solve_exhaustive(q)
    }

    fn name(&self) -> &str {
        "exhaustive"
    }
}

/// Enumerates all `2^n` assignments in Gray-code order and returns every
/// optimal string with count 1.
pub fn solve_exhaustive(q: &QuboInstance) -> Result<SampleSet> {
    let n = q.n();
    if n > EXHAUSTIVE_MAX_VARS {
        return Err(Error::TooLarge {
            n,
            cap: EXHAUSTIVE_MAX_VARS,
        });
    }
    let model = CostModel::new(q);
    let mut x = vec![false; n];
    let mut fields = model.fields(&x);
    let mut cost = 0.0;
    let mut mask: u32 = 0;

    let mut best = 0.0;
    let mut optima = OptimaHeap::new(n);
    optima.push(0);

    for k in 1u32..(1u32 << n) {
        let bit = k.trailing_zeros() as usize;
        cost += model.delta(&x, &fields, bit);
        model.flip(&mut x, &mut fields, bit);
        mask ^= 1 << bit;
        if cost < best - ENERGY_TOLERANCE {
            best = cost;
            optima.clear();
            optima.push(mask);
        } else if cost <= best + ENERGY_TOLERANCE {
            if cost < best {
                best = cost;
            }
            optima.push(mask);
        }
    }

    // Re-evaluate the candidates exactly; drift in the running sum could
    // otherwise admit a near-optimum.
    let candidates: Vec<(Vec<bool>, f64)> = optima
        .into_masks()
        .into_iter()
        .map(|m| {
            let bits: Vec<bool> = (0..n).map(|i| m >> i & 1 == 1).collect();
            let e = q.energy_unchecked(&bits);
            (bits, e)
        })
        .collect();
    let sense = q.sense();
    let best_energy = candidates
        .iter()
        .map(|c| c.1)
        .reduce(|a, b| if sense.better(b, a) { b } else { a })
        .expect("at least one candidate");
    let samples = candidates
        .into_iter()
        .filter(|(_, e)| (e - best_energy).abs() <= ENERGY_TOLERANCE)
        .map(|(bits, energy)| Sample {
            bits,
            energy,
            count: 1,
        })
        .collect();
    SampleSet::from_samples(sense, samples)
}

/// Keeps the `MAX_REPORTED_OPTIMA` lexicographically smallest masks, where
/// bit 0 is the most significant position of the string.
struct OptimaHeap {
    n: usize,
    heap: BinaryHeap<u32>,
}

impl OptimaHeap {
    fn new(n: usize) -> Self {
        Self {
            n,
            heap: BinaryHeap::new(),
        }
    }

    fn key(&self, mask: u32) -> u32 {
        if self.n == 0 {
            0
        } else {
            mask.reverse_bits() >> (32 - self.n)
        }
    }

    fn push(&mut self, mask: u32) {
        let key = self.key(mask);
        if self.heap.len() < MAX_REPORTED_OPTIMA {
            self.heap.push(key);
        } else if key < *self.heap.peek().expect("non-empty") {
            self.heap.pop();
            self.heap.push(key);
        }
    }

    fn clear(&mut self) {
        self.heap.clear();
    }

    fn into_masks(self) -> Vec<u32> {
        let n = self.n;
        self.heap
            .into_iter()
            .map(|key| if n == 0 { 0 } else { key.reverse_bits() >> (32 - n) })
            .collect()
    }
}
