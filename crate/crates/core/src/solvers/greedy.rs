use alloc::vec;
use alloc::vec::Vec;

use super::{CostModel, SampleSet, Sampler};
use crate::qubo::QuboInstance;
use crate::Result;

/// Minimum improvement for a flip to count as a descent step.
pub(crate) const IMPROVEMENT_EPS: f64 = 1e-12;

/// Steepest descent from the all-zeros string.
#[derive(Debug, Clone, Copy, Default)]
pub struct GreedySolver;

impl Sampler for GreedySolver {
    fn sample(&self, q: &QuboInstance) -> Result<SampleSet> {
        let start = vec![false; q.n()];
        Ok(SampleSet::from_reads(q, [greedy_descent(q, &start)]))
    }

    fn name(&self) -> &str {
        "greedy"
    }
}

/// Repeatedly applies the single flip with the largest improvement (lowest
/// index on ties) until no flip improves the objective.
pub fn greedy_descent(q: &QuboInstance, start: &[bool]) -> Vec<bool> {
    let model = CostModel::new(q);
    let mut x = start.to_vec();
    let mut fields = model.fields(&x);
    loop {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..model.n() {
            let d = model.delta(&x, &fields, i);
            if d < -IMPROVEMENT_EPS && best.is_none_or(|(_, bd)| d < bd) {
                best = Some((i, d));
            }
        }
        match best {
            Some((i, _)) => model.flip(&mut x, &mut fields, i),
            None => return x,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qubo::Sense;
    use crate::solvers::random_instance;

    #[test]
    fn reaches_local_optimum() {
        for seed in 0..20 {
            let q = random_instance(10, 0.5, seed);
            let x = greedy_descent(&q, &[false; 10]);
            let e = q.energy(&x).unwrap();
            for i in 0..10 {
                let mut y = x.clone();
                y[i] = !y[i];
                assert!(q.energy(&y).unwrap() <= e + 1e-12);
            }
        }
    }

    #[test]
    fn independent_terms_all_selected() {
        let q = QuboInstance::from_entries(
            3,
            Sense::Maximize,
            [(0, 0, 0.2), (1, 1, 0.5), (2, 2, 0.1)],
            vec![0, 1, 2],
        )
        .unwrap();
        let ss = GreedySolver.sample(&q).unwrap();
        assert_eq!(ss.samples()[0].bits, vec![true; 3]);
    }
}
