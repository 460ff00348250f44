use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CostModel, SampleSet, Sampler};
use crate::qubo::QuboInstance;
use crate::{Error, Result};

/// Inverse-temperature ramp and read count for [`solve_anneal`].
///
/// The ramp is geometric from `beta_start` to `beta_end`, so the problem
/// Hamiltonian increasingly dominates thermal fluctuations over the run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnealSchedule {
    pub sweeps: usize,
    pub beta_start: f64,
    pub beta_end: f64,
    pub reads: usize,
}

impl AnnealSchedule {
    pub const DEFAULT_SWEEPS: usize = 200;
    pub const DEFAULT_BETA_START: f64 = 1.0;
    pub const DEFAULT_BETA_END: f64 = 10.0;
    pub const DEFAULT_READS: usize = 1000;

    pub fn new(sweeps: usize, beta_start: f64, beta_end: f64, reads: usize) -> Result<Self> {
        let s = Self {
            sweeps,
            beta_start,
            beta_end,
            reads,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sweeps == 0 || self.reads == 0 {
            return Err(Error::InvalidInput("sweeps and reads must be positive".into()));
        }
        if !(self.beta_start > 0.0 && self.beta_end > self.beta_start && self.beta_end.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "need 0 < beta_start < beta_end, got {} and {}",
                self.beta_start, self.beta_end
            )));
        }
        Ok(())
    }

    pub fn with_reads(self, reads: usize) -> Self {
        Self { reads, ..self }
    }

    /// Inverse temperature of sweep `k`.
    pub fn beta(&self, k: usize) -> f64 {
        if self.sweeps <= 1 {
            return self.beta_end;
        }
        let t = k as f64 / (self.sweeps - 1) as f64;
        self.beta_start * libm::pow(self.beta_end / self.beta_start, t)
    }
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        Self {
            sweeps: Self::DEFAULT_SWEEPS,
            beta_start: Self::DEFAULT_BETA_START,
            beta_end: Self::DEFAULT_BETA_END,
            reads: Self::DEFAULT_READS,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct AnnealSolver {
    pub schedule: AnnealSchedule,
    pub seed: u64,
}

impl AnnealSolver {
    pub fn new(schedule: AnnealSchedule, seed: u64) -> Self {
        Self { schedule, seed }
    }
}

impl Sampler for AnnealSolver {
    fn sample(&self, q: &QuboInstance) -> Result<SampleSet> {
        solve_anneal(q, &self.schedule, self.seed)
    }

    fn name(&self) -> &str {
        "anneal"
    }
}

/// Simulated annealing with `reads` independent runs; returns the multiset
/// of final strings.
///
/// Read `r` draws from the ChaCha stream `r` of `seed`, so reads are
/// independent of evaluation order. Schedules are not validated here, which
/// permits degenerate ramps such as `sweeps == 0` (the reads are then the
/// uniform random initial strings).
pub fn solve_anneal(q: &QuboInstance, s: &AnnealSchedule, seed: u64) -> Result<SampleSet> {
    if q.n() == 0 {
        return Err(Error::EmptyInput("annealing needs at least one variable"));
    }
    if s.reads == 0 {
        return Err(Error::InvalidInput("reads must be positive".into()));
    }
    let model = CostModel::new(q);
    let betas: Vec<f64> = (0..s.sweeps).map(|k| s.beta(k)).collect();
    let reads: Vec<Vec<bool>> = (0..s.reads)
        .map(|r| anneal_read(&model, &betas, seed, r as u64))
        .collect();
    Ok(SampleSet::from_reads(q, reads))
}

fn anneal_read(model: &CostModel, betas: &[f64], seed: u64, stream: u64) -> Vec<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let n = model.n();
    let mut x: Vec<bool> = (0..n).map(|_| rng.random::<bool>()).collect();
    let mut fields = model.fields(&x);
    for &beta in betas {
        for i in 0..n {
            let d = model.delta(&x, &fields, i);
            if d <= 0.0 || rng.random::<f64>() < libm::exp(-beta * d) {
                model.flip(&mut x, &mut fields, i);
            }
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qubo::Sense;
    use crate::solvers::pick_solution;

    fn two_box() -> QuboInstance {
        QuboInstance::from_entries(
            2,
            Sense::Maximize,
            [(0, 0, 0.36), (1, 1, 0.24), (0, 1, -0.27)],
            vec![0, 1],
        )
        .unwrap()
    }

    #[test]
    fn two_box_most_frequent() {
        let s = AnnealSchedule::new(100, 0.1, 10.0, 1000).unwrap();
        let ss = solve_anneal(&two_box(), &s, 42).unwrap();
        assert_eq!(ss.total_reads(), 1000);
        assert_eq!(pick_solution(&ss).unwrap(), vec![true, false]);
    }

    #[test]
    fn degenerate_schedule_is_uniform() {
        let s = AnnealSchedule {
            sweeps: 0,
            beta_start: 1.0,
            beta_end: 1.0,
            reads: 4000,
        };
        let ss = solve_anneal(&two_box(), &s, 7).unwrap();
        assert_eq!(ss.samples().len(), 4);
        for sample in ss.samples() {
            // 1000 expected per string; 5 sigma is about 137
            assert!((sample.count as i64 - 1000).abs() < 140, "{sample:?}");
        }
    }

    #[test]
    fn schedule_validation_and_ramp() {
        assert!(AnnealSchedule::new(10, 1.0, 1.0, 5).is_err());
        assert!(AnnealSchedule::new(0, 0.1, 1.0, 5).is_err());
        assert!(AnnealSchedule::new(10, 0.1, 1.0, 0).is_err());
        let s = AnnealSchedule::new(5, 0.1, 10.0, 1).unwrap();
        assert!((s.beta(0) - 0.1).abs() < 1e-15);
        assert!((s.beta(4) - 10.0).abs() < 1e-12);
        assert!((s.beta(2) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn deterministic() {
        let q = crate::solvers::random_instance(10, 0.5, 2);
        let s = AnnealSchedule::default().with_reads(50);
        assert_eq!(solve_anneal(&q, &s, 9).unwrap(), solve_anneal(&q, &s, 9).unwrap());
        assert_ne!(solve_anneal(&q, &s, 9).unwrap(), solve_anneal(&q, &s, 10).unwrap());
    }
}
