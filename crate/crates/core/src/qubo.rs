//! QUBO instances built from detections, their objective, and the Ising form.
//!
//! An instance is an upper-triangular matrix `q` over `n` binary variables.
//! The diagonal holds linear coefficients and `q[i][j]` for `i < j` the
//! pairwise ones, so the objective is
//! `sum_i q[i][i] x_i + sum_{i<j} q[i][j] x_i x_j` (`x_i^2 = x_i` folds the
//! `i == j` quadratic term into the diagonal).

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::geometry::{iou, spatial_overlap, BoundingBox};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    Maximize,
    Minimize,
}

impl Sense {
    pub fn flipped(self) -> Self {
        match self {
            Sense::Maximize => Sense::Minimize,
            Sense::Minimize => Sense::Maximize,
        }
    }

    /// `true` when `a` is strictly better than `b` under this sense.
    pub fn better(self, a: f64, b: f64) -> bool {
        match self {
            Sense::Maximize => a > b,
            Sense::Minimize => a < b,
        }
    }

    /// Converts an objective value into a cost that is always minimised.
    pub(crate) fn cost_sign(self) -> f64 {
        match self {
            Sense::Maximize => -1.0,
            Sense::Minimize => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuboInstance {
    n: usize,
    // dense row-major n*n; entries below the diagonal stay zero
    q: Vec<f64>,
    sense: Sense,
    labels: Vec<usize>,
}

impl QuboInstance {
    /// A zero matrix with labels `0..n`.
    pub fn zeros(n: usize, sense: Sense) -> Self {
        Self {
            n,
            q: vec![0.0; n * n],
            sense,
            labels: (0..n).collect(),
        }
    }

    /// Builds an instance from `(i, j, value)` triples with `i <= j`.
    /// Repeated entries accumulate.
    pub fn from_entries(
        n: usize,
        sense: Sense,
        entries: impl IntoIterator<Item = (usize, usize, f64)>,
        labels: Vec<usize>,
    ) -> Result<Self> {
        let mut inst = Self::zeros(n, sense);
        inst.set_labels(labels)?;
        for (i, j, v) in entries {
            if i > j || j >= n {
                return Err(Error::InvalidInput(format!(
                    "entry ({i}, {j}) is not in the upper triangle of a {n}x{n} matrix"
                )));
            }
            if !v.is_finite() {
                return Err(Error::InvalidInput(format!("entry ({i}, {j}) is not finite")));
            }
            inst.q[i * n + j] += v;
        }
        Ok(inst)
    }

    pub fn set_labels(&mut self, labels: Vec<usize>) -> Result<()> {
        if labels.len() != self.n {
            return Err(Error::InvalidInput(format!(
                "{} labels for {} variables",
                labels.len(),
                self.n
            )));
        }
        let mut sorted = labels.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidInput("labels must be distinct".into()));
        }
        self.labels = labels;
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Coefficient `q[i][j]`; entries below the diagonal are zero.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i > j {
            0.0
        } else {
            self.q[i * self.n + j]
        }
    }

    /// Coefficient of the unordered pair `{i, j}`.
    pub fn pair(&self, i: usize, j: usize) -> f64 {
        self.get(i.min(j), i.max(j))
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        assert!(i <= j && j < self.n, "({i}, {j}) outside upper triangle");
        self.q[i * self.n + j] = value;
    }

    /// Non-zero upper-triangular entries in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            (i..self.n).filter_map(move |j| {
                let v = self.q[i * self.n + j];
                (v != 0.0).then_some((i, j, v))
            })
        })
    }

    /// Objective value of the assignment `x`.
    pub fn energy(&self, x: &[bool]) -> Result<f64> {
        if x.len() != self.n {
            return Err(Error::InvalidInput(format!(
                "assignment of length {} for {} variables",
                x.len(),
                self.n
            )));
        }
        Ok(self.energy_unchecked(x))
    }

    pub(crate) fn energy_unchecked(&self, x: &[bool]) -> f64 {
        let n = self.n;
        let mut total = 0.0;
        for i in (0..n).filter(|&i| x[i]) {
            let row = &self.q[i * n..(i + 1) * n];
            total += row[i];
            for j in (i + 1..n).filter(|&j| x[j]) {
                total += row[j];
            }
        }
        total
    }

    /// Negates every coefficient and flips the sense; maximisation becomes the
    /// equivalent minimisation.
    pub fn negate(&self) -> Self {
        Self {
            n: self.n,
            q: self.q.iter().map(|v| -v).collect(),
            sense: self.sense.flipped(),
            labels: self.labels.clone(),
        }
    }

    /// Substitutes `x_i = (s_i + 1) / 2` to obtain the equivalent spin model.
    pub fn to_ising(&self) -> IsingModel {
        let n = self.n;
        let mut h = vec![0.0; n];
        let mut j = BTreeMap::new();
        let mut offset = 0.0;
        for (a, b, v) in self.entries() {
            if a == b {
                h[a] += v / 2.0;
                offset += v / 2.0;
            } else {
                h[a] += v / 4.0;
                h[b] += v / 4.0;
                j.insert((a, b), v / 4.0);
                offset += v / 4.0;
            }
        }
        IsingModel {
            h,
            j,
            offset,
            sense: self.sense,
        }
    }
}

pub fn qubo_energy(q: &QuboInstance, x: &[bool]) -> Result<f64> {
    q.energy(x)
}

pub fn negate(q: &QuboInstance) -> QuboInstance {
    q.negate()
}

pub fn to_ising(q: &QuboInstance) -> IsingModel {
    q.to_ising()
}

/// Spin-variable form `sum_i h_i s_i + sum_{i<j} J_ij s_i s_j + offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingModel {
    pub h: Vec<f64>,
    pub j: BTreeMap<(usize, usize), f64>,
    pub offset: f64,
    pub sense: Sense,
}

impl IsingModel {
    pub fn n(&self) -> usize {
        self.h.len()
    }

    /// Energy of a spin configuration; every spin must be `-1` or `+1`.
    pub fn energy(&self, spins: &[i8]) -> Result<f64> {
        if spins.len() != self.n() {
            return Err(Error::InvalidInput(format!(
                "{} spins for {} sites",
                spins.len(),
                self.n()
            )));
        }
        if spins.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidInput("spins must be +1 or -1".into()));
        }
        let field: f64 = self
            .h
            .iter()
            .zip(spins)
            .map(|(h, &s)| h * f64::from(s))
            .sum();
        let coupling: f64 = self
            .j
            .iter()
            .map(|(&(a, b), v)| v * f64::from(spins[a] * spins[b]))
            .sum();
        Ok(field + coupling + self.offset)
    }
}

/// `s_i = 2 x_i - 1`.
pub fn bits_to_spins(x: &[bool]) -> Vec<i8> {
    x.iter().map(|&b| if b { 1 } else { -1 }).collect()
}

pub fn spins_to_bits(s: &[i8]) -> Vec<bool> {
    s.iter().map(|&v| v > 0).collect()
}

/// Weights of the score, IoU and spatial-overlap terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QsqsWeights {
    w1: f64,
    w2: f64,
    w3: f64,
}

impl QsqsWeights {
    pub const SUM_TOLERANCE: f64 = 1e-9;

    pub fn new(w1: f64, w2: f64, w3: f64) -> Result<Self> {
        let ws = [w1, w2, w3];
        if ws.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidInput(format!(
                "weights must be finite and nonnegative, got {ws:?}"
            )));
        }
        if (w1 + w2 + w3 - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(Error::InvalidInput(format!(
                "weights must sum to 1, got {}",
                w1 + w2 + w3
            )));
        }
        Ok(Self { w1, w2, w3 })
    }

    pub fn score(&self) -> f64 {
        self.w1
    }

    pub fn iou(&self) -> f64 {
        self.w2
    }

    pub fn spatial(&self) -> f64 {
        self.w3
    }
}

impl Default for QsqsWeights {
    fn default() -> Self {
        Self {
            w1: 0.4,
            w2: 0.3,
            w3: 0.3,
        }
    }
}

/// Adjustment for low-confidence boxes: their linear reward is scaled by
/// `score_penalty` and their overlap penalties by `overlap_reward`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnhConfig {
    pub enabled: bool,
    pub objectness_threshold: f64,
    pub score_penalty: f64,
    pub overlap_reward: f64,
}

impl EnhConfig {
    pub const DEFAULT_OBJECTNESS_THRESHOLD: f64 = 0.3;
    pub const DEFAULT_SCORE_PENALTY: f64 = 0.1;
    pub const DEFAULT_OVERLAP_REWARD: f64 = 0.7;

    pub fn disabled() -> Self {
        Self {
            enabled: false,
            ..Self::enabled_default()
        }
    }

    pub fn enabled_default() -> Self {
        Self {
            enabled: true,
            objectness_threshold: Self::DEFAULT_OBJECTNESS_THRESHOLD,
            score_penalty: Self::DEFAULT_SCORE_PENALTY,
            overlap_reward: Self::DEFAULT_OVERLAP_REWARD,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.objectness_threshold) {
            return Err(Error::InvalidInput(format!(
                "objectness threshold {} outside [0, 1]",
                self.objectness_threshold
            )));
        }
        for (name, v) in [
            ("score_penalty", self.score_penalty),
            ("overlap_reward", self.overlap_reward),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::InvalidInput(format!("{name} {v} outside (0, 1]")));
            }
        }
        Ok(())
    }
}

impl Default for EnhConfig {
    fn default() -> Self {
        Self::disabled()
    }
}

/// Per-box scores and pairwise overlap measures feeding [`build_q_from_features`].
#[derive(Debug, Clone, PartialEq)]
pub struct PairFeatures {
    pub scores: Vec<f64>,
    pub labels: Vec<usize>,
    /// Symmetric `n*n` row-major IoU matrix.
    pub iou: Vec<f64>,
    /// Symmetric `n*n` row-major spatial-overlap matrix.
    pub spatial: Vec<f64>,
}

impl PairFeatures {
    pub fn from_boxes(dets: &[BoundingBox]) -> Self {
        let n = dets.len();
        let mut iou_m = vec![0.0; n * n];
        let mut spat_m = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v = iou(&dets[i], &dets[j]);
                let s = spatial_overlap(&dets[i], &dets[j]);
                iou_m[i * n + j] = v;
                iou_m[j * n + i] = v;
                spat_m[i * n + j] = s;
                spat_m[j * n + i] = s;
            }
        }
        Self {
            scores: dets.iter().map(|d| d.score).collect(),
            labels: dets.iter().map(|d| d.source_index).collect(),
            iou: iou_m,
            spatial: spat_m,
        }
    }

    pub fn n(&self) -> usize {
        self.scores.len()
    }
}

/// Builds the maximisation QUBO for one class of detections:
/// `q[i][i] = w1 s_i`, `q[i][j] = -w2 IoU(b_i, b_j) - w3 spatial(b_i, b_j)`.
pub fn build_q(dets: &[BoundingBox], w: &QsqsWeights, enh: &EnhConfig) -> Result<QuboInstance> {
    let first = dets.first().ok_or(Error::EmptyInput("no detections"))?;
    if let Some(other) = dets.iter().find(|d| d.class_id != first.class_id) {
        return Err(Error::InvalidInput(format!(
            "mixed classes {} and {} in one QUBO",
            first.class_id, other.class_id
        )));
    }
    build_q_from_features(&PairFeatures::from_boxes(dets), w, enh)
}

pub fn build_q_from_features(
    f: &PairFeatures,
    w: &QsqsWeights,
    enh: &EnhConfig,
) -> Result<QuboInstance> {
    let n = f.n();
    if n == 0 {
        return Err(Error::EmptyInput("no detections"));
    }
    if f.iou.len() != n * n || f.spatial.len() != n * n {
        return Err(Error::InvalidInput("pair matrices must be n*n".into()));
    }
    if enh.enabled {
        enh.validate()?;
    }
    let low: Vec<bool> = f
        .scores
        .iter()
        .map(|&s| enh.enabled && s < enh.objectness_threshold)
        .collect();

    let mut q = QuboInstance::zeros(n, Sense::Maximize);
    q.set_labels(f.labels.clone())?;
    for i in 0..n {
        let mut lin = w.score() * f.scores[i];
        if low[i] {
            lin *= enh.score_penalty;
        }
        q.set(i, i, lin);
        for j in i + 1..n {
            let mut pair = -w.iou() * f.iou[i * n + j] - w.spatial() * f.spatial[i * n + j];
            if low[i] || low[j] {
                pair *= enh.overlap_reward;
            }
            q.set(i, j, pair);
        }
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn two_box_features() -> PairFeatures {
        PairFeatures {
            scores: vec![0.9, 0.6],
            labels: vec![0, 1],
            iou: vec![0.0, 0.5, 0.5, 0.0],
            spatial: vec![0.0, 0.4, 0.4, 0.0],
        }
    }

    #[test]
    fn two_box_matrix() {
        let q = build_q_from_features(&two_box_features(), &QsqsWeights::default(), &EnhConfig::disabled())
            .unwrap();
        assert_eq!(q.sense(), Sense::Maximize);
        assert_relative_eq!(q.get(0, 0), 0.36, epsilon = 1e-12);
        assert_relative_eq!(q.get(1, 1), 0.24, epsilon = 1e-12);
        assert_relative_eq!(q.get(0, 1), -0.27, epsilon = 1e-12);
        assert_eq!(q.get(1, 0), 0.0);

        assert_eq!(q.energy(&[false, false]).unwrap(), 0.0);
        assert_relative_eq!(q.energy(&[true, true]).unwrap(), 0.33, epsilon = 1e-12);
        assert_relative_eq!(q.energy(&[true, false]).unwrap(), 0.36, epsilon = 1e-12);
    }

    #[test]
    fn two_box_matrix_enhanced() {
        let enh = EnhConfig {
            objectness_threshold: 0.7,
            ..EnhConfig::enabled_default()
        };
        let q = build_q_from_features(&two_box_features(), &QsqsWeights::default(), &enh).unwrap();
        assert_relative_eq!(q.get(0, 0), 0.36, epsilon = 1e-12);
        assert_relative_eq!(q.get(1, 1), 0.024, epsilon = 1e-12);
        assert_relative_eq!(q.get(0, 1), -0.189, epsilon = 1e-12);
    }

    #[test]
    fn single_box() {
        let b = BoundingBox::new([0.0, 0.0, 5.0, 5.0], 1.0, 3, 0).unwrap();
        let q = build_q(&[b], &QsqsWeights::default(), &EnhConfig::disabled()).unwrap();
        assert_eq!(q.n(), 1);
        assert_relative_eq!(q.get(0, 0), 0.4);
        assert_eq!(q.entries().count(), 1);
        assert_relative_eq!(q.energy(&[true]).unwrap(), 0.4);
    }

    #[test]
    fn build_errors() {
        let w = QsqsWeights::default();
        assert_eq!(
            build_q(&[], &w, &EnhConfig::disabled()),
            Err(Error::EmptyInput("no detections"))
        );
        let a = BoundingBox::new([0.0, 0.0, 5.0, 5.0], 0.5, 0, 0).unwrap();
        let b = BoundingBox::new([0.0, 0.0, 5.0, 5.0], 0.5, 1, 1).unwrap();
        assert!(matches!(
            build_q(&[a, b], &w, &EnhConfig::disabled()),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn energy_length_mismatch() {
        let q = QuboInstance::zeros(3, Sense::Maximize);
        assert!(matches!(q.energy(&[true]), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn negation() {
        let q = build_q_from_features(&two_box_features(), &QsqsWeights::default(), &EnhConfig::disabled())
            .unwrap();
        let m = q.negate();
        assert_eq!(m.sense(), Sense::Minimize);
        assert_relative_eq!(m.get(0, 0), -0.36, epsilon = 1e-12);
        assert_relative_eq!(m.get(1, 1), -0.24, epsilon = 1e-12);
        assert_relative_eq!(m.get(0, 1), 0.27, epsilon = 1e-12);
        assert_eq!(m.negate(), q);

        let z = QuboInstance::zeros(4, Sense::Minimize).negate();
        assert_eq!(z.sense(), Sense::Maximize);
        assert!(z.entries().next().is_none());
    }

    #[test]
    fn ising_of_zero_qubo() {
        let m = QuboInstance::zeros(3, Sense::Maximize).to_ising();
        assert!(m.h.iter().all(|&h| h == 0.0));
        assert!(m.j.is_empty());
        assert_eq!(m.offset, 0.0);
        assert_eq!(m.energy(&[-1, -1, -1]).unwrap(), 0.0);
    }

    #[test]
    fn ising_two_box_exhaustive() {
        let q = build_q_from_features(&two_box_features(), &QsqsWeights::default(), &EnhConfig::disabled())
            .unwrap();
        let m = q.to_ising();
        for mask in 0..4u32 {
            let x = [mask & 1 != 0, mask & 2 != 0];
            let e_q = q.energy(&x).unwrap();
            let e_s = m.energy(&bits_to_spins(&x)).unwrap();
            assert_relative_eq!(e_q, e_s, epsilon = 1e-12);
        }
        assert_eq!(spins_to_bits(&bits_to_spins(&[true, false])), vec![true, false]);
    }

    #[test]
    fn weights_validation() {
        assert!(QsqsWeights::new(0.4, 0.3, 0.3).is_ok());
        assert!(QsqsWeights::new(1.0, 0.0, 0.0).is_ok());
        assert!(QsqsWeights::new(0.5, 0.3, 0.3).is_err());
        assert!(QsqsWeights::new(1.2, -0.1, -0.1).is_err());
    }

    #[test]
    fn enh_validation() {
        assert!(EnhConfig::enabled_default().validate().is_ok());
        let bad = EnhConfig {
            score_penalty: 0.0,
            ..EnhConfig::enabled_default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn from_entries_rejects_lower_triangle() {
        assert!(QuboInstance::from_entries(2, Sense::Maximize, [(1, 0, 1.0)], vec![0, 1]).is_err());
        assert!(QuboInstance::from_entries(2, Sense::Maximize, [(0, 1, 1.0)], vec![0, 0]).is_err());
    }
}
