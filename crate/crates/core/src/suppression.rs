//! Suppression pipelines: greedy NMS, Gaussian soft-NMS, and the QUBO-based
//! schemes (plain QUBO suppression, QUBO with soft recovery of rejected
//! boxes, and the low-confidence adjusted variant).

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::str::FromStr;

use crate::geometry::{iou, BoundingBox};
use crate::qubo::{build_q, EnhConfig, QsqsWeights, QuboInstance};
use crate::solvers::{pick_solution, Sampler};
use crate::{Error, Result};

/// Hard limit on the number of variables handed to a solver per class.
pub const MAX_QUBIT_CAP: usize = 45;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    Nms,
    SoftNms,
    /// QUBO suppression; boxes the solver rejects are discarded.
    Qqs,
    /// QUBO suppression with Gaussian recovery of rejected boxes.
    Qsqs,
    /// As `Qsqs`, with the low-confidence adjustment applied to the matrix.
    QsqsEnh,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::Nms,
        Scheme::SoftNms,
        Scheme::Qqs,
        Scheme::Qsqs,
        Scheme::QsqsEnh,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Nms => "nms",
            Scheme::SoftNms => "soft-nms",
            Scheme::Qqs => "qqs",
            Scheme::Qsqs => "qsqs",
            Scheme::QsqsEnh => "qsqs-enh",
        }
    }

    pub fn is_qubo(self) -> bool {
        matches!(self, Scheme::Qqs | Scheme::Qsqs | Scheme::QsqsEnh)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        let found = match norm.as_str() {
            "softnms" => Some(Scheme::SoftNms),
            "qsqs+enh" | "qsqsenh" => Some(Scheme::QsqsEnh),
            other => Scheme::ALL.into_iter().find(|sc| sc.name() == other),
        };
        found.ok_or_else(|| {
            let valid: Vec<&str> = Scheme::ALL.iter().map(|s| s.name()).collect();
            Error::InvalidInput(format!(
                "unknown scheme '{s}', expected one of: {}",
                valid.join(", ")
            ))
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuppressionConfig {
    pub scheme: Scheme,
    /// IoU threshold of the NMS pass run before building the QUBO.
    pub pre_nms_threshold: f64,
    /// Maximum number of boxes per class kept for the QUBO.
    pub qubit_cap: usize,
    pub weights: QsqsWeights,
    /// Gaussian rescoring width.
    pub sigma: f64,
    /// Recovered (and soft-NMS) boxes need at least this score to be output.
    pub final_score_threshold: f64,
    /// IoU threshold of the plain NMS baseline.
    pub nms_threshold: f64,
    pub enh: EnhConfig,
}

impl SuppressionConfig {
    pub const DEFAULT_PRE_NMS_THRESHOLD: f64 = 0.5;
    pub const DEFAULT_QUBIT_CAP: usize = 35;
    pub const DEFAULT_SIGMA: f64 = 0.5;
    pub const DEFAULT_FINAL_SCORE_THRESHOLD: f64 = 0.01;
    pub const DEFAULT_NMS_THRESHOLD: f64 = 0.3;

    pub fn new(scheme: Scheme) -> Self {
        Self {
            scheme,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.pre_nms_threshold) {
            return Err(Error::InvalidInput(format!(
                "pre-NMS threshold {} outside [0, 1]",
                self.pre_nms_threshold
            )));
        }
        if !(0.0..=1.0).contains(&self.nms_threshold) {
            return Err(Error::InvalidInput(format!(
                "NMS threshold {} outside [0, 1]",
                self.nms_threshold
            )));
        }
        if self.qubit_cap == 0 || self.qubit_cap > MAX_QUBIT_CAP {
            return Err(Error::InvalidInput(format!(
                "qubit cap {} outside 1..={MAX_QUBIT_CAP}",
                self.qubit_cap
            )));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidInput(format!("sigma {} must be positive", self.sigma)));
        }
        if !(self.final_score_threshold >= 0.0 && self.final_score_threshold.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "final score threshold {} must be nonnegative",
                self.final_score_threshold
            )));
        }
        self.enh.validate()
    }

    /// The adjustment actually applied when building the matrix.
    pub fn effective_enh(&self) -> EnhConfig {
        EnhConfig {
            enabled: self.enh.enabled || self.scheme == Scheme::QsqsEnh,
            ..self.enh
        }
    }
}

impl Default for SuppressionConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::Qsqs,
            pre_nms_threshold: Self::DEFAULT_PRE_NMS_THRESHOLD,
            qubit_cap: Self::DEFAULT_QUBIT_CAP,
            weights: QsqsWeights::default(),
            sigma: Self::DEFAULT_SIGMA,
            final_score_threshold: Self::DEFAULT_FINAL_SCORE_THRESHOLD,
            nms_threshold: Self::DEFAULT_NMS_THRESHOLD,
            enh: EnhConfig::disabled(),
        }
    }
}

/// Descending score, ties by ascending `source_index`.
pub fn by_score_desc(a: &BoundingBox, b: &BoundingBox) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| a.source_index.cmp(&b.source_index))
}

/// `score * exp(-iou^2 / sigma)`.
pub fn gaussian_rescore(score: f64, iou: f64, sigma: f64) -> f64 {
    score * libm::exp(-(iou * iou) / sigma)
}

/// Greedy NMS: take the best remaining box, drop every remaining box whose
/// IoU with it exceeds `threshold`, repeat.
pub fn nms(dets: &[BoundingBox], threshold: f64) -> Vec<BoundingBox> {
    let mut sorted = dets.to_vec();
    sorted.sort_by(by_score_desc);
    let mut keep: Vec<BoundingBox> = Vec::with_capacity(sorted.len());
    for b in sorted {
        if keep.iter().all(|k| iou(k, &b) <= threshold) {
            keep.push(b);
        }
    }
    keep
}

/// Gaussian soft-NMS. Every remaining box is decayed by its overlap with the
/// selected box; boxes scoring below `score_threshold` are dropped.
pub fn soft_nms(dets: &[BoundingBox], sigma: f64, score_threshold: f64) -> Vec<BoundingBox> {
    let mut pool: Vec<BoundingBox> = dets
        .iter()
        .copied()
        .filter(|b| b.score >= score_threshold)
        .collect();
    let mut out = Vec::with_capacity(pool.len());
    while !pool.is_empty() {
        let (idx, _) = pool
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| by_score_desc(a, b))
            .expect("non-empty");
        let m = pool.swap_remove(idx);
        for b in pool.iter_mut() {
            b.score = gaussian_rescore(b.score, iou(&m, b), sigma);
        }
        pool.retain(|b| b.score >= score_threshold);
        out.push(m);
    }
    out.sort_by(by_score_desc);
    out
}

/// Boxes entering the QUBO for one class, after pre-NMS and the cap, sorted
/// by descending score.
pub fn qubo_candidates(dets: &[BoundingBox], cfg: &SuppressionConfig) -> Vec<BoundingBox> {
    let mut pre = nms(dets, cfg.pre_nms_threshold);
    pre.truncate(cfg.qubit_cap);
    pre
}

/// Candidates and their maximisation QUBO; `None` for an empty input.
pub fn prepare_qubo(
    dets: &[BoundingBox],
    cfg: &SuppressionConfig,
) -> Result<Option<(Vec<BoundingBox>, QuboInstance)>> {
    check_single_class(dets)?;
    let candidates = qubo_candidates(dets, cfg);
    if candidates.is_empty() {
        return Ok(None);
    }
    let q = build_q(&candidates, &cfg.weights, &cfg.effective_enh())?;
    Ok(Some((candidates, q)))
}

/// QUBO suppression for one class.
///
/// The negated (minimisation) QUBO is sent to `solver`; the most frequent
/// string splits the candidates into kept and rejected boxes. Unless the
/// scheme is [`Scheme::Qqs`], each rejected box is rescored against the kept
/// box it overlaps most and is output again when the decayed score reaches
/// `final_score_threshold`. If the solver keeps nothing, the highest scoring
/// candidate is kept.
pub fn qsqs<S: Sampler + ?Sized>(
    dets: &[BoundingBox],
    cfg: &SuppressionConfig,
    solver: &S,
) -> Result<Vec<BoundingBox>> {
    let Some((candidates, q)) = prepare_qubo(dets, cfg)? else {
        return Ok(Vec::new());
    };
    let samples = solver.sample(&q.negate())?;
    let mut bits = pick_solution(&samples)?;
    if bits.len() != candidates.len() {
        return Err(Error::InvalidInput(format!(
            "solver {} returned {} bits for {} variables",
            solver.name(),
            bits.len(),
            candidates.len()
        )));
    }
    if !bits.iter().any(|&b| b) {
        bits[0] = true;
    }

    let (kept, rejected): (Vec<_>, Vec<_>) = candidates
        .into_iter()
        .zip(bits)
        .partition(|(_, keep)| *keep);
    let kept: Vec<BoundingBox> = kept.into_iter().map(|(b, _)| b).collect();
    let mut out = kept.clone();
    if cfg.scheme != Scheme::Qqs {
        for (b, _) in rejected {
            let overlap = kept.iter().map(|k| iou(k, &b)).fold(0.0, f64::max);
            let score = gaussian_rescore(b.score, overlap, cfg.sigma);
            if score >= cfg.final_score_threshold {
                out.push(b.with_score(score));
            }
        }
    }
    out.sort_by(by_score_desc);
    Ok(out)
}

/// Applies the configured scheme to detections of a single class.
pub fn suppress_class<S: Sampler + ?Sized>(
    dets: &[BoundingBox],
    cfg: &SuppressionConfig,
    solver: &S,
) -> Result<Vec<BoundingBox>> {
    check_single_class(dets)?;
    match cfg.scheme {
        Scheme::Nms => Ok(nms(dets, cfg.nms_threshold)),
        Scheme::SoftNms => Ok(soft_nms(dets, cfg.sigma, cfg.final_score_threshold)),
        Scheme::Qqs | Scheme::Qsqs | Scheme::QsqsEnh => qsqs(dets, cfg, solver),
    }
}

/// Groups detections by class, suppresses each class independently and
/// concatenates the results in ascending class order.
pub fn suppress_image<S: Sampler + ?Sized>(
    dets: &[BoundingBox],
    cfg: &SuppressionConfig,
    solver: &S,
) -> Result<Vec<BoundingBox>> {
    let mut out = Vec::with_capacity(dets.len());
    for class_dets in group_by_class(dets).values() {
        out.extend(suppress_class(class_dets, cfg, solver)?);
    }
    Ok(out)
}

pub fn group_by_class(dets: &[BoundingBox]) -> BTreeMap<u32, Vec<BoundingBox>> {
    let mut groups: BTreeMap<u32, Vec<BoundingBox>> = BTreeMap::new();
    for d in dets {
        groups.entry(d.class_id).or_default().push(*d);
    }
    groups
}

fn check_single_class(dets: &[BoundingBox]) -> Result<()> {
    if let Some(first) = dets.first() {
        if let Some(other) = dets.iter().find(|d| d.class_id != first.class_id) {
            let msg: String = format!(
                "expected a single class, found {} and {}",
                first.class_id, other.class_id
            );
            return Err(Error::InvalidInput(msg));
        }
    }
    Ok(())
}
