//! Detection evaluation: greedy matching, precision/recall, VOC-style AP and
//! mAP, and log-average miss rate over false positives per image.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::geometry::{iou, BoundingBox};
use crate::suppression::by_score_desc;
use crate::{Error, Result};

/// Lower clamp applied to miss rates before taking logarithms.
pub const MISS_RATE_FLOOR: f64 = 1e-10;

/// IoU thresholds `0.5, 0.55, ..., 0.95` of the COCO-style average.
pub const COCO_IOU_THRESHOLDS: [f64; 10] = [0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MatchFlag {
    Tp,
    Fp,
    /// Matched an ignore region; neither credited nor penalised.
    Ignored,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ApMode {
    /// Area under the interpolated precision envelope.
    #[default]
    AllPoint,
    /// Mean interpolated precision at recall `0, 0.1, ..., 1` (VOC 2007).
    ElevenPoint,
}

/// Ground truth of one image. `ignore[i]` marks `boxes[i]` as an ignore region.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GroundTruth {
    pub image_id: String,
    pub boxes: Vec<BoundingBox>,
    pub ignore: Vec<bool>,
}

impl GroundTruth {
    pub fn new(image_id: impl Into<String>, boxes: Vec<BoundingBox>, ignore: Vec<bool>) -> Result<Self> {
        if boxes.len() != ignore.len() {
            return Err(Error::InvalidInput(format!(
                "{} boxes but {} ignore flags",
                boxes.len(),
                ignore.len()
            )));
        }
        Ok(Self {
            image_id: image_id.into(),
            boxes,
            ignore,
        })
    }

    /// Number of non-ignored objects, optionally restricted to one class.
    pub fn count(&self, class_id: Option<u32>) -> usize {
        self.boxes
            .iter()
            .zip(&self.ignore)
            .filter(|(b, &ig)| !ig && class_id.is_none_or(|c| b.class_id == c))
            .count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchedDetection {
    pub score: f64,
    pub class_id: u32,
    pub source_index: usize,
    pub flag: MatchFlag,
}

/// Matches detections to ground truth of the same class in descending score
/// order (ties by `source_index`).
///
/// Each detection takes the unmatched, non-ignored object with the highest
/// IoU at or above `iou_threshold`. Failing that, a detection overlapping an
/// ignore region by at least the threshold is flagged [`MatchFlag::Ignored`];
/// all others are false positives. An object is matched at most once.
pub fn match_detections(
    dets: &[BoundingBox],
    gt: &GroundTruth,
    iou_threshold: f64,
) -> Vec<MatchedDetection> {
    let mut sorted = dets.to_vec();
    sorted.sort_by(by_score_desc);
    let mut taken = vec![false; gt.boxes.len()];
    sorted
        .iter()
        .map(|d| {
            let mut best: Option<(usize, f64)> = None;
            let mut hits_ignore = false;
            for (g, obj) in gt.boxes.iter().enumerate() {
                if obj.class_id != d.class_id {
                    continue;
                }
                let o = iou(d, obj);
                if o < iou_threshold {
                    continue;
                }
                if gt.ignore[g] {
                    hits_ignore = true;
                } else if !taken[g] && best.is_none_or(|(_, bo)| o > bo) {
                    best = Some((g, o));
                }
            }
            let flag = match best {
                Some((g, _)) => {
                    taken[g] = true;
                    MatchFlag::Tp
                }
                None if hits_ignore => MatchFlag::Ignored,
                None => MatchFlag::Fp,
            };
            MatchedDetection {
                score: d.score,
                class_id: d.class_id,
                source_index: d.source_index,
                flag,
            }
        })
        .collect()
}

/// Precision and recall after each non-ignored detection, in descending score
/// order. The sort is stable, so equal scores keep their input order.
pub fn pr_curve(records: &[(f64, MatchFlag)], num_gt: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if num_gt == 0 {
        return Err(Error::Undefined("precision/recall needs at least one ground-truth object".into()));
    }
    let mut sorted: Vec<(f64, MatchFlag)> = records
        .iter()
        .copied()
        .filter(|r| r.1 != MatchFlag::Ignored)
        .collect();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut precision = Vec::with_capacity(sorted.len());
    let mut recall = Vec::with_capacity(sorted.len());
    for (_, flag) in sorted {
        match flag {
            MatchFlag::Tp => tp += 1,
            _ => fp += 1,
        }
        precision.push(tp as f64 / (tp + fp) as f64);
        recall.push(tp as f64 / num_gt as f64);
    }
    Ok((precision, recall))
}

pub fn average_precision(records: &[(f64, MatchFlag)], num_gt: usize, mode: ApMode) -> Result<f64> {
    let (precision, recall) = pr_curve(records, num_gt)?;
    Ok(ap_from_curve(&precision, &recall, mode))
}

fn ap_from_curve(precision: &[f64], recall: &[f64], mode: ApMode) -> f64 {
    match mode {
        ApMode::AllPoint => {
            let mut mrec = Vec::with_capacity(recall.len() + 2);
            mrec.push(0.0);
            mrec.extend_from_slice(recall);
            mrec.push(1.0);
            let mut mpre = Vec::with_capacity(precision.len() + 2);
            mpre.push(0.0);
            mpre.extend_from_slice(precision);
            mpre.push(0.0);
            for i in (0..mpre.len() - 1).rev() {
                mpre[i] = mpre[i].max(mpre[i + 1]);
            }
            (1..mrec.len())
                .filter(|&i| mrec[i] != mrec[i - 1])
                .map(|i| (mrec[i] - mrec[i - 1]) * mpre[i])
                .sum()
        }
        ApMode::ElevenPoint => {
            (0..=10)
                .map(|t| {
                    let t = t as f64 / 10.0;
                    precision
                        .iter()
                        .zip(recall)
                        .filter(|(_, &r)| r >= t)
                        .map(|(&p, _)| p)
                        .fold(0.0, f64::max)
                })
                .sum::<f64>()
                / 11.0
        }
    }
}

/// Unweighted mean of per-class APs.
pub fn mean_ap(aps: &[f64]) -> Result<f64> {
    if aps.is_empty() {
        return Err(Error::Undefined("no class has ground truth".into()));
    }
    Ok(aps.iter().sum::<f64>() / aps.len() as f64)
}

/// Detections and ground truth of a single image.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ImageEval {
    pub detections: Vec<BoundingBox>,
    pub ground_truth: GroundTruth,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalConfig {
    pub iou_threshold: f64,
    pub ap_mode: ApMode,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            iou_threshold: 0.5,
            ap_mode: ApMode::AllPoint,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassEval {
    pub num_gt: usize,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub ap: f64,
}

/// A point of the miss-rate curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FppiPoint {
    pub fppi: f64,
    pub miss_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// Classes with at least one non-ignored ground-truth object.
    pub per_class: BTreeMap<u32, ClassEval>,
    pub map: Option<f64>,
    pub lamr: Option<f64>,
    pub fppi_curve: Vec<FppiPoint>,
}

fn matched_images(images: &[ImageEval], iou_threshold: f64) -> Vec<Vec<MatchedDetection>> {
    images
        .iter()
        .map(|im| match_detections(&im.detections, &im.ground_truth, iou_threshold))
        .collect()
}

fn class_records(matched: &[Vec<MatchedDetection>], class_id: u32) -> Vec<(f64, MatchFlag)> {
    matched
        .iter()
        .flatten()
        .filter(|m| m.class_id == class_id)
        .map(|m| (m.score, m.flag))
        .collect()
}

fn gt_per_class(images: &[ImageEval]) -> BTreeMap<u32, usize> {
    let mut counts = BTreeMap::new();
    for im in images {
        let gt = &im.ground_truth;
        for (b, &ig) in gt.boxes.iter().zip(&gt.ignore) {
            if !ig {
                *counts.entry(b.class_id).or_insert(0) += 1;
            }
        }
    }
    counts
}

/// Per-class AP over a set of images.
pub fn per_class_ap(images: &[ImageEval], cfg: &EvalConfig) -> BTreeMap<u32, ClassEval> {
    let matched = matched_images(images, cfg.iou_threshold);
    gt_per_class(images)
        .into_iter()
        .map(|(class_id, num_gt)| {
            let records = class_records(&matched, class_id);
            let (precision, recall) = pr_curve(&records, num_gt).expect("num_gt >= 1");
            let ap = ap_from_curve(&precision, &recall, cfg.ap_mode);
            (
                class_id,
                ClassEval {
                    num_gt,
                    precision,
                    recall,
                    ap,
                },
            )
        })
        .collect()
}

/// AllPoint mAP averaged over IoU thresholds `0.5:0.05:0.95`. This only
/// approximates the COCO protocol (no area ranges or detection limits).
pub fn coco_style_map(images: &[ImageEval]) -> Result<f64> {
    let per_threshold: Vec<f64> = COCO_IOU_THRESHOLDS
        .iter()
        .map(|&t| {
            let cfg = EvalConfig {
                iou_threshold: t,
                ap_mode: ApMode::AllPoint,
            };
            let aps: Vec<f64> = per_class_ap(images, &cfg).values().map(|c| c.ap).collect();
            mean_ap(&aps)
        })
        .collect::<Result<_>>()?;
    Ok(per_threshold.iter().sum::<f64>() / per_threshold.len() as f64)
}

/// The nine reference FPPI values `10^(-2 + k/4)`, `k = 0..8`.
pub fn reference_fppi() -> [f64; 9] {
    core::array::from_fn(|k| libm::pow(10.0, -2.0 + k as f64 / 4.0))
}

/// Log-average miss rate over all classes and images.
///
/// Sweeping the score threshold over the pooled detections traces
/// `(FPPI, miss rate)`, one point per distinct score. At each reference FPPI
/// the miss rate of the last point whose FPPI does not exceed it is taken,
/// or the highest-threshold point when none does. The result is the
/// geometric mean of those nine miss rates, each clamped at
/// [`MISS_RATE_FLOOR`].
pub fn log_average_miss_rate(images: &[ImageEval], iou_threshold: f64) -> Result<(f64, Vec<FppiPoint>)> {
    let total_gt: usize = images.iter().map(|im| im.ground_truth.count(None)).sum();
    if total_gt == 0 {
        return Err(Error::Undefined("miss rate needs at least one ground-truth object".into()));
    }
    let mut records: Vec<(f64, MatchFlag)> = matched_images(images, iou_threshold)
        .into_iter()
        .flatten()
        .filter(|m| m.flag != MatchFlag::Ignored)
        .map(|m| (m.score, m.flag))
        .collect();
    records.sort_by(|a, b| b.0.total_cmp(&a.0));

    let num_images = images.len() as f64;
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut curve = Vec::new();
    for (k, &(score, flag)) in records.iter().enumerate() {
        match flag {
            MatchFlag::Tp => tp += 1,
            _ => fp += 1,
        }
        let group_ends = records.get(k + 1).is_none_or(|next| next.0 != score);
        if group_ends {
            curve.push(FppiPoint {
                fppi: fp as f64 / num_images,
                miss_rate: 1.0 - tp as f64 / total_gt as f64,
            });
        }
    }
    Ok((lamr_from_curve(&curve), curve))
}

/// Samples a miss-rate curve at the nine reference FPPI values and returns
/// the clamped geometric mean. An empty curve means a miss rate of 1.
pub fn lamr_from_curve(curve: &[FppiPoint]) -> f64 {
    let refs = reference_fppi();
    let log_sum: f64 = refs
        .iter()
        .map(|&r| {
            let mr = match curve.iter().rposition(|p| p.fppi <= r) {
                Some(i) => curve[i].miss_rate,
                None => curve.first().map_or(1.0, |p| p.miss_rate),
            };
            libm::log(mr.max(MISS_RATE_FLOOR))
        })
        .sum();
    libm::exp(log_sum / refs.len() as f64)
}

/// Runs AP/mAP and, when ground truth exists, the miss-rate evaluation.
pub fn evaluate(images: &[ImageEval], cfg: &EvalConfig) -> EvalReport {
    let per_class = per_class_ap(images, cfg);
    let aps: Vec<f64> = per_class.values().map(|c| c.ap).collect();
    let map = mean_ap(&aps).ok();
    let (lamr, fppi_curve) = match log_average_miss_rate(images, cfg.iou_threshold) {
        Ok((l, c)) => (Some(l), c),
        Err(_) => (None, Vec::new()),
    };
    EvalReport {
        per_class,
        map,
        lamr,
        fppi_curve,
    }
}
