//! Glue between the file formats and [`qsqs_core::eval`]: pairing images,
//! JSON reports and CSV curves.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::Serialize;

use qsqs_core::eval::{evaluate, ApMode, EvalConfig, EvalReport, GroundTruth, ImageEval};

use crate::io::{DetectionFile, GroundTruthFile};

/// Pairs detections with ground truth by `image_id`, in ground-truth order.
/// Images present only in the detection file follow with empty ground truth,
/// so their detections count as false positives.
pub fn pair_images(dets: &DetectionFile, gt: &GroundTruthFile) -> Vec<ImageEval> {
    let by_id: HashMap<&str, usize> = dets
        .images
        .iter()
        .enumerate()
        .map(|(i, im)| (im.image_id.as_str(), i))
        .collect();
    let mut used = vec![false; dets.images.len()];
    let mut out: Vec<ImageEval> = gt
        .images
        .iter()
        .map(|g| {
            let detections = match by_id.get(g.image_id.as_str()) {
                Some(&i) => {
                    used[i] = true;
                    dets.images[i].detections.clone()
                }
                None => Vec::new(),
            };
            ImageEval {
                detections,
                ground_truth: g.clone(),
            }
        })
        .collect();
    for (im, _) in dets.images.iter().zip(&used).filter(|(_, &u)| !u) {
        out.push(ImageEval {
            detections: im.detections.clone(),
            ground_truth: GroundTruth {
                image_id: im.image_id.clone(),
                ..GroundTruth::default()
            },
        });
    }
    out
}

pub fn evaluate_files(dets: &DetectionFile, gt: &GroundTruthFile, cfg: &EvalConfig) -> EvalReport {
    evaluate(&pair_images(dets, gt), cfg)
}

#[derive(Debug, Serialize)]
struct ReportJson<'a> {
    iou_threshold: f64,
    ap_mode: &'static str,
    map: Option<f64>,
    lamr: Option<f64>,
    per_class: Vec<ClassJson<'a>>,
    fppi_curve: Vec<[f64; 2]>,
}

#[derive(Debug, Serialize)]
struct ClassJson<'a> {
    class_id: u32,
    num_gt: usize,
    ap: f64,
    precision: &'a [f64],
    recall: &'a [f64],
}

pub fn ap_mode_name(mode: ApMode) -> &'static str {
    match mode {
        ApMode::AllPoint => "all-point",
        ApMode::ElevenPoint => "eleven-point",
    }
}

pub fn report_json(report: &EvalReport, cfg: &EvalConfig) -> String {
    let json = ReportJson {
        iou_threshold: cfg.iou_threshold,
        ap_mode: ap_mode_name(cfg.ap_mode),
        map: report.map,
        lamr: report.lamr,
        per_class: report
            .per_class
            .iter()
            .map(|(&class_id, c)| ClassJson {
                class_id,
                num_gt: c.num_gt,
                ap: c.ap,
                precision: &c.precision,
                recall: &c.recall,
            })
            .collect(),
        fppi_curve: report.fppi_curve.iter().map(|p| [p.fppi, p.miss_rate]).collect(),
    };
    crate::io::to_json(&json)
}

/// `class_id,rank,precision,recall` rows.
pub fn pr_curves_csv(report: &EvalReport) -> String {
    let mut s = String::from("class_id,rank,precision,recall\n");
    for (class_id, c) in &report.per_class {
        for (rank, (p, r)) in c.precision.iter().zip(&c.recall).enumerate() {
            let _ = writeln!(s, "{class_id},{},{p},{r}", rank + 1);
        }
    }
    s
}

/// `fppi,miss_rate` rows.
pub fn fppi_curve_csv(report: &EvalReport) -> String {
    let mut s = String::from("fppi,miss_rate\n");
    for p in &report.fppi_curve {
        let _ = writeln!(s, "{},{}", p.fppi, p.miss_rate);
    }
    s
}
