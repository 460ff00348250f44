//! Sensitivity sweep over the pre-NMS threshold and the qubit cap.

use std::fmt::Write as _;
use std::str::FromStr;

use qsqs_core::eval::EvalConfig;
use qsqs_core::{Sampler, SuppressionConfig};

use crate::evaluate::evaluate_files;
use crate::io::{DetectionFile, GroundTruthFile};
use crate::pipeline::suppress_file;
use crate::{Error, Result};

pub const DEFAULT_GRID: &str = "Nt=0.3:0.1:0.7,cap=15:5:45";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Map,
    Lamr,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Map => "map",
            Metric::Lamr => "lamr",
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "map" => Ok(Metric::Map),
            "lamr" | "mr" => Ok(Metric::Lamr),
            other => Err(Error::Validation(format!("unknown metric '{other}', expected map or lamr"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub n_t: Vec<f64>,
    pub caps: Vec<usize>,
}

impl Grid {
    pub fn cells(&self) -> usize {
        self.n_t.len() * self.caps.len()
    }
}

fn parse_range(key: &str, spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::Validation(format!("malformed range '{spec}' for {key}, expected start:step:end or a single value"));
    let parts: Vec<f64> = spec
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    match parts[..] {
        [v] if v.is_finite() => Ok(vec![v]),
        [start, step, end] if start.is_finite() && end.is_finite() && step > 0.0 && end >= start => {
            let count = ((end - start) / step + 1e-9).floor() as usize + 1;
            // round away accumulated binary noise such as 0.30000000000000004
            Ok((0..count)
                .map(|k| ((start + k as f64 * step) * 1e9).round() / 1e9)
                .collect())
        }
        _ => Err(bad()),
    }
}

/// Parses `Nt=start:step:end,cap=start:step:end`; either key may be a single
/// value, and an omitted key falls back to its default range.
pub fn parse_grid(spec: &str) -> Result<Grid> {
    let mut n_t = None;
    let mut caps = None;
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| Error::Validation(format!("malformed grid item '{item}', expected key=range")))?;
        match key.trim().to_ascii_lowercase().as_str() {
            "nt" | "n_t" => {
                let v = parse_range("Nt", value)?;
                if v.iter().any(|x| !(0.0..=1.0).contains(x)) {
                    return Err(Error::Validation(format!("Nt values {v:?} must lie in [0, 1]")));
                }
                n_t = Some(v);
            }
            "cap" => {
                let v = parse_range("cap", value)?;
                if v.iter().any(|x| x.fract() != 0.0 || *x < 1.0) {
                    return Err(Error::Validation(format!("cap values {v:?} must be positive integers")));
                }
                caps = Some(v.into_iter().map(|x| x as usize).collect());
            }
            other => return Err(Error::Validation(format!("unknown grid key '{other}', expected Nt or cap"))),
        }
    }
    Ok(Grid {
        n_t: n_t.unwrap_or_else(|| parse_range("Nt", "0.3:0.1:0.7").expect("default")),
        caps: caps.unwrap_or_else(|| (15..=45).step_by(5).collect()),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub n_t: f64,
    pub qubit_cap: usize,
    pub value: f64,
    pub mean_ms_per_image: f64,
}

/// Runs suppression and evaluation for every grid cell.
pub fn run_bench<S>(
    dets: &DetectionFile,
    gt: &GroundTruthFile,
    base: &SuppressionConfig,
    solver: &S,
    grid: &Grid,
    metric: Metric,
    eval_cfg: &EvalConfig,
) -> Result<Vec<BenchRow>>
where
    S: Sampler + Sync + ?Sized,
{
    let mut rows = Vec::with_capacity(grid.cells());
    for &n_t in &grid.n_t {
        for &cap in &grid.caps {
            let cfg = SuppressionConfig {
                pre_nms_threshold: n_t,
                qubit_cap: cap,
                ..base.clone()
            };
            let outcome = suppress_file(dets, &cfg, solver)?;
            let report = evaluate_files(&outcome.file, gt, eval_cfg);
            let value = match metric {
                Metric::Map => report.map,
                Metric::Lamr => report.lamr,
            }
            .ok_or_else(|| Error::Validation(format!("{} is undefined: no ground truth", metric.name())))?;
            rows.push(BenchRow {
                n_t,
                qubit_cap: cap,
                value,
                mean_ms_per_image: outcome.mean_ms_per_image(),
            });
        }
    }
    Ok(rows)
}

pub fn bench_csv(rows: &[BenchRow], metric: Metric) -> String {
    let mut s = String::from("n_t,qubit_cap,metric,value,mean_ms_per_image\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            r.n_t,
            r.qubit_cap,
            metric.name(),
            r.value,
            r.mean_ms_per_image
        );
    }
    s
}
