//! Command-line interface.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use qsqs_core::eval::{ApMode, EvalConfig};
use qsqs_core::suppression::{group_by_class, prepare_qubo};
use qsqs_core::{AnnealSchedule, TabuParams};

use crate::bench::{bench_csv, parse_grid, run_bench, Metric, DEFAULT_GRID};
use crate::compare::{compare_csv, match_rates, run_compare, CompareParams, CompareSolver};
use crate::config::{load_config_file, Config, ConfigFile};
use crate::evaluate::{evaluate_files, fppi_curve_csv, pr_curves_csv, report_json};
use crate::io::{load_detections, load_ground_truth, save_detections, save_ground_truth, to_json, write_text};
use crate::pipeline::suppress_file;
use crate::qubo_json::QuboJson;
use crate::synth::{generate, SynthParams};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "qsqs", version, about = "QUBO-based non-maximum suppression for object detections")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Suppress duplicate detections in a detection file.
    Suppress(SuppressArgs),
    /// Score detections against ground truth (mAP or log-average miss rate).
    Eval(EvalArgs),
    /// Sweep the pre-NMS threshold and qubit cap, one CSV row per cell.
    Bench(BenchArgs),
    /// Compare heuristic solvers with the exhaustive optimum on random QUBOs.
    SolverCompare(CompareArgs),
    /// Write the per-class QUBO instances built for each image.
    DumpQubo(DumpArgs),
    /// Generate a synthetic detection and ground-truth corpus.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct SchemeArgs {
    /// nms, soft-nms, qqs, qsqs or qsqs-enh.
    #[arg(long, default_value = "qsqs")]
    pub scheme: String,
    /// JSON config; its fields override the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// QUBO solver: anneal, tabu, exhaustive or greedy.
    #[arg(long, default_value = "anneal")]
    pub solver: String,
    /// Annealing reads.
    #[arg(long, default_value_t = AnnealSchedule::DEFAULT_READS)]
    pub reads: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl SchemeArgs {
    fn resolve(&self) -> Result<(Config, u64)> {
        let flags = ConfigFile {
            scheme: Some(self.scheme.clone()),
            solver: Some(crate::config::SolverFile {
                kind: Some(self.solver.clone()),
                reads: (self.solver == "anneal").then_some(self.reads),
                ..Default::default()
            }),
            ..Default::default()
        };
        let mut cfg = flags.apply(Config::default())?;
        if let Some(path) = &self.config {
            cfg = load_config_file(path)?.apply(cfg)?;
        }
        let seed = cfg.seed.unwrap_or(self.seed);
        Ok((cfg, seed))
    }
}

#[derive(Debug, Args)]
pub struct SuppressArgs {
    #[arg(long)]
    pub detections: PathBuf,
    #[command(flatten)]
    pub scheme: SchemeArgs,
    /// Output detection file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Map,
    Lamr,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Map => Metric::Map,
            MetricArg::Lamr => Metric::Lamr,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ApModeArg {
    AllPoint,
    ElevenPoint,
}

#[derive(Debug, Args)]
pub struct EvalOptions {
    #[arg(long)]
    pub ground_truth: PathBuf,
    #[arg(long, value_enum, default_value_t = MetricArg::Map)]
    pub metric: MetricArg,
    /// IoU needed for a detection to match an object.
    #[arg(long, default_value_t = 0.5)]
    pub iou: f64,
    #[arg(long, value_enum, default_value_t = ApModeArg::AllPoint)]
    pub ap_mode: ApModeArg,
}

impl EvalOptions {
    fn eval_config(&self) -> Result<EvalConfig> {
        if !(self.iou > 0.0 && self.iou <= 1.0) {
            return Err(Error::Validation(format!("--iou must lie in (0, 1], got {}", self.iou)));
        }
        Ok(EvalConfig {
            iou_threshold: self.iou,
            ap_mode: match self.ap_mode {
                ApModeArg::AllPoint => ApMode::AllPoint,
                ApModeArg::ElevenPoint => ApMode::ElevenPoint,
            },
        })
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub detections: PathBuf,
    #[command(flatten)]
    pub eval: EvalOptions,
    /// Directory receiving pr_curves.csv and fppi_curve.csv.
    #[arg(long)]
    pub curves: Option<PathBuf>,
    /// Report file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub detections: PathBuf,
    #[command(flatten)]
    pub eval: EvalOptions,
    #[arg(long, default_value = DEFAULT_GRID)]
    pub grid: String,
    #[command(flatten)]
    pub scheme: SchemeArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Comma-separated variable counts.
    #[arg(long, value_delimiter = ',', default_values_t = [9usize, 15])]
    pub n_vars: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    pub instances: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Probability that an off-diagonal coupling is present.
    #[arg(long, default_value_t = 0.5)]
    pub density: f64,
    /// Comma-separated subset of greedy, tabu, anneal.
    #[arg(long, value_delimiter = ',', default_value = "greedy,tabu,anneal")]
    pub solvers: Vec<String>,
    #[arg(long, default_value_t = AnnealSchedule::DEFAULT_READS)]
    pub reads: usize,
    #[arg(long, default_value_t = AnnealSchedule::DEFAULT_SWEEPS)]
    pub sweeps: usize,
    #[arg(long, default_value_t = AnnealSchedule::DEFAULT_BETA_START)]
    pub beta_start: f64,
    #[arg(long, default_value_t = AnnealSchedule::DEFAULT_BETA_END)]
    pub beta_end: f64,
    #[arg(long, default_value_t = TabuParams::default().tenure)]
    pub tenure: usize,
    #[arg(long, default_value_t = TabuParams::default().max_iterations)]
    pub max_iterations: usize,
    #[arg(long, default_value_t = TabuParams::default().restarts)]
    pub restarts: usize,
    /// Skip the exhaustive optimum (required above 25 variables).
    #[arg(long)]
    pub no_oracle: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DumpArgs {
    #[arg(long)]
    pub detections: PathBuf,
    #[command(flatten)]
    pub scheme: SchemeArgs,
    /// Restrict to one image.
    #[arg(long)]
    pub image: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 200)]
    pub images: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub detections_out: PathBuf,
    #[arg(long)]
    pub ground_truth_out: PathBuf,
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => write_text(path, text),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

fn suppress(a: &SuppressArgs) -> Result<()> {
    let (cfg, seed) = a.scheme.resolve()?;
    let input = load_detections(&a.detections)?;
    let solver = cfg.solver.build(seed);
    let outcome = suppress_file(&input, &cfg.suppression, solver.as_ref())?;
    match &a.out {
        Some(path) => save_detections(&outcome.file, path),
        None => emit(&outcome.file.to_json_string(), None),
    }
}

fn eval(a: &EvalArgs) -> Result<()> {
    let eval_cfg = a.eval.eval_config()?;
    let dets = load_detections(&a.detections)?;
    let gt = load_ground_truth(&a.eval.ground_truth)?;
    let report = evaluate_files(&dets, &gt, &eval_cfg);
    let metric = Metric::from(a.eval.metric);
    let value = match metric {
        Metric::Map => report.map,
        Metric::Lamr => report.lamr,
    };
    if value.is_none() {
        return Err(Error::Validation(format!(
            "{} is undefined: the ground truth contains no objects",
            metric.name()
        )));
    }
    if let Some(dir) = &a.curves {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_text(&dir.join("pr_curves.csv"), &pr_curves_csv(&report))?;
        write_text(&dir.join("fppi_curve.csv"), &fppi_curve_csv(&report))?;
    }
    emit(&report_json(&report, &eval_cfg), a.out.as_deref())
}

fn bench(a: &BenchArgs) -> Result<()> {
    let grid = parse_grid(&a.grid)?;
    let eval_cfg = a.eval.eval_config()?;
    let (cfg, seed) = a.scheme.resolve()?;
    let dets = load_detections(&a.detections)?;
    let gt = load_ground_truth(&a.eval.ground_truth)?;
    let solver = cfg.solver.build(seed);
    let metric = Metric::from(a.eval.metric);
    let rows = run_bench(&dets, &gt, &cfg.suppression, solver.as_ref(), &grid, metric, &eval_cfg)?;
    emit(&bench_csv(&rows, metric), a.out.as_deref())
}

fn solver_compare(a: &CompareArgs) -> Result<()> {
    let solvers = a
        .solvers
        .iter()
        .map(|s| s.parse::<CompareSolver>())
        .collect::<Result<Vec<_>>>()?;
    if !(0.0..=1.0).contains(&a.density) {
        return Err(Error::Validation(format!("--density must lie in [0, 1], got {}", a.density)));
    }
    let params = CompareParams {
        n_vars: a.n_vars.clone(),
        instances: a.instances,
        seed: a.seed,
        density: a.density,
        schedule: AnnealSchedule::new(a.sweeps, a.beta_start, a.beta_end, a.reads)?,
        tabu: TabuParams::new(a.tenure, a.max_iterations, a.restarts, a.seed)?,
        solvers,
        oracle: !a.no_oracle,
    };
    let rows = run_compare(&params)?;
    emit(&compare_csv(&rows), a.out.as_deref())?;
    for ((n, solver), rate) in match_rates(&rows) {
        eprintln!("n={n} {}: {:.1}% matched the optimum", solver.name(), rate * 100.0);
    }
    Ok(())
}

#[derive(Serialize)]
struct DumpEntry {
    image_id: String,
    class_id: u32,
    qubo: QuboJson,
}

fn dump_qubo(a: &DumpArgs) -> Result<()> {
    let (cfg, _) = a.scheme.resolve()?;
    let s = &cfg.suppression;
    if !s.scheme.is_qubo() {
        return Err(Error::Validation(format!("scheme '{}' does not build a QUBO", s.scheme)));
    }
    s.validate()?;
    let input = load_detections(&a.detections)?;
    let mut entries = Vec::new();
    for im in &input.images {
        if a.image.as_ref().is_some_and(|id| *id != im.image_id) {
            continue;
        }
        for (class_id, dets) in group_by_class(&im.detections) {
            if let Some((_, q)) = prepare_qubo(&dets, s)? {
                entries.push(DumpEntry {
                    image_id: im.image_id.clone(),
                    class_id,
                    qubo: QuboJson::from(&q),
                });
            }
        }
    }
    if let Some(id) = &a.image {
        if !input.images.iter().any(|im| im.image_id == *id) {
            return Err(Error::Validation(format!("image '{id}' not found")));
        }
    }
    emit(&to_json(&entries), a.out.as_deref())
}

fn synth(a: &SynthArgs) -> Result<()> {
    let (dets, gt) = generate(&SynthParams {
        images: a.images,
        seed: a.seed,
        ..SynthParams::default()
    })?;
    save_detections(&dets, &a.detections_out)?;
    save_ground_truth(&gt, &a.ground_truth_out)
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Suppress(a) => suppress(a),
        Command::Eval(a) => eval(a),
        Command::Bench(a) => bench(a),
        Command::SolverCompare(a) => solver_compare(a),
        Command::DumpQubo(a) => dump_qubo(a),
        Command::Synth(a) => synth(a),
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(main_with_args(["qsqs", "frobnicate"]), 1);
        assert_eq!(main_with_args(["qsqs", "suppress"]), 1);
        assert_eq!(main_with_args(["qsqs", "--help"]), 0);
    }

    #[test]
    fn flags_then_config_override() {
        let args = SchemeArgs {
            scheme: "nms".into(),
            config: None,
            solver: "tabu".into(),
            reads: 10,
            seed: 4,
        };
        let (cfg, seed) = args.resolve().unwrap();
        assert_eq!(cfg.suppression.scheme, qsqs_core::Scheme::Nms);
        assert_eq!(cfg.solver.name(), "tabu");
        assert_eq!(seed, 4);
        let bad = SchemeArgs {
            scheme: "fast-nms".into(),
            ..args
        };
        assert!(matches!(bad.resolve(), Err(Error::Validation(_))));
    }
}
