//! JSON configuration for suppression and solver choice.
//!
//! Every field is optional; omitted fields keep their defaults (pre-NMS 0.5,
//! qubit cap 35, weights 0.4/0.3/0.3, sigma 0.5, final score threshold 0.01,
//! NMS baseline threshold 0.3, annealing solver with 1000 reads).

use std::path::Path;

use serde::{Deserialize, Serialize};

use qsqs_core::solvers::{AnnealSolver, ExhaustiveSolver, GreedySolver, TabuSolver};
use qsqs_core::{AnnealSchedule, EnhConfig, QsqsWeights, Sampler, Scheme, SuppressionConfig, TabuParams};

use crate::io::read_json;
use crate::{Error, Result};

pub const SOLVER_KINDS: [&str; 4] = ["anneal", "tabu", "exhaustive", "greedy"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolverSpec {
    Exhaustive,
    Greedy,
    Tabu(TabuParams),
    Anneal(AnnealSchedule),
}

impl Default for SolverSpec {
    fn default() -> Self {
        SolverSpec::Anneal(AnnealSchedule::default())
    }
}

pub type DynSampler = Box<dyn Sampler + Send + Sync>;

impl SolverSpec {
    pub fn name(&self) -> &'static str {
        match self {
            SolverSpec::Exhaustive => "exhaustive",
            SolverSpec::Greedy => "greedy",
            SolverSpec::Tabu(_) => "tabu",
            SolverSpec::Anneal(_) => "anneal",
        }
    }

    /// Instantiates the sampler; `seed` drives every stochastic solver.
    pub fn build(&self, seed: u64) -> DynSampler {
        match *self {
            SolverSpec::Exhaustive => Box::new(ExhaustiveSolver),
            SolverSpec::Greedy => Box::new(GreedySolver),
            SolverSpec::Tabu(p) => Box::new(TabuSolver::new(TabuParams { seed, ..p })),
            SolverSpec::Anneal(s) => Box::new(AnnealSolver::new(s, seed)),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    pub suppression: SuppressionConfig,
    pub solver: SolverSpec,
    pub seed: Option<u64>,
}

/// Contents of a configuration file; `None` fields leave the base untouched.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub scheme: Option<String>,
    pub pre_nms_threshold: Option<f64>,
    pub qubit_cap: Option<usize>,
    pub weights: Option<WeightsFile>,
    pub sigma: Option<f64>,
    pub final_score_threshold: Option<f64>,
    pub nms_threshold: Option<f64>,
    pub enh: Option<EnhFile>,
    pub solver: Option<SolverFile>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsFile {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnhFile {
    pub enabled: Option<bool>,
    pub objectness_threshold: Option<f64>,
    pub score_penalty: Option<f64>,
    pub overlap_reward: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverFile {
    pub kind: Option<String>,
    pub reads: Option<usize>,
    pub sweeps: Option<usize>,
    pub beta_start: Option<f64>,
    pub beta_end: Option<f64>,
    pub tenure: Option<usize>,
    pub max_iterations: Option<usize>,
    pub restarts: Option<usize>,
}

pub fn parse_scheme(name: &str) -> Result<Scheme> {
    name.parse::<Scheme>()
        .map_err(|e| Error::Validation(e.to_string().trim_start_matches("invalid input: ").to_owned()))
}

impl SolverFile {
    fn apply(&self, base: SolverSpec) -> Result<SolverSpec> {
        let kind = self.kind.as_deref().unwrap_or(base.name());
        let spec = match kind {
            "exhaustive" => SolverSpec::Exhaustive,
            "greedy" => SolverSpec::Greedy,
            "tabu" => {
                let mut p = match base {
                    SolverSpec::Tabu(p) => p,
                    _ => TabuParams::default(),
                };
                if let Some(v) = self.tenure {
                    p.tenure = v;
                }
                if let Some(v) = self.max_iterations {
                    p.max_iterations = v;
                }
                if let Some(v) = self.restarts {
                    p.restarts = v;
                }
                p.validate()?;
                SolverSpec::Tabu(p)
            }
            "anneal" => {
                let mut s = match base {
                    SolverSpec::Anneal(s) => s,
                    _ => AnnealSchedule::default(),
                };
                if let Some(v) = self.reads {
                    s.reads = v;
                }
                if let Some(v) = self.sweeps {
                    s.sweeps = v;
                }
                if let Some(v) = self.beta_start {
                    s.beta_start = v;
                }
                if let Some(v) = self.beta_end {
                    s.beta_end = v;
                }
                s.validate()?;
                SolverSpec::Anneal(s)
            }
            other => {
                return Err(Error::Validation(format!(
                    "unknown solver '{other}', expected one of: {}",
                    SOLVER_KINDS.join(", ")
                )))
            }
        };
        Ok(spec)
    }
}

impl ConfigFile {
    pub fn from_json_str(text: &str) -> Result<Self> {
        crate::io::parse_json(Path::new("<string>"), text)
    }

    /// Overlays the fields present in the file onto `base` and validates.
    pub fn apply(&self, base: Config) -> Result<Config> {
        let mut cfg = base;
        let s = &mut cfg.suppression;
        if let Some(name) = &self.scheme {
            s.scheme = parse_scheme(name)?;
        }
        if let Some(v) = self.pre_nms_threshold {
            s.pre_nms_threshold = v;
        }
        if let Some(v) = self.qubit_cap {
            s.qubit_cap = v;
        }
        if let Some(w) = self.weights {
            s.weights = QsqsWeights::new(w.w1, w.w2, w.w3)?;
        }
        if let Some(v) = self.sigma {
            s.sigma = v;
        }
        if let Some(v) = self.final_score_threshold {
            s.final_score_threshold = v;
        }
        if let Some(v) = self.nms_threshold {
            s.nms_threshold = v;
        }
        if let Some(e) = self.enh {
            let EnhConfig {
                enabled,
                objectness_threshold,
                score_penalty,
                overlap_reward,
            } = s.enh;
            s.enh = EnhConfig {
                enabled: e.enabled.unwrap_or(enabled),
                objectness_threshold: e.objectness_threshold.unwrap_or(objectness_threshold),
                score_penalty: e.score_penalty.unwrap_or(score_penalty),
                overlap_reward: e.overlap_reward.unwrap_or(overlap_reward),
            };
        }
        s.validate()?;
        if let Some(sf) = &self.solver {
            cfg.solver = sf.apply(cfg.solver)?;
        }
        if self.seed.is_some() {
            cfg.seed = self.seed;
        }
        Ok(cfg)
    }
}

pub fn load_config_file(path: impl AsRef<Path>) -> Result<ConfigFile> {
    read_json(path.as_ref())
}

/// Defaults overlaid with the file at `path`.
pub fn load_config(path: impl AsRef<Path>) -> Result<Config> {
    load_config_file(path)?.apply(Config::default())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = ConfigFile::from_json_str("{}").unwrap().apply(Config::default()).unwrap();
        let s = &cfg.suppression;
        assert_eq!(s.pre_nms_threshold, 0.5);
        assert_eq!(s.qubit_cap, 35);
        assert_eq!(s.weights, QsqsWeights::new(0.4, 0.3, 0.3).unwrap());
        assert_eq!(s.sigma, 0.5);
        assert_eq!(s.final_score_threshold, 0.01);
        assert_eq!(s.nms_threshold, 0.3);
        assert_eq!(cfg.solver, SolverSpec::Anneal(AnnealSchedule::default()));
    }

    #[test]
    fn partial_overrides() {
        let text = r#"{"scheme": "qsqs-enh", "qubit_cap": 20,
            "enh": {"objectness_threshold": 0.5},
            "solver": {"kind": "tabu", "tenure": 3}, "seed": 9}"#;
        let cfg = ConfigFile::from_json_str(text).unwrap().apply(Config::default()).unwrap();
        assert_eq!(cfg.suppression.scheme, Scheme::QsqsEnh);
        assert_eq!(cfg.suppression.qubit_cap, 20);
        assert_eq!(cfg.suppression.enh.objectness_threshold, 0.5);
        assert_eq!(cfg.suppression.enh.score_penalty, 0.1);
        assert_eq!(
            cfg.solver,
            SolverSpec::Tabu(TabuParams {
                tenure: 3,
                ..TabuParams::default()
            })
        );
        assert_eq!(cfg.seed, Some(9));
    }

    #[test]
    fn unknown_scheme_lists_valid_ones() {
        let err = ConfigFile::from_json_str(r#"{"scheme": "fancy"}"#)
            .unwrap()
            .apply(Config::default())
            .unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
        let msg = err.to_string();
        assert!(msg.contains("nms, soft-nms, qqs, qsqs, qsqs-enh"), "{msg}");
    }

    #[test]
    fn rejects_bad_values() {
        for text in [
            r#"{"qubit_cap": 50}"#,
            r#"{"weights": {"w1": 0.5, "w2": 0.5, "w3": 0.5}}"#,
            r#"{"solver": {"kind": "quantum"}}"#,
            r#"{"solver": {"beta_start": 5.0, "beta_end": 1.0}}"#,
        ] {
            let r = ConfigFile::from_json_str(text).unwrap().apply(Config::default());
            assert!(r.is_err(), "{text}");
            assert_eq!(r.unwrap_err().exit_code(), 1);
        }
        assert!(ConfigFile::from_json_str(r#"{"sigmaa": 1.0}"#).is_err());
    }
}
