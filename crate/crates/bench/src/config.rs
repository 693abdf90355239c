use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sparse_ht::async_solver::{AsyncConfig, DelaySchedule};
use sparse_ht::datagen::{InstanceSpec, ModelKind};
use sparse_ht::SolverConfig;

use crate::error::{usage, BenchError};

/// Where the data comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum ProblemSource {
    /// Synthetic instance. In a sweep the spec's seed is replaced by each
    /// run seed, so every seed sees fresh data.
    Generate { spec: InstanceSpec },
    /// Binary container written by `gen`; the data is fixed across seeds.
    Container { path: PathBuf },
    /// libsvm text, fitted with sparse logistic regression.
    Libsvm {
        path: PathBuf,
        #[serde(default)]
        map_pm1: bool,
        #[serde(default)]
        dim: Option<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemConfig {
    #[serde(flatten)]
    pub source: ProblemSource,
    /// Number of mini-batches `n`; `None` means one sample per batch.
    #[serde(default)]
    pub batches: Option<usize>,
    /// ℓ2 radius for logistic problems; defaults to `10‖θ*‖₂` when a truth
    /// is known.
    #[serde(default)]
    pub radius: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    #[value(name = "fg_ht")]
    #[serde(rename = "fg_ht")]
    Fg,
    #[value(name = "sg_ht")]
    #[serde(rename = "sg_ht")]
    Sg,
    #[value(name = "svrg_ht")]
    #[serde(rename = "svrg_ht")]
    Svrg,
    #[value(name = "saga_ht")]
    #[serde(rename = "saga_ht")]
    Saga,
    #[value(name = "prox_svrg")]
    #[serde(rename = "prox_svrg")]
    Prox,
    #[value(name = "asvrg_ht")]
    #[serde(rename = "asvrg_ht")]
    Asvrg,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Fg => "fg_ht",
            SolverKind::Sg => "sg_ht",
            SolverKind::Svrg => "svrg_ht",
            SolverKind::Saga => "saga_ht",
            SolverKind::Prox => "prox_svrg",
            SolverKind::Asvrg => "asvrg_ht",
        }
    }

    /// Prox-SVRG sweeps the ℓ1 weight; everything else sweeps `η`.
    pub fn sweeps_l1_weight(self) -> bool {
        self == SolverKind::Prox
    }
}

/// One solver in an experiment. `config.step_size` (or `l1_weight` for
/// Prox-SVRG) is overwritten by each swept value; the seed by each run seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverEntry {
    pub solver: SolverKind,
    #[serde(default)]
    pub config: SolverConfig,
    #[serde(default, rename = "async")]
    pub async_config: Option<AsyncConfig>,
    /// Delay schedule for the simulated asynchronous mode.
    #[serde(default)]
    pub schedule: Option<DelaySchedule>,
    /// Replaces the experiment-wide sweep values for this solver.
    #[serde(default)]
    pub params: Option<Vec<f64>>,
}

fn default_budget() -> f64 {
    500.0
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

/// JSON experiment description. Command-line flags override file values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    pub solvers: Vec<SolverEntry>,
    #[serde(default)]
    pub step_sizes: Vec<f64>,
    #[serde(default)]
    pub l1_weights: Vec<f64>,
    pub seeds: Vec<u64>,
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
    #[serde(default = "default_budget")]
    pub pass_budget: f64,
    /// Level for the `passes_to_tol` column, applied to the estimation
    /// error (or the relative objective when no truth is known).
    #[serde(default)]
    pub error_tol: Option<f64>,
    /// Write `wall_s = 0` so summaries are byte-reproducible.
    #[serde(default)]
    pub deterministic_wall: bool,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = fs::read_to_string(path)?;
        let cfg: Self =
            serde_json::from_str(&text).map_err(|e| BenchError::Usage(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.solvers.is_empty() {
            return usage("experiment lists no solvers");
        }
        if self.seeds.is_empty() {
            return usage("experiment lists no seeds");
        }
        if !(self.pass_budget > 0.0) {
            return usage("pass budget must be positive");
        }
        for entry in &self.solvers {
            if self.params_for(entry).is_empty() {
                return usage(format!("no sweep values for {}", entry.solver.name()));
            }
            if entry.solver == SolverKind::Prox && !(entry.config.step_size > 0.0) {
                return usage("prox_svrg needs a positive config.step_size");
            }
        }
        if let ProblemSource::Generate { spec } = &self.problem.source {
            if spec.model == ModelKind::Logistic && self.problem.radius.is_some_and(|r| !(r > 0.0)) {
                return usage("logistic radius must be positive");
            }
        }
        Ok(())
    }

    pub fn params_for<'a>(&'a self, entry: &'a SolverEntry) -> &'a [f64] {
        match &entry.params {
            Some(p) => p,
            None if entry.solver.sweeps_l1_weight() => &self.l1_weights,
            None => &self.step_sizes,
        }
    }
}
