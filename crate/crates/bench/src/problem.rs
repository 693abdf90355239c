use sparse_ht::datagen::{generate_instance, load_libsvm, read_instance, LibsvmOptions, ModelKind, SyntheticInstance};
use sparse_ht::models::{make_logistic, GlmData};
use sparse_ht::{CorruptedQuadratic64, LinearRegression64, Logistic64, LowRank64, Objective};

use crate::config::{ProblemConfig, ProblemSource};
use crate::error::{usage, BenchError};

pub enum LoadedProblem {
    Linear(LinearRegression64),
    Logistic(Logistic64),
    LowRank(LowRank64),
    Corrupted(CorruptedQuadratic64),
}

impl LoadedProblem {
    pub fn objective(&self) -> &dyn Objective<f64> {
        match self {
            LoadedProblem::Linear(p) => p,
            LoadedProblem::Logistic(p) => p,
            LoadedProblem::LowRank(p) => p,
            LoadedProblem::Corrupted(p) => p,
        }
    }
}

/// Columns echoed into the summary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemMeta {
    pub n: usize,
    pub b: usize,
    pub c: Option<f64>,
    pub sigma: Option<f64>,
}

fn batches_for(requested: Option<usize>, samples: usize) -> Result<usize, BenchError> {
    let n = requested.unwrap_or(samples);
    if n == 0 || !samples.is_multiple_of(n) {
        return usage(format!("{samples} samples cannot be split into {n} equal batches"));
    }
    Ok(n)
}

/// Builds the objective matching the instance's model kind.
pub fn problem_from_instance(
    inst: &SyntheticInstance<f64>,
    batches: Option<usize>,
    radius: Option<f64>,
) -> Result<(LoadedProblem, ProblemMeta), BenchError> {
    let samples = inst.num_samples();
    let n = batches_for(batches, samples)?;
    let problem = match inst.spec.model {
        ModelKind::Linear => LoadedProblem::Linear(inst.linear_problem(n)?),
        ModelKind::Logistic => {
            let r = radius.unwrap_or_else(|| 10.0 * inst.truth.norm2());
            LoadedProblem::Logistic(inst.logistic_problem(n, r)?)
        }
        ModelKind::LowRank => LoadedProblem::LowRank(inst.lowrank_problem(n)?),
        ModelKind::Corrupted => LoadedProblem::Corrupted(inst.corrupted_problem(n)?),
    };
    let meta = ProblemMeta {
        n,
        b: samples / n,
        c: Some(inst.spec.correlation),
        sigma: (inst.spec.model != ModelKind::Logistic).then_some(inst.spec.noise_std),
    };
    Ok((problem, meta))
}

/// Loads or generates the problem. `seed` replaces the generation seed of
/// synthetic sources.
pub fn load_problem(cfg: &ProblemConfig, seed: Option<u64>) -> Result<(LoadedProblem, ProblemMeta), BenchError> {
    match &cfg.source {
        ProblemSource::Generate { spec } => {
            let mut spec = spec.clone();
            if let Some(s) = seed {
                spec.seed = s;
            }
            problem_from_instance(&generate_instance(&spec)?, cfg.batches, cfg.radius)
        }
        ProblemSource::Container { path } => problem_from_instance(&read_instance(path)?, cfg.batches, cfg.radius),
        ProblemSource::Libsvm { path, map_pm1, dim } => {
            let (design, labels) = load_libsvm::<f64>(
                path,
                LibsvmOptions {
                    dim: *dim,
                    map_pm1: *map_pm1,
                },
            )?;
            let Some(radius) = cfg.radius else {
                return usage("libsvm problems need an explicit radius");
            };
            let samples = design.rows();
            let n = batches_for(cfg.batches, samples)?;
            let problem = make_logistic(GlmData {
                design,
                labels,
                batches: n,
                batch_size: samples / n,
                radius,
            })?;
            let meta = ProblemMeta {
                n,
                b: samples / n,
                c: None,
                sigma: None,
            };
            Ok((LoadedProblem::Logistic(problem), meta))
        }
    }
}
