//! Seeded sweeps over (solver, parameter, seed) cells.
//!
//! Cells are grouped by seed; seeds run on a rayon pool and results are
//! collected in configuration order, so every output byte is independent
//! of the thread count (except wall-clock columns, which can be zeroed).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use sparse_ht::metrics::median;
use sparse_ht::{HtError, Trace64};

use crate::config::ExperimentConfig;
use crate::error::{usage, BenchError};
use crate::problem::{load_problem, ProblemMeta};
use crate::run::{cell_config, run_solver};

pub const SUMMARY_CSV_HEADER: &str = "solver,n,b,c,sigma,param,median_err,mean_err,passes_to_tol,wall_s,status";

/// Outcome of one cell.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub solver: &'static str,
    pub entry: usize,
    pub param_index: usize,
    pub param: f64,
    pub seed: u64,
    /// Final estimation error, or final relative objective without a
    /// truth. `None` when the run diverged.
    pub error: Option<f64>,
    pub passes_to_tol: Option<f64>,
    pub wall_s: f64,
    pub trace: Option<Trace64>,
}

impl RunRecord {
    pub fn trace_file(&self) -> PathBuf {
        PathBuf::from("traces").join(format!(
            "{}_{}_p{}_s{}.csv",
            self.entry, self.solver, self.param_index, self.seed
        ))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub solver: &'static str,
    pub entry: usize,
    pub meta: ProblemMeta,
    pub param: f64,
    /// Median over seeds; diverged runs count as `+∞`.
    pub median_err: f64,
    /// Mean over seeds; `+∞` if any run diverged.
    pub mean_err: f64,
    /// Median first pass reaching `error_tol`; `+∞` for runs that never do.
    pub passes_to_tol: Option<f64>,
    pub wall_s: f64,
    pub diverged: usize,
    pub runs: usize,
}

impl SummaryRow {
    pub fn status(&self) -> String {
        match self.diverged {
            0 => "ok".into(),
            d if d == self.runs => "diverged".into(),
            d => format!("diverged_{d}_of_{}", self.runs),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub rows: Vec<SummaryRow>,
    pub runs: Vec<RunRecord>,
}

/// The metric a run is judged by: last estimation error, else last
/// relative objective.
pub fn trace_error(trace: &Trace64) -> f64 {
    let last = trace.last();
    last.estimation_error.unwrap_or(last.relative_objective)
}

fn passes_to_error(trace: &Trace64, tol: f64) -> Option<f64> {
    trace
        .checkpoints
        .iter()
        .find(|c| c.estimation_error.unwrap_or(c.relative_objective) <= tol)
        .map(|c| c.passes)
}

fn run_seed(cfg: &ExperimentConfig, seed: u64) -> Result<(ProblemMeta, Vec<RunRecord>), BenchError> {
    let (problem, meta) = load_problem(&cfg.problem, Some(seed))?;
    let mut records = Vec::new();
    for (e, entry) in cfg.solvers.iter().enumerate() {
        for (p, &param) in cfg.params_for(entry).iter().enumerate() {
            let config = cell_config(entry, param, seed, cfg.pass_budget);
            let start = Instant::now();
            let outcome = run_solver(problem.objective(), entry, &config);
            let wall_s = if cfg.deterministic_wall {
                0.0
            } else {
                start.elapsed().as_secs_f64()
            };
            let trace = match outcome {
                Ok((trace, _)) => Some(trace),
                Err(HtError::Divergence { .. }) => None,
                Err(e) => return Err(e.into()),
            };
            records.push(RunRecord {
                solver: entry.solver.name(),
                entry: e,
                param_index: p,
                param,
                seed,
                error: trace.as_ref().map(trace_error),
                passes_to_tol: match (&trace, cfg.error_tol) {
                    (Some(t), Some(tol)) => passes_to_error(t, tol),
                    _ => None,
                },
                wall_s,
                trace,
            });
        }
    }
    Ok((meta, records))
}

/// Runs every cell on a pool of `threads` workers.
pub fn run_sweep(cfg: &ExperimentConfig, threads: usize) -> Result<SweepResult, BenchError> {
    cfg.validate()?;
    if threads == 0 {
        return usage("thread count must be positive");
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| BenchError::Usage(e.to_string()))?;
    let per_seed: Vec<Result<(ProblemMeta, Vec<RunRecord>), BenchError>> =
        pool.install(|| cfg.seeds.par_iter().map(|&s| run_seed(cfg, s)).collect());
    let mut meta = None;
    let mut runs = Vec::new();
    for r in per_seed {
        let (m, records) = r?;
        meta.get_or_insert(m);
        runs.extend(records);
    }
    let meta = meta.expect("at least one seed");
    Ok(SweepResult {
        rows: summarize(cfg, meta, &runs),
        runs,
    })
}

fn summarize(cfg: &ExperimentConfig, meta: ProblemMeta, runs: &[RunRecord]) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    for (e, entry) in cfg.solvers.iter().enumerate() {
        for (p, &param) in cfg.params_for(entry).iter().enumerate() {
            let cell: Vec<&RunRecord> = runs.iter().filter(|r| r.entry == e && r.param_index == p).collect();
            let errors: Vec<f64> = cell.iter().map(|r| r.error.unwrap_or(f64::INFINITY)).collect();
            let diverged = cell.iter().filter(|r| r.error.is_none()).count();
            let passes_to_tol = cfg.error_tol.map(|_| {
                let p: Vec<f64> = cell.iter().map(|r| r.passes_to_tol.unwrap_or(f64::INFINITY)).collect();
                median(&p).expect("non-empty")
            });
            let walls: Vec<f64> = cell.iter().map(|r| r.wall_s).collect();
            rows.push(SummaryRow {
                solver: entry.solver.name(),
                entry: e,
                meta,
                param,
                median_err: median(&errors).expect("non-empty"),
                mean_err: errors.iter().sum::<f64>() / errors.len() as f64,
                passes_to_tol,
                wall_s: median(&walls).expect("non-empty"),
                diverged,
                runs: cell.len(),
            });
        }
    }
    rows
}

/// Lowest-median row per solver entry, ties to the first listed value.
pub fn best_rows(rows: &[SummaryRow]) -> Vec<&SummaryRow> {
    let mut best: Vec<&SummaryRow> = Vec::new();
    for row in rows {
        match best.iter_mut().find(|b| b.entry == row.entry) {
            Some(b) if row.median_err < b.median_err => *b = row,
            Some(_) => {}
            None => best.push(row),
        }
    }
    best
}

fn num(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:e}")
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".into(), num)
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from(SUMMARY_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.solver,
            r.meta.n,
            r.meta.b,
            opt(r.meta.c),
            opt(r.meta.sigma),
            num(r.param),
            num(r.median_err),
            num(r.mean_err),
            opt(r.passes_to_tol),
            num(r.wall_s),
            r.status()
        );
    }
    out
}

/// Writes `summary.csv`, `runs.csv` and one trace per finished run under
/// `dir`.
pub fn write_sweep(dir: &Path, result: &SweepResult) -> Result<(), BenchError> {
    fs::create_dir_all(dir.join("traces"))?;
    fs::write(dir.join("summary.csv"), summary_csv(&result.rows))?;
    let mut index = String::from("solver,param,seed,status,trace\n");
    for r in &result.runs {
        let file = r.trace_file();
        let status = match &r.trace {
            Some(t) => {
                fs::write(dir.join(&file), t.to_csv())?;
                "ok"
            }
            None => "diverged",
        };
        let _ = writeln!(
            index,
            "{},{},{},{status},{}",
            r.solver,
            num(r.param),
            r.seed,
            file.display()
        );
    }
    fs::write(dir.join("runs.csv"), index)?;
    Ok(())
}
