//! Experiment runner for the `sparse-ht` solvers: problem loading, solver
//! dispatch, seeded parameter sweeps and CSV output.

pub mod config;
pub mod error;
pub mod problem;
pub mod run;
pub mod sweep;

pub use config::{ExperimentConfig, ProblemConfig, ProblemSource, SolverEntry, SolverKind};
pub use error::BenchError;
pub use problem::{load_problem, problem_from_instance, LoadedProblem, ProblemMeta};
pub use run::{cell_config, run_solver};
pub use sweep::{best_rows, run_sweep, summary_csv, write_sweep, SummaryRow, SweepResult, SUMMARY_CSV_HEADER};
