use sparse_ht::async_solver::{asvrg_ht, asvrg_ht_sim, AsyncDiagnostics, AsyncMode, DelaySchedule};
use sparse_ht::{fg_ht, prox_svrg, saga_ht, sg_ht, svrg_ht, Objective, Parameter, Result, SolverConfig, Trace64};

use crate::config::{SolverEntry, SolverKind};

/// Runs one solver from zero. `config` is used as given; the entry only
/// contributes its kind and asynchronous settings.
pub fn run_solver(
    problem: &dyn Objective<f64>,
    entry: &SolverEntry,
    config: &SolverConfig,
) -> Result<(Trace64, Option<AsyncDiagnostics>)> {
    let theta0 = Parameter::zeros(problem.shape());
    let plain = |t: Trace64| (t, None);
    match entry.solver {
        SolverKind::Fg => fg_ht(problem, config, &theta0).map(plain),
        SolverKind::Sg => sg_ht(problem, config, &theta0).map(plain),
        SolverKind::Svrg => svrg_ht(problem, config, &theta0).map(plain),
        SolverKind::Saga => saga_ht(problem, config, &theta0).map(plain),
        SolverKind::Prox => prox_svrg(problem, config, &theta0).map(plain),
        SolverKind::Asvrg => {
            let acfg = entry.async_config.clone().unwrap_or_default();
            let (trace, diag) = match acfg.mode {
                AsyncMode::Simulated => {
                    let schedule = entry.schedule.clone().unwrap_or(DelaySchedule::Zero);
                    asvrg_ht_sim(problem, config, &acfg, &schedule, &theta0)?
                }
                AsyncMode::Threaded => asvrg_ht(problem, config, &acfg, &theta0)?,
            };
            Ok((trace, Some(diag)))
        }
    }
}

/// The config for one sweep cell: the swept value lands in `step_size`
/// or, for Prox-SVRG, in `l1_weight`.
pub fn cell_config(entry: &SolverEntry, param: f64, seed: u64, pass_budget: f64) -> SolverConfig {
    let mut cfg = entry.config.clone();
    if entry.solver.sweeps_l1_weight() {
        cfg.l1_weight = Some(param);
    } else {
        cfg.step_size = param;
    }
    cfg.seed = seed;
    cfg.pass_budget = Some(pass_budget);
    cfg
}
