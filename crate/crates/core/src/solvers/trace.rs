use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::param::Parameter;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub passes: f64,
    pub objective: f64,
    pub relative_objective: f64,
    pub estimation_error: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    BudgetExhausted,
}

/// Checkpointed run history.
///
/// Passes are `full_gradient_evals + stochastic_steps / n`, where one
/// stochastic step is one (possibly variance-reduced) component-gradient
/// update.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateTrace<S> {
    pub checkpoints: Vec<Checkpoint>,
    pub final_parameter: Parameter<S>,
    pub final_passes: f64,
    pub full_gradient_evals: u64,
    pub stochastic_steps: u64,
    pub iterations: u64,
    pub stop_reason: StopReason,
}

pub const TRACE_CSV_HEADER: &str = "passes,objective,rel_objective,rel_est_error";

impl<S> IterateTrace<S> {
    pub fn last(&self) -> &Checkpoint {
        self.checkpoints
            .last()
            .expect("a trace always has its initial checkpoint")
    }

    pub fn final_estimation_error(&self) -> Option<f64> {
        self.last().estimation_error
    }

    pub fn final_relative_objective(&self) -> f64 {
        self.last().relative_objective
    }

    /// First checkpointed pass count at which the relative objective is at
    /// or below `tol`.
    pub fn passes_to_tolerance(&self, tol: f64) -> Option<f64> {
        self.checkpoints
            .iter()
            .find(|c| c.relative_objective <= tol)
            .map(|c| c.passes)
    }

    /// Trace CSV with header `passes,objective,rel_objective,rel_est_error`.
    /// Values use the shortest round-trip representation; an absent
    /// estimation error is written as `NA`.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.checkpoints.len() + 1));
        out.push_str(TRACE_CSV_HEADER);
        out.push('\n');
        for c in &self.checkpoints {
            let err = c
                .estimation_error
                .map_or_else(|| "NA".to_string(), |e| format!("{e:e}"));
            let _ = writeln!(
                out,
                "{:e},{:e},{:e},{}",
                c.passes, c.objective, c.relative_objective, err
            );
        }
        out
    }
}
