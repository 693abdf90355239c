use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnapshotRule {
    /// Next snapshot is the last inner iterate.
    #[default]
    LastIterate,
    /// Next snapshot is an inner iterate chosen uniformly at random.
    RandomIterate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    #[default]
    WithReplacement,
    /// Shuffled sweeps over the components.
    WithoutReplacement,
}

/// Settings shared by all solvers.
///
/// Stop rules: `outer_budget` counts iterations of the solver's outer loop
/// (gradient steps for FG-HT, rounds for the SVRG family, single steps for
/// SG-HT and SAGA-HT); `pass_budget` counts effective passes. Either may
/// bind; a solver never starts work that would exceed the pass budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub step_size: f64,
    pub sparsity: usize,
    /// Inner-loop length `m`; `None` means `m = n`.
    pub inner_length: Option<usize>,
    pub outer_budget: Option<u64>,
    pub pass_budget: Option<f64>,
    pub snapshot_rule: SnapshotRule,
    pub sampling: Sampling,
    pub seed: u64,
    /// ℓ2 radius applied after thresholding; overrides the problem's own.
    pub l2_radius: Option<f64>,
    /// ℓ1 weight `λ` (Prox-SVRG only).
    pub l1_weight: Option<f64>,
    /// Checkpoint interval in effective passes for SG-HT/SAGA-HT/FG-HT.
    pub trace_stride: f64,
    /// Stop once the relative objective at a checkpoint drops to this level.
    pub objective_tol: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            step_size: 1.0 / 256.0,
            sparsity: 1,
            inner_length: None,
            outer_budget: None,
            pass_budget: Some(500.0),
            snapshot_rule: SnapshotRule::LastIterate,
            sampling: Sampling::WithReplacement,
            seed: 0,
            l2_radius: None,
            l1_weight: None,
            trace_stride: 1.0,
            objective_tol: None,
        }
    }
}

impl SolverConfig {
    pub fn new(step_size: f64, sparsity: usize) -> Self {
        Self {
            step_size,
            sparsity,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return invalid("step size must be positive and finite");
        }
        if self.sparsity == 0 {
            return invalid("sparsity k must be at least 1");
        }
        if self.inner_length == Some(0) {
            return invalid("inner loop length m must be at least 1");
        }
        if self.outer_budget.is_none() && self.pass_budget.is_none() {
            return invalid("set an outer budget, a pass budget, or both");
        }
        if self.outer_budget == Some(0) {
            return invalid("outer budget must be positive");
        }
        if let Some(p) = self.pass_budget {
            if !(p > 0.0) {
                return invalid("pass budget must be positive");
            }
        }
        if let Some(r) = self.l2_radius {
            if !(r > 0.0) {
                return invalid("l2 radius must be positive");
            }
        }
        if let Some(l) = self.l1_weight {
            if !(l >= 0.0) {
                return invalid("l1 weight must be nonnegative");
            }
        }
        if !(self.trace_stride > 0.0) {
            return invalid("trace stride must be positive");
        }
        Ok(())
    }
}
