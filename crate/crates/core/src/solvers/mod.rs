//! Serial cardinality-constrained solvers: FG-HT, SG-HT, SVRG-HT, SAGA-HT
//! and the Prox-SVRG ℓ1 baseline.
//!
//! All solvers share pass accounting (a full gradient costs one pass, a
//! stochastic step `1/n`), checkpoint tracing, a divergence guard, and
//! seeded sampling. Randomness comes from ChaCha8 keyed by the config seed;
//! each outer round of the SVRG family draws from its own ChaCha stream
//! (stream id = round index), so rounds are independent yet fully
//! determined by the seed.

mod config;
mod fg;
mod saga;
mod sg;
mod svrg;
mod trace;

pub use config::{Sampling, SnapshotRule, SolverConfig};
pub use fg::fg_ht;
pub use saga::{saga_ht, SagaTable};
pub use sg::sg_ht;
pub use svrg::{prox_svrg, svrg_ht};
pub use trace::{Checkpoint, IterateTrace, StopReason, TRACE_CSV_HEADER};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{HtError, Result};
use crate::metrics::relative_error_slices;
use crate::objective::Objective;
use crate::param::{Parameter, Shape};
use crate::scalar::Real;
use crate::threshold::{
    hard_threshold_in_place, l2_ball_project_in_place, soft_threshold_in_place, svt_col_major, HtScratch,
};

/// Objective growth (relative to its starting scale) treated as divergence.
pub const DIVERGENCE_FACTOR: f64 = 1e12;

pub(crate) const SNAPSHOT_PICK_STREAM: u64 = 1 << 63;
pub(crate) const BLOCK_STREAM: u64 = 1 << 62;
pub(crate) const DELAY_STREAM: u64 = 1 << 61;

pub(crate) fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Component index sampler.
pub(crate) struct IndexStream {
    rng: ChaCha8Rng,
    n: usize,
    sampling: Sampling,
    perm: Vec<usize>,
    pos: usize,
}

impl IndexStream {
    pub(crate) fn new(seed: u64, stream: u64, n: usize, sampling: Sampling) -> Self {
        Self {
            rng: rng_for(seed, stream),
            n,
            sampling,
            perm: Vec::new(),
            pos: 0,
        }
    }

    pub(crate) fn next_index(&mut self) -> usize {
        match self.sampling {
            Sampling::WithReplacement => self.rng.random_range(0..self.n),
            Sampling::WithoutReplacement => {
                if self.pos == self.perm.len() {
                    self.perm = (0..self.n).collect();
                    rand::seq::SliceRandom::shuffle(self.perm.as_mut_slice(), &mut self.rng);
                    self.pos = 0;
                }
                self.pos += 1;
                self.perm[self.pos - 1]
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum Projection<S> {
    Hard(usize),
    Svt { k: usize, rows: usize, cols: usize },
    Soft(S),
}

/// Post-step operator: thresholding chosen by parameter shape, optionally
/// followed by the ℓ2-ball projection.
pub(crate) struct Projector<S> {
    op: Projection<S>,
    radius: Option<S>,
    scratch: HtScratch,
}

impl<S: Real> Projector<S> {
    pub(crate) fn thresholding<P: Objective<S> + ?Sized>(problem: &P, config: &SolverConfig) -> Self {
        let k = config.sparsity;
        let op = match problem.shape() {
            Shape::Vector(_) => Projection::Hard(k),
            Shape::Matrix { rows, cols } => Projection::Svt { k, rows, cols },
        };
        let radius = config.l2_radius.map(S::lit).or_else(|| problem.l2_radius());
        Self {
            op,
            radius,
            scratch: HtScratch::default(),
        }
    }

    pub(crate) fn soft(level: S) -> Self {
        Self {
            op: Projection::Soft(level),
            radius: None,
            scratch: HtScratch::default(),
        }
    }

    pub(crate) fn apply(&mut self, v: &mut [S]) -> Result<()> {
        match self.op {
            Projection::Hard(k) => hard_threshold_in_place(v, k, &mut self.scratch),
            Projection::Svt { k, rows, cols } => {
                let out = svt_col_major(v, rows, cols, k)?;
                v.copy_from_slice(&out);
            }
            Projection::Soft(level) => soft_threshold_in_place(v, level),
        }
        if let Some(r) = self.radius {
            l2_ball_project_in_place(v, r);
        }
        Ok(())
    }
}

/// Pass accounting, checkpointing, stop rules and the divergence guard.
pub(crate) struct Monitor<'a, S> {
    n: u64,
    full: u64,
    stochastic: u64,
    normalizer: f64,
    reference: f64,
    truth: Option<&'a [S]>,
    l1_weight: Option<S>,
    tol: Option<f64>,
    pass_budget: Option<f64>,
    outer_budget: Option<u64>,
    step_size: f64,
    checkpoints: Vec<Checkpoint>,
}

impl<'a, S: Real> Monitor<'a, S> {
    pub(crate) fn new<P: Objective<S> + ?Sized>(
        problem: &'a P,
        config: &SolverConfig,
        theta0: &[S],
        l1_weight: Option<S>,
    ) -> Self {
        let zero = vec![S::zero(); theta0.len()];
        let f_zero = problem.value(&zero).to_f64_lossy();
        let truth = problem
            .ground_truth()
            .map(|t| t.as_slice())
            .filter(|t| t.iter().any(|v| !v.is_zero()));
        let mut monitor = Self {
            n: problem.num_components() as u64,
            full: 0,
            stochastic: 0,
            normalizer: if f_zero != 0.0 && f_zero.is_finite() {
                f_zero.abs()
            } else {
                1.0
            },
            reference: 0.0,
            truth,
            l1_weight,
            tol: config.objective_tol,
            pass_budget: config.pass_budget,
            outer_budget: config.outer_budget,
            step_size: config.step_size,
            checkpoints: Vec::new(),
        };
        let f0 = monitor.objective(problem, theta0);
        monitor.reference = f0.abs().max(f_zero.abs());
        monitor
    }

    fn objective<P: Objective<S> + ?Sized>(&self, problem: &P, theta: &[S]) -> f64 {
        let mut f = problem.value(theta).to_f64_lossy();
        if let Some(l) = self.l1_weight {
            f += l.to_f64_lossy() * theta.iter().map(|v| v.abs().to_f64_lossy()).sum::<f64>();
        }
        f
    }

    pub(crate) fn passes(&self) -> f64 {
        self.full as f64 + self.stochastic as f64 / self.n as f64
    }

    /// Whether `full` more full gradients and `stochastic` more steps fit
    /// in the pass budget.
    pub(crate) fn can_afford(&self, full: u64, stochastic: u64) -> bool {
        match self.pass_budget {
            None => true,
            Some(budget) => {
                let after = (self.full + full) as f64 + (self.stochastic + stochastic) as f64 / self.n as f64;
                after <= budget + 1e-9
            }
        }
    }

    pub(crate) fn outer_allowed(&self, completed: u64) -> bool {
        self.outer_budget.is_none_or(|b| completed < b)
    }

    pub(crate) fn charge(&mut self, full: u64, stochastic: u64) {
        self.full += full;
        self.stochastic += stochastic;
    }

    /// Records a checkpoint at `theta`. Returns `true` once the relative
    /// objective reaches the configured tolerance.
    pub(crate) fn checkpoint<P: Objective<S> + ?Sized>(
        &mut self,
        problem: &P,
        theta: &[S],
        iteration: u64,
    ) -> Result<bool> {
        let objective = self.objective(problem, theta);
        let passes = self.passes();
        if !objective.is_finite() || (self.reference > 0.0 && objective > DIVERGENCE_FACTOR * self.reference) {
            return Err(HtError::Divergence {
                iteration,
                passes,
                step_size: self.step_size,
            });
        }
        let estimation_error = match self.truth {
            Some(t) => Some(relative_error_slices(theta, t)?),
            None => None,
        };
        let cp = Checkpoint {
            passes,
            objective,
            relative_objective: objective / self.normalizer,
            estimation_error,
        };
        match self.checkpoints.last_mut() {
            Some(last) if last.passes >= passes => *last = cp,
            _ => self.checkpoints.push(cp),
        }
        Ok(self.tol.is_some_and(|tol| cp.relative_objective <= tol))
    }

    pub(crate) fn last_checkpoint_passes(&self) -> Option<f64> {
        self.checkpoints.last().map(|c| c.passes)
    }

    pub(crate) fn finish(
        self,
        theta: Vec<S>,
        shape: Shape,
        iterations: u64,
        stop_reason: StopReason,
    ) -> IterateTrace<S> {
        let final_passes = self.passes();
        IterateTrace {
            checkpoints: self.checkpoints,
            final_parameter: Parameter::from_raw(theta, shape),
            final_passes,
            full_gradient_evals: self.full,
            stochastic_steps: self.stochastic,
            iterations,
            stop_reason,
        }
    }
}

pub(crate) fn check_start<S: Real, P: Objective<S> + ?Sized>(
    problem: &P,
    config: &SolverConfig,
    theta0: &Parameter<S>,
) -> Result<()> {
    config.validate()?;
    if theta0.len() != problem.shape().len() {
        return Err(HtError::InvalidArgument(format!(
            "initial parameter has {} entries, problem expects {}",
            theta0.len(),
            problem.shape().len()
        )));
    }
    Ok(())
}

/// Number of steps between checkpoints for per-step solvers.
pub(crate) fn steps_per_checkpoint(n: usize, stride: f64) -> u64 {
    ((n as f64 * stride).ceil() as u64).max(1)
}
