use crate::error::{invalid, Result};
use crate::objective::Objective;
use crate::param::Parameter;
use crate::scalar::Real;

use super::{
    check_start, steps_per_checkpoint, IndexStream, IterateTrace, Monitor, Projector, SolverConfig, StopReason,
};

/// Table of the most recent gradient of every component together with
/// their running mean.
///
/// The mean is updated incrementally and recomputed from scratch every `n`
/// updates, which keeps accumulated rounding bounded.
#[derive(Debug, Clone)]
pub struct SagaTable<S> {
    stored: Vec<S>,
    mean: Vec<S>,
    n: usize,
    d: usize,
    since_resync: usize,
}

impl<S: Real> SagaTable<S> {
    /// Fills the table with `∇f_i(θ)` for every component (one pass).
    pub fn new<P: Objective<S> + ?Sized>(problem: &P, theta: &[S]) -> Result<Self> {
        let n = problem.num_components();
        let d = problem.shape().len();
        if theta.len() != d {
            return invalid("parameter size does not match the problem");
        }
        let mut stored = vec![S::zero(); n * d];
        for (i, row) in stored.chunks_exact_mut(d).enumerate() {
            problem.component_gradient_into(i, theta, row);
        }
        let mut table = Self {
            stored,
            mean: vec![S::zero(); d],
            n,
            d,
            since_resync: 0,
        };
        table.resync();
        Ok(table)
    }

    pub fn num_components(&self) -> usize {
        self.n
    }

    pub fn stored(&self, i: usize) -> &[S] {
        &self.stored[i * self.d..(i + 1) * self.d]
    }

    pub fn mean(&self) -> &[S] {
        &self.mean
    }

    /// Replaces the stored gradient of component `i`.
    pub fn update(&mut self, i: usize, gradient: &[S]) {
        let inv_n = S::one() / S::from_usize_lossy(self.n);
        let row = &mut self.stored[i * self.d..(i + 1) * self.d];
        for ((m, s), &g) in self.mean.iter_mut().zip(row.iter_mut()).zip(gradient) {
            *m += (g - *s) * inv_n;
            *s = g;
        }
        self.since_resync += 1;
        if self.since_resync >= self.n {
            self.resync();
        }
    }

    /// Recomputes the mean exactly from the stored gradients.
    pub fn resync(&mut self) {
        self.mean.iter_mut().for_each(|m| *m = S::zero());
        for row in self.stored.chunks_exact(self.d) {
            for (m, &g) in self.mean.iter_mut().zip(row) {
                *m += g;
            }
        }
        let n = S::from_usize_lossy(self.n);
        self.mean.iter_mut().for_each(|m| *m /= n);
        self.since_resync = 0;
    }
}

/// SAGA hard thresholding. The table is initialized at `θ₀` (one pass);
/// each step samples `i` (stream 0 of the seed), moves along
/// `∇f_i(θ) + (mean − stored_i)`, thresholds, and refreshes entry `i`.
pub fn saga_ht<S: Real, P: Objective<S> + ?Sized>(
    problem: &P,
    config: &SolverConfig,
    theta0: &Parameter<S>,
) -> Result<IterateTrace<S>> {
    check_start(problem, config, theta0)?;
    let n = problem.num_components();
    let eta = S::lit(config.step_size);
    let every = steps_per_checkpoint(n, config.trace_stride);
    let mut projector = Projector::thresholding(problem, config);
    let mut indices = IndexStream::new(config.seed, 0, n, config.sampling);
    let mut theta = theta0.as_slice().to_vec();
    let mut g = vec![S::zero(); theta.len()];
    let mut monitor = Monitor::new(problem, config, &theta, None);

    let mut steps = 0u64;
    if monitor.checkpoint(problem, &theta, 0)? {
        return Ok(monitor.finish(theta, theta0.shape(), 0, StopReason::Converged));
    }
    if !monitor.can_afford(1, 0) {
        return Ok(monitor.finish(theta, theta0.shape(), 0, StopReason::BudgetExhausted));
    }
    let mut table = SagaTable::new(problem, &theta)?;
    monitor.charge(1, 0);

    let mut stop = StopReason::BudgetExhausted;
    while monitor.outer_allowed(steps) && monitor.can_afford(0, 1) {
        let i = indices.next_index();
        problem.component_gradient_into(i, &theta, &mut g);
        for ((x, &gj), (&m, &s)) in theta.iter_mut().zip(&g).zip(table.mean().iter().zip(table.stored(i))) {
            *x -= eta * (gj + (m - s));
        }
        table.update(i, &g);
        projector.apply(&mut theta)?;
        monitor.charge(0, 1);
        steps += 1;
        if steps.is_multiple_of(every) && monitor.checkpoint(problem, &theta, steps)? {
            stop = StopReason::Converged;
            break;
        }
    }
    if monitor.last_checkpoint_passes() < Some(monitor.passes()) {
        monitor.checkpoint(problem, &theta, steps)?;
    }
    Ok(monitor.finish(theta, theta0.shape(), steps, stop))
}
