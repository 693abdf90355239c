use crate::error::Result;
use crate::objective::Objective;
use crate::param::Parameter;
use crate::scalar::Real;

use super::{
    check_start, steps_per_checkpoint, IndexStream, IterateTrace, Monitor, Projector, SolverConfig, StopReason,
};

/// Stochastic-gradient hard thresholding: `θ ← H_k(θ − η∇f_i(θ))` with `i`
/// drawn from stream 0 of the seed; `1/n` pass per step.
pub fn sg_ht<S: Real, P: Objective<S> + ?Sized>(
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
    let mut grad = vec![S::zero(); theta.len()];
    let mut monitor = Monitor::new(problem, config, &theta, None);

    let mut steps = 0u64;
    let mut stop = if monitor.checkpoint(problem, &theta, 0)? {
        StopReason::Converged
    } else {
        StopReason::BudgetExhausted
    };
    while stop == StopReason::BudgetExhausted && monitor.outer_allowed(steps) && monitor.can_afford(0, 1) {
        let i = indices.next_index();
        problem.component_gradient_into(i, &theta, &mut grad);
        for (t, &g) in theta.iter_mut().zip(&grad) {
            *t -= eta * g;
        }
        projector.apply(&mut theta)?;
        monitor.charge(0, 1);
        steps += 1;
        if steps.is_multiple_of(every) && monitor.checkpoint(problem, &theta, steps)? {
            stop = StopReason::Converged;
        }
    }
    if monitor.last_checkpoint_passes() < Some(monitor.passes()) {
        monitor.checkpoint(problem, &theta, steps)?;
    }
    Ok(monitor.finish(theta, theta0.shape(), steps, stop))
}
