use crate::error::Result;
use crate::objective::Objective;
use crate::param::Parameter;
use crate::scalar::Real;

use super::{check_start, IterateTrace, Monitor, Projector, SolverConfig, StopReason};

/// Full-gradient hard thresholding: `θ ← H_k(θ − η∇F(θ))`, one pass per
/// iteration. Uses no randomness.
pub fn fg_ht<S: Real, P: Objective<S> + ?Sized>(
    problem: &P,
    config: &SolverConfig,
    theta0: &Parameter<S>,
) -> Result<IterateTrace<S>> {
    check_start(problem, config, theta0)?;
    let eta = S::lit(config.step_size);
    let every = (config.trace_stride.ceil() as u64).max(1);
    let mut projector = Projector::thresholding(problem, config);
    let mut theta = theta0.as_slice().to_vec();
    let mut grad = vec![S::zero(); theta.len()];
    let mut monitor = Monitor::new(problem, config, &theta, None);

    let mut iterations = 0u64;
    let mut stop = if monitor.checkpoint(problem, &theta, 0)? {
        StopReason::Converged
    } else {
        StopReason::BudgetExhausted
    };
    while stop == StopReason::BudgetExhausted && monitor.outer_allowed(iterations) && monitor.can_afford(1, 0) {
        problem.gradient_into(&theta, &mut grad);
        for (t, &g) in theta.iter_mut().zip(&grad) {
            *t -= eta * g;
        }
        projector.apply(&mut theta)?;
        monitor.charge(1, 0);
        iterations += 1;
        if iterations.is_multiple_of(every) && monitor.checkpoint(problem, &theta, iterations)? {
            stop = StopReason::Converged;
        }
    }
    if monitor.last_checkpoint_passes() < Some(monitor.passes()) {
        monitor.checkpoint(problem, &theta, iterations)?;
    }
    Ok(monitor.finish(theta, theta0.shape(), iterations, stop))
}
