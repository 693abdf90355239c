use rand::Rng;

use crate::error::{invalid, Result};
use crate::objective::{vr_gradient_into, Objective};
use crate::param::Parameter;
use crate::scalar::Real;

use super::{
    check_start, rng_for, IndexStream, IterateTrace, Monitor, Projector, SnapshotRule, SolverConfig, StopReason,
    SNAPSHOT_PICK_STREAM,
};

/// Stochastic variance-reduced hard thresholding.
///
/// Each outer round computes `μ̃ = ∇F(θ̃)` (one pass) and runs `m` inner
/// steps `θ ← H_k(θ − η(∇f_i(θ) − ∇f_i(θ̃) + μ̃))` (`m/n` passes), followed by
/// the ℓ2-ball projection when a radius is configured. The round's index
/// stream is ChaCha stream `r` of the seed. A checkpoint is taken after
/// every round.
pub fn svrg_ht<S: Real, P: Objective<S> + ?Sized>(
    problem: &P,
    config: &SolverConfig,
    theta0: &Parameter<S>,
) -> Result<IterateTrace<S>> {
    check_start(problem, config, theta0)?;
    let projector = Projector::thresholding(problem, config);
    svrg_loop(problem, config, theta0, projector, None)
}

/// Proximal SVRG for `F(θ) + λ‖θ‖₁`: the SVRG loop with soft thresholding
/// at level `ηλ` in place of `H_k`. Traced objectives include the penalty.
/// `config.sparsity` is ignored.
pub fn prox_svrg<S: Real, P: Objective<S> + ?Sized>(
    problem: &P,
    config: &SolverConfig,
    theta0: &Parameter<S>,
) -> Result<IterateTrace<S>> {
    check_start(problem, config, theta0)?;
    let Some(lambda) = config.l1_weight else {
        return invalid("prox-svrg needs an l1 weight");
    };
    let lambda = S::lit(lambda);
    let projector = Projector::soft(S::lit(config.step_size) * lambda);
    svrg_loop(problem, config, theta0, projector, Some(lambda))
}

fn svrg_loop<S: Real, P: Objective<S> + ?Sized>(
    problem: &P,
    config: &SolverConfig,
    theta0: &Parameter<S>,
    mut projector: Projector<S>,
    l1_weight: Option<S>,
) -> Result<IterateTrace<S>> {
    let n = problem.num_components();
    let m = config.inner_length.unwrap_or(n);
    let eta = S::lit(config.step_size);
    let d = theta0.len();
    let mut theta = theta0.as_slice().to_vec();
    let mut snapshot = vec![S::zero(); d];
    let mut mu = vec![S::zero(); d];
    let mut g = vec![S::zero(); d];
    let mut scratch = vec![S::zero(); d];
    let mut picked = vec![S::zero(); d];
    let mut monitor = Monitor::new(problem, config, &theta, l1_weight);

    let mut rounds = 0u64;
    let mut stop = if monitor.checkpoint(problem, &theta, 0)? {
        StopReason::Converged
    } else {
        StopReason::BudgetExhausted
    };
    while stop == StopReason::BudgetExhausted && monitor.outer_allowed(rounds) && monitor.can_afford(1, m as u64) {
        snapshot.copy_from_slice(&theta);
        problem.gradient_into(&snapshot, &mut mu);
        monitor.charge(1, 0);

        let pick = match config.snapshot_rule {
            SnapshotRule::LastIterate => m,
            SnapshotRule::RandomIterate => rng_for(config.seed, SNAPSHOT_PICK_STREAM | rounds).random_range(1..=m),
        };
        let mut indices = IndexStream::new(config.seed, rounds, n, config.sampling);
        for t in 1..=m {
            let i = indices.next_index();
            vr_gradient_into(problem, i, &theta, &snapshot, &mu, &mut g, &mut scratch);
            for (x, &gj) in theta.iter_mut().zip(&g) {
                *x -= eta * gj;
            }
            projector.apply(&mut theta)?;
            if t == pick && pick != m {
                picked.copy_from_slice(&theta);
            }
        }
        monitor.charge(0, m as u64);
        if pick != m {
            theta.copy_from_slice(&picked);
        }
        rounds += 1;
        if monitor.checkpoint(problem, &theta, rounds)? {
            stop = StopReason::Converged;
        }
    }
    Ok(monitor.finish(theta, theta0.shape(), rounds, stop))
}
