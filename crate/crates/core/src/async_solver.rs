//! ASVRG-HT: SVRG-HT whose inner steps read possibly stale iterates and
//! update only a sampled block of coordinates.
//!
//! Two modes share the outer loop (snapshot, full gradient, checkpoint):
//!
//! * [`asvrg_ht_sim`] runs single-threaded and replays an explicit delay
//!   schedule, so every run is deterministic.
//! * [`asvrg_ht`] runs lock-free worker threads over one shared parameter
//!   array with per-coordinate atomic loads and stores. The snapshot is a
//!   barrier: workers of a round are joined before `μ̃` is recomputed.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::objective::{vr_gradient_into, Objective};
use crate::param::Parameter;
use crate::scalar::{AtomicReal, Real};
use crate::solvers::{
    check_start, rng_for, IndexStream, IterateTrace, Monitor, Projector, SnapshotRule, SolverConfig, StopReason,
    BLOCK_STREAM, DELAY_STREAM, SNAPSHOT_PICK_STREAM,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AsyncMode {
    #[default]
    Simulated,
    Threaded,
}

/// Settings specific to ASVRG-HT. Sampling streams derive from the
/// [`SolverConfig`] seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AsyncConfig {
    pub workers: usize,
    /// Coordinates updated per step (`|e_t|`); `None` means `k`.
    pub block_size: Option<usize>,
    /// Staleness bound `ς` for the simulated mode.
    pub max_staleness: usize,
    pub mode: AsyncMode,
    /// Multiply the block-restricted gradient by `d/q`. Off by default.
    pub rescale: bool,
    /// Restricted smoothness estimate used only for the `Γ` diagnostic.
    pub rho_plus: Option<f64>,
}

impl Default for AsyncConfig {
    fn default() -> Self {
        Self {
            workers: 1,
            block_size: None,
            max_staleness: 0,
            mode: AsyncMode::Simulated,
            rescale: false,
            rho_plus: None,
        }
    }
}

impl AsyncConfig {
    fn block(&self, k: usize, d: usize) -> Result<usize> {
        let q = self.block_size.unwrap_or(k.min(d));
        if q == 0 || q > d {
            return invalid(format!("block size {q} must lie in 1..={d}"));
        }
        Ok(q)
    }
}

/// Maps inner step `t` to a read lag `t − t′`.
///
/// Lags are clipped at the start of each outer round, since iterates from
/// before the snapshot barrier are never read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DelaySchedule {
    Zero,
    Fixed(usize),
    /// Lag drawn uniformly from `0..=bound` at every step.
    Uniform(usize),
    /// Lag for global step `t` is `lags[t % lags.len()]`.
    Explicit(Vec<usize>),
}

impl DelaySchedule {
    fn validate(&self, max_staleness: usize) -> Result<()> {
        let worst = match self {
            DelaySchedule::Zero => 0,
            DelaySchedule::Fixed(l) | DelaySchedule::Uniform(l) => *l,
            DelaySchedule::Explicit(lags) => {
                if lags.is_empty() {
                    return invalid("explicit delay schedule is empty");
                }
                *lags.iter().max().expect("non-empty")
            }
        };
        if worst > max_staleness {
            return invalid(format!(
                "schedule lag {worst} exceeds the staleness bound {max_staleness}"
            ));
        }
        Ok(())
    }

    fn lag(&self, step: u64, rng: &mut ChaCha8Rng) -> usize {
        match self {
            DelaySchedule::Zero => 0,
            DelaySchedule::Fixed(l) => *l,
            DelaySchedule::Uniform(l) => rng.random_range(0..=*l),
            DelaySchedule::Explicit(lags) => lags[(step % lags.len() as u64) as usize],
        }
    }
}

/// Outcome of the `Γ` computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaReport {
    /// `Γ`, present when the denominator is positive.
    pub value: Option<f64>,
    /// The denominator `1 − 2ρ⁺²Δς²η²` is not positive.
    pub regime_violation: bool,
}

/// `Γ = (1 + ρ⁺Δς²η) / (1 − 2ρ⁺²Δς²η²)`.
pub fn gamma(rho_plus: f64, delta: f64, staleness: usize, eta: f64) -> GammaReport {
    let s2 = (staleness as f64).powi(2);
    let denom = 1.0 - 2.0 * rho_plus * rho_plus * delta * s2 * eta * eta;
    if denom > 0.0 {
        GammaReport {
            value: Some((1.0 + rho_plus * delta * s2 * eta) / denom),
            regime_violation: false,
        }
    } else {
        GammaReport {
            value: None,
            regime_violation: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsyncDiagnostics {
    pub mode: AsyncMode,
    pub workers: usize,
    pub block_size: usize,
    /// Largest read lag observed.
    pub realized_max_staleness: u64,
    /// `Δ = q/d`, exact for uniformly sampled size-`q` blocks.
    pub delta: f64,
    /// `None` when no `ρ⁺` estimate was supplied.
    pub gamma: Option<GammaReport>,
    pub wall_time_s: f64,
}

impl AsyncDiagnostics {
    fn new(cfg: &AsyncConfig, eta: f64, q: usize, d: usize, staleness: u64, wall: f64) -> Self {
        let delta = q as f64 / d as f64;
        Self {
            mode: cfg.mode,
            workers: cfg.workers,
            block_size: q,
            realized_max_staleness: staleness,
            delta,
            gamma: cfg.rho_plus.map(|r| gamma(r, delta, staleness as usize, eta)),
            wall_time_s: wall,
        }
    }
}

fn block_step<S: Real>(theta: &mut [S], g: &[S], eta: S, block: Option<&[usize]>) {
    match block {
        None => {
            for (x, &gj) in theta.iter_mut().zip(g) {
                *x -= eta * gj;
            }
        }
        Some(e) => {
            for &j in e {
                theta[j] -= eta * g[j];
            }
        }
    }
}

/// Deterministic ASVRG-HT replaying `schedule`.
///
/// Inner step `t` evaluates the variance-reduced gradient at `θ(t − lag)`,
/// applies it to `θ(t)` on a uniformly sampled block of `q` coordinates
/// (all coordinates when `q = d`, without consuming randomness), then
/// thresholds the full vector. With a zero schedule and `q = d` the run is
/// bit-identical to [`crate::svrg_ht`].
pub fn asvrg_ht_sim<S: Real, P: Objective<S> + ?Sized>(
    problem: &P,
    config: &SolverConfig,
    async_cfg: &AsyncConfig,
    schedule: &DelaySchedule,
    theta0: &Parameter<S>,
) -> Result<(IterateTrace<S>, AsyncDiagnostics)> {
    check_start(problem, config, theta0)?;
    schedule.validate(async_cfg.max_staleness)?;
    let start = Instant::now();
    let n = problem.num_components();
    let d = theta0.len();
    let m = config.inner_length.unwrap_or(n);
    let q = async_cfg.block(config.sparsity, d)?;
    let full_block = q == d;
    let eta = S::lit(config.step_size);
    let step = if async_cfg.rescale {
        eta * S::lit(d as f64 / q as f64)
    } else {
        eta
    };
    let ring_len = async_cfg.max_staleness + 1;

    let mut projector = Projector::thresholding(problem, config);
    let mut theta = theta0.as_slice().to_vec();
    let mut snapshot = vec![S::zero(); d];
    let mut mu = vec![S::zero(); d];
    let mut g = vec![S::zero(); d];
    let mut scratch = vec![S::zero(); d];
    let mut picked = vec![S::zero(); d];
    let mut ring = vec![vec![S::zero(); d]; if ring_len > 1 { ring_len } else { 0 }];
    let mut monitor = Monitor::new(problem, config, &theta, None);

    let mut rounds = 0u64;
    let mut global_step = 0u64;
    let mut max_lag = 0u64;
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
        let mut block_rng = rng_for(config.seed, BLOCK_STREAM | rounds);
        let mut delay_rng = rng_for(config.seed, DELAY_STREAM | rounds);
        if !ring.is_empty() {
            ring[0].copy_from_slice(&theta);
        }
        for t in 0..m {
            let lag = schedule.lag(global_step, &mut delay_rng).min(t);
            max_lag = max_lag.max(lag as u64);
            let i = indices.next_index();
            let read: &[S] = if lag == 0 { &theta } else { &ring[(t - lag) % ring_len] };
            vr_gradient_into(problem, i, read, &snapshot, &mu, &mut g, &mut scratch);
            if full_block {
                block_step(&mut theta, &g, step, None);
            } else {
                let e = index::sample(&mut block_rng, d, q).into_vec();
                block_step(&mut theta, &g, step, Some(&e));
            }
            projector.apply(&mut theta)?;
            if !ring.is_empty() {
                ring[(t + 1) % ring_len].copy_from_slice(&theta);
            }
            if t + 1 == pick && pick != m {
                picked.copy_from_slice(&theta);
            }
            global_step += 1;
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
    let diag = AsyncDiagnostics::new(
        async_cfg,
        config.step_size,
        q,
        d,
        max_lag,
        start.elapsed().as_secs_f64(),
    );
    Ok((monitor.finish(theta, theta0.shape(), rounds, stop), diag))
}

/// Stream id for worker `w` in round `r`. Worker 0 uses the serial stream,
/// so a single worker with `q = d` replays [`crate::svrg_ht`].
fn worker_stream(worker: usize, round: u64) -> u64 {
    ((worker as u64) << 40) | round
}

/// Lock-free multithreaded ASVRG-HT.
///
/// Each worker repeatedly claims a step index, reads the whole shared
/// vector coordinate by coordinate (reads may mix old and new values but
/// never tear), computes the variance-reduced gradient there, updates its
/// block, thresholds its local copy, and writes back only the coordinates
/// that changed. The shared vector may transiently hold more than `k`
/// nonzeros; each worker's locally produced vector never does. At every
/// barrier the shared vector is thresholded once more, so snapshots and
/// checkpoints are feasible.
///
/// Staleness of a step is the number of steps claimed before it that had
/// not completed when it read the iterate.
pub fn asvrg_ht<S: Real, P: Objective<S> + ?Sized>(
    problem: &P,
    config: &SolverConfig,
    async_cfg: &AsyncConfig,
    theta0: &Parameter<S>,
) -> Result<(IterateTrace<S>, AsyncDiagnostics)> {
    check_start(problem, config, theta0)?;
    if async_cfg.workers == 0 {
        return invalid("at least one worker is required");
    }
    let start = Instant::now();
    let n = problem.num_components();
    let d = theta0.len();
    let m = config.inner_length.unwrap_or(n) as u64;
    let q = async_cfg.block(config.sparsity, d)?;
    let full_block = q == d;
    let eta = S::lit(config.step_size);
    let step = if async_cfg.rescale {
        eta * S::lit(d as f64 / q as f64)
    } else {
        eta
    };

    let shared: Vec<S::Atomic> = theta0.as_slice().iter().map(|&v| S::Atomic::new(v)).collect();
    let load_all = |out: &mut [S]| {
        for (o, a) in out.iter_mut().zip(&shared) {
            *o = a.load();
        }
    };
    let mut theta = theta0.as_slice().to_vec();
    let mut snapshot = vec![S::zero(); d];
    let mut mu = vec![S::zero(); d];
    let mut barrier_projector = Projector::thresholding(problem, config);
    let mut monitor = Monitor::new(problem, config, &theta, None);

    let mut rounds = 0u64;
    let mut max_staleness = 0u64;
    let mut stop = if monitor.checkpoint(problem, &theta, 0)? {
        StopReason::Converged
    } else {
        StopReason::BudgetExhausted
    };
    while stop == StopReason::BudgetExhausted && monitor.outer_allowed(rounds) && monitor.can_afford(1, m) {
        snapshot.copy_from_slice(&theta);
        problem.gradient_into(&snapshot, &mut mu);
        monitor.charge(1, 0);

        let pick = match config.snapshot_rule {
            SnapshotRule::LastIterate => None,
            SnapshotRule::RandomIterate => {
                Some(rng_for(config.seed, SNAPSHOT_PICK_STREAM | rounds).random_range(1..=m) - 1)
            }
        };
        let claimed = AtomicU64::new(0);
        let completed = AtomicU64::new(0);
        let picked: Mutex<Option<Vec<S>>> = Mutex::new(None);
        let outcomes: Vec<Result<u64>> = std::thread::scope(|scope| {
            let handles: Vec<_> = (0..async_cfg.workers)
                .map(|w| {
                    let (snapshot, mu, shared, claimed, completed, picked) =
                        (&snapshot, &mu, &shared, &claimed, &completed, &picked);
                    scope.spawn(move || -> Result<u64> {
                        let mut projector = Projector::thresholding(problem, config);
                        let mut indices = IndexStream::new(config.seed, worker_stream(w, rounds), n, config.sampling);
                        let mut block_rng = rng_for(config.seed, BLOCK_STREAM | worker_stream(w, rounds));
                        let mut local = vec![S::zero(); d];
                        let mut next = vec![S::zero(); d];
                        let mut g = vec![S::zero(); d];
                        let mut scratch = vec![S::zero(); d];
                        let mut worst = 0u64;
                        loop {
                            let t = claimed.fetch_add(1, Ordering::Relaxed);
                            if t >= m {
                                break;
                            }
                            let done = completed.load(Ordering::Acquire);
                            worst = worst.max(t.saturating_sub(done));
                            for (o, a) in local.iter_mut().zip(shared) {
                                *o = a.load();
                            }
                            let i = indices.next_index();
                            vr_gradient_into(problem, i, &local, snapshot, mu, &mut g, &mut scratch);
                            next.copy_from_slice(&local);
                            if full_block {
                                block_step(&mut next, &g, step, None);
                            } else {
                                let e = index::sample(&mut block_rng, d, q).into_vec();
                                block_step(&mut next, &g, step, Some(&e));
                            }
                            projector.apply(&mut next)?;
                            for ((a, &old), &new) in shared.iter().zip(&local).zip(&next) {
                                if old.bits() != new.bits() {
                                    a.store(new);
                                }
                            }
                            if pick == Some(t) {
                                *picked.lock().expect("no worker panics while holding the lock") = Some(next.clone());
                            }
                            completed.fetch_add(1, Ordering::Release);
                        }
                        Ok(worst)
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("worker thread panicked"))
                .collect()
        });
        for outcome in outcomes {
            max_staleness = max_staleness.max(outcome?);
        }
        monitor.charge(0, m);

        match picked.into_inner().expect("lock not poisoned") {
            Some(v) => theta.copy_from_slice(&v),
            None => load_all(&mut theta),
        }
        barrier_projector.apply(&mut theta)?;
        for (a, &v) in shared.iter().zip(&theta) {
            a.store(v);
        }
        rounds += 1;
        if monitor.checkpoint(problem, &theta, rounds)? {
            stop = StopReason::Converged;
        }
    }
    let diag = AsyncDiagnostics::new(
        async_cfg,
        config.step_size,
        q,
        d,
        max_staleness,
        start.elapsed().as_secs_f64(),
    );
    Ok((monitor.finish(theta, theta0.shape(), rounds, stop), diag))
}

/// Monte-Carlo estimate of `Δ` in `E‖θ_e‖² ≤ Δ‖θ‖²` for uniformly sampled
/// size-`q` blocks `e`, maximized over `vectors` (zero vectors skipped).
pub fn measure_delta_for<S: Real>(vectors: &[Vec<S>], q: usize, trials: usize, seed: u64) -> Result<f64> {
    let Some(d) = vectors.first().map(Vec::len) else {
        return invalid("at least one test vector is required");
    };
    if q == 0 || q > d {
        return invalid(format!("block size {q} must lie in 1..={d}"));
    }
    if trials == 0 {
        return invalid("at least one trial is required");
    }
    if vectors.iter().any(|v| v.len() != d) {
        return invalid("test vectors must share one length");
    }
    let mut rng = rng_for(seed, 0);
    let mut worst: f64 = 0.0;
    for v in vectors {
        let total: f64 = v.iter().map(|x| x.to_f64_lossy().powi(2)).sum();
        if total == 0.0 {
            continue;
        }
        let mut acc = 0.0;
        for _ in 0..trials {
            acc += index::sample(&mut rng, d, q)
                .iter()
                .map(|j| v[j].to_f64_lossy().powi(2))
                .sum::<f64>();
        }
        worst = worst.max(acc / trials as f64 / total);
    }
    Ok(worst.min(1.0))
}

/// [`measure_delta_for`] over a family built from the problem: full
/// gradients at zero and at random sparse points, plus dense and one-hot
/// probes.
pub fn measure_delta<S: Real, P: Objective<S> + ?Sized>(
    problem: &P,
    q: usize,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    let d = problem.shape().len();
    let mut rng = rng_for(seed, 1);
    let mut vectors = vec![vec![S::one(); d]];
    let mut one_hot = vec![S::zero(); d];
    one_hot[rng.random_range(0..d)] = S::one();
    vectors.push(one_hot);
    let mut point = vec![S::zero(); d];
    for _ in 0..4 {
        let mut g = vec![S::zero(); d];
        problem.gradient_into(&point, &mut g);
        if g.iter().all(|v| v.is_finite()) {
            vectors.push(g);
        }
        point.iter_mut().for_each(|v| *v = S::zero());
        for j in index::sample(&mut rng, d, d.min(8)) {
            point[j] = S::lit(rng.random_range(-1.0..1.0));
        }
    }
    measure_delta_for(&vectors, q, trials, seed)
}
