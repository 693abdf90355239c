//! Numerical oracles for the analysis behind the solvers: the
//! hard-thresholding and singular-value-thresholding expansion bounds,
//! unbiasedness of the variance-reduced gradient, and sampled restricted
//! strong convexity / smoothness constants.
//!
//! Every check is deterministic per seed and returns a serde-serializable
//! report.

use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::{symmetric_eigen, DenseMatrix};
use crate::objective::{vr_gradient_into, Objective};
use crate::scalar::Real;
use crate::solvers::rng_for;
use crate::threshold::{hard_threshold, svt};

/// Relative slack before a trial counts as a violation.
pub const VIOLATION_SLACK: f64 = 1e-9;
pub const MAX_VECTOR_DIM: usize = 16;
pub const MAX_MATRIX_DIM: usize = 10;
pub const MAX_ENUMERATED_COMPONENTS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstCase {
    pub rows: usize,
    pub cols: usize,
    pub k: usize,
    pub k_star: usize,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub trials: usize,
    /// Trials with `lhs > rhs·(1 + 1e-9)`.
    pub violations: usize,
    /// Largest `lhs / rhs` seen (trials with `rhs = 0 = lhs` count as 0).
    pub worst_ratio: f64,
    pub worst_case: Option<WorstCase>,
    /// Hard-thresholding trials whose dropped mass differs from the
    /// brute-force best-`k` support. Always 0 for matrix checks.
    pub oracle_mismatches: usize,
}

impl LemmaReport {
    fn record(&mut self, lhs: f64, rhs: f64, case: WorstCase) {
        self.trials += 1;
        if lhs > rhs * (1.0 + VIOLATION_SLACK) {
            self.violations += 1;
        }
        let ratio = if rhs > 0.0 {
            lhs / rhs
        } else if lhs > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        if self.worst_case.is_none() || ratio > self.worst_ratio {
            self.worst_ratio = ratio;
            self.worst_case = Some(case);
        }
    }
}

/// The expansion factor `1 + 2√k*/√(k − k*)`.
pub fn expansion_factor(k: usize, k_star: usize) -> f64 {
    1.0 + 2.0 * (k_star as f64).sqrt() / ((k - k_star) as f64).sqrt()
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

/// Both sides of `‖H_k(θ) − θ*‖² ≤ (1 + 2√k*/√(k−k*))·‖θ − θ*‖²`, with
/// `k* = ‖θ*‖₀`. Requires `k > k*`.
pub fn ht_lemma_sides(theta: &[f64], theta_star: &[f64], k: usize) -> Result<(f64, f64)> {
    let k_star = theta_star.iter().filter(|v| **v != 0.0).count();
    if theta.len() != theta_star.len() {
        return invalid("θ and θ* differ in length");
    }
    if k <= k_star {
        return invalid(format!("k = {k} must exceed k* = {k_star}"));
    }
    let h = hard_threshold(theta, k)?;
    Ok((
        squared_distance(&h, theta_star),
        expansion_factor(k, k_star) * squared_distance(theta, theta_star),
    ))
}

/// Sum of squares in ascending order, so equal multisets give equal sums.
fn canonical_sum(mut squares: Vec<f64>) -> f64 {
    squares.sort_by(f64::total_cmp);
    squares.iter().sum()
}

/// `min_{|S| = k} ‖θ − θ_S‖²` by enumerating every support. `d ≤ 16`.
pub fn best_k_support_distance(theta: &[f64], k: usize) -> Result<f64> {
    let d = theta.len();
    if d > MAX_VECTOR_DIM {
        return invalid(format!("brute force is capped at d = {MAX_VECTOR_DIM}"));
    }
    if k == 0 || k > d {
        return invalid(format!("k must lie in 1..={d}"));
    }
    let mut best = f64::INFINITY;
    // Gosper's hack over k-subsets of {0..d}
    let mut mask: u32 = (1 << k) - 1;
    let limit: u32 = 1 << d;
    while mask < limit {
        let dropped = (0..d)
            .filter(|j| mask & (1 << j) == 0)
            .map(|j| theta[j] * theta[j])
            .collect();
        best = best.min(canonical_sum(dropped));
        let c = mask & mask.wrapping_neg();
        let r = mask + c;
        mask = (((r ^ mask) >> 2) / c) | r;
    }
    Ok(best)
}

/// `‖θ − H_k(θ)‖²` with the same canonical summation as
/// [`best_k_support_distance`].
pub fn ht_dropped_distance(theta: &[f64], k: usize) -> Result<f64> {
    let h = hard_threshold(theta, k)?;
    Ok(canonical_sum(
        theta
            .iter()
            .zip(&h)
            .filter(|(_, kept)| **kept == 0.0)
            .map(|(x, _)| x * x)
            .collect(),
    ))
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn random_sparse(rng: &mut ChaCha8Rng, d: usize, s: usize) -> Vec<f64> {
    let mut v = vec![0.0; d];
    for j in index::sample(rng, d, s) {
        v[j] = loop {
            let x = gaussian(rng);
            if x != 0.0 {
                break x;
            }
        };
    }
    v
}

/// Test vector families, cycled by trial: Gaussian, Cauchy (heavy tails),
/// small-integer grid (many ties), truth plus noise, and an adversarial
/// layout where `k` off-support entries just outweigh the true support so
/// `H_k` drops all of it.
fn ht_trial_vector(rng: &mut ChaCha8Rng, family: usize, theta_star: &[f64], k: usize) -> Vec<f64> {
    let d = theta_star.len();
    match family {
        0 => (0..d).map(|_| gaussian(rng)).collect(),
        1 => (0..d).map(|_| gaussian(rng) / gaussian(rng)).collect(),
        2 => (0..d).map(|_| f64::from(rng.random_range(-2i32..=2)) * 0.5).collect(),
        3 => theta_star.iter().map(|t| t + 0.1 * gaussian(rng)).collect(),
        _ => {
            let support: Vec<usize> = (0..d).filter(|&j| theta_star[j] != 0.0).collect();
            let off: Vec<usize> = (0..d).filter(|&j| theta_star[j] == 0.0).collect();
            let shrink: f64 = rng.random_range(0.0..1.0);
            let mut theta: Vec<f64> = theta_star.iter().map(|t| t * shrink).collect();
            let top = support.iter().map(|&j| theta[j].abs()).fold(0.0, f64::max);
            let tie = rng.random_bool(0.5);
            let take = k.min(off.len());
            for &j in index::sample(rng, off.len(), take).iter().map(|i| &off[i]) {
                let bump = if tie { 0.0 } else { rng.random_range(0.0..0.1) };
                theta[j] = if rng.random_bool(0.5) {
                    top + bump
                } else {
                    -(top + bump)
                };
            }
            theta
        }
    }
}

/// Randomized check of the hard-thresholding expansion bound plus the
/// brute-force optimality cross-check of `H_k`.
pub fn check_ht_lemma(trials: usize, max_d: usize, seed: u64) -> Result<LemmaReport> {
    if !(2..=MAX_VECTOR_DIM).contains(&max_d) {
        return invalid(format!("max_d must lie in 2..={MAX_VECTOR_DIM}"));
    }
    let mut rng = rng_for(seed, 0);
    let mut report = LemmaReport::default();
    for trial in 0..trials {
        let d = rng.random_range(2..=max_d);
        let k_star = rng.random_range(1..d);
        let k = rng.random_range(k_star + 1..=d);
        let theta_star = random_sparse(&mut rng, d, k_star);
        let theta = ht_trial_vector(&mut rng, trial % 5, &theta_star, k);
        let (lhs, rhs) = ht_lemma_sides(&theta, &theta_star, k)?;
        report.record(
            lhs,
            rhs,
            WorstCase {
                rows: d,
                cols: 1,
                k,
                k_star,
                lhs,
                rhs,
            },
        );
        if ht_dropped_distance(&theta, k)? != best_k_support_distance(&theta, k)? {
            report.oracle_mismatches += 1;
        }
    }
    Ok(report)
}

/// Runs the bound on caller-supplied `(θ, θ*, k)` cases.
pub fn check_ht_lemma_cases(cases: &[(Vec<f64>, Vec<f64>, usize)]) -> Result<LemmaReport> {
    let mut report = LemmaReport::default();
    for (theta, theta_star, k) in cases {
        let (lhs, rhs) = ht_lemma_sides(theta, theta_star, *k)?;
        let k_star = theta_star.iter().filter(|v| **v != 0.0).count();
        report.record(
            lhs,
            rhs,
            WorstCase {
                rows: theta.len(),
                cols: 1,
                k: *k,
                k_star,
                lhs,
                rhs,
            },
        );
        if theta.len() <= MAX_VECTOR_DIM && ht_dropped_distance(theta, *k)? != best_k_support_distance(theta, *k)? {
            report.oracle_mismatches += 1;
        }
    }
    Ok(report)
}

/// Both sides of `‖R_k(Θ) − Θ*‖_F² ≤ (1 + 2√k*/√(k−k*))·‖Θ − Θ*‖_F²`.
pub fn svt_lemma_sides(
    theta: &DenseMatrix<f64>,
    theta_star: &DenseMatrix<f64>,
    k: usize,
    k_star: usize,
) -> Result<(f64, f64)> {
    if (theta.rows(), theta.cols()) != (theta_star.rows(), theta_star.cols()) {
        return invalid("Θ and Θ* differ in shape");
    }
    if k <= k_star {
        return invalid(format!("k = {k} must exceed k* = {k_star}"));
    }
    let r = svt(theta, k)?;
    Ok((
        squared_distance(r.as_slice(), theta_star.as_slice()),
        expansion_factor(k, k_star) * squared_distance(theta.as_slice(), theta_star.as_slice()),
    ))
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix<f64> {
    DenseMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

/// Randomized check of the singular-value-thresholding expansion bound on
/// matrices with both dimensions at most `max_dim ≤ 10`.
pub fn check_svt_lemma(trials: usize, max_dim: usize, seed: u64) -> Result<LemmaReport> {
    if !(2..=MAX_MATRIX_DIM).contains(&max_dim) {
        return invalid(format!("max_dim must lie in 2..={MAX_MATRIX_DIM}"));
    }
    let mut rng = rng_for(seed, 0);
    let mut report = LemmaReport::default();
    for trial in 0..trials {
        let rows = rng.random_range(2..=max_dim);
        let cols = rng.random_range(2..=max_dim);
        let r = rows.min(cols);
        let k_star = rng.random_range(1..r);
        let k = rng.random_range(k_star + 1..=r);
        let u = gaussian_matrix(&mut rng, rows, k_star);
        let v = gaussian_matrix(&mut rng, cols, k_star);
        let theta_star = u.matmul(&v.transpose())?;
        let theta = match trial % 3 {
            0 => gaussian_matrix(&mut rng, rows, cols),
            1 => {
                let scale: f64 = rng.random_range(0.01..1.0);
                let noise = gaussian_matrix(&mut rng, rows, cols);
                DenseMatrix::from_fn(rows, cols, |i, j| theta_star.get(i, j) + scale * noise.get(i, j))
            }
            _ => {
                let a = gaussian_matrix(&mut rng, rows, k);
                let b = gaussian_matrix(&mut rng, cols, k);
                let low = a.matmul(&b.transpose())?;
                let shrink: f64 = rng.random_range(0.0..1.0);
                DenseMatrix::from_fn(rows, cols, |i, j| shrink * theta_star.get(i, j) + low.get(i, j))
            }
        };
        let (lhs, rhs) = svt_lemma_sides(&theta, &theta_star, k, k_star)?;
        report.record(
            lhs,
            rhs,
            WorstCase {
                rows,
                cols,
                k,
                k_star,
                lhs,
                rhs,
            },
        );
    }
    Ok(report)
}

/// For diagonal `Θ`, `Θ*` the matrix bound reduces to the vector bound on
/// the diagonals. Returns the largest relative disagreement between the two
/// evaluations over `trials` random diagonal pairs.
pub fn check_svt_diagonal_reduction(trials: usize, max_dim: usize, seed: u64) -> Result<f64> {
    if !(2..=MAX_MATRIX_DIM).contains(&max_dim) {
        return invalid(format!("max_dim must lie in 2..={MAX_MATRIX_DIM}"));
    }
    let mut rng = rng_for(seed, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let r = rng.random_range(2..=max_dim);
        let k_star = rng.random_range(1..r);
        let k = rng.random_range(k_star + 1..=r);
        let theta_star = random_sparse(&mut rng, r, k_star);
        let theta: Vec<f64> = (0..r).map(|_| gaussian(&mut rng)).collect();
        let (vl, vr) = ht_lemma_sides(&theta, &theta_star, k)?;
        let (ml, mr) = svt_lemma_sides(
            &DenseMatrix::from_diagonal(&theta),
            &DenseMatrix::from_diagonal(&theta_star),
            k,
            k_star,
        )?;
        let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
        worst = worst.max(rel(vl, ml)).max(rel(vr, mr));
    }
    Ok(worst)
}

/// Outcome of enumerating the variance-reduced gradient over all `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VrReport {
    pub trials: usize,
    /// `max |mean_i g_i − ∇F(θ)|` over trials and coordinates.
    pub max_deviation: f64,
    /// Largest `E‖g_I‖² / bound` seen, with `I = supp(θ*) ∪ supp(θ)` and
    /// `bound = 12ρ⁺[F(θ) − F(θ*) + F(θ̃) − F(θ*)] + 3‖∇_I F(θ*)‖²`.
    /// Informational; absent without a ground truth.
    pub max_second_moment_ratio: Option<f64>,
    pub rho_plus: Option<f64>,
}

/// Exact mean and restricted second moment of `g_i = ∇f_i(θ) − ∇f_i(θ̃) + μ̃`
/// over all components. Returns `(max |mean − ∇F(θ)|, E‖g_I‖²)` where `I`
/// is `support`.
pub fn vr_moments<S: Real, P: Objective<S> + ?Sized>(
    problem: &P,
    theta: &[S],
    snapshot: &[S],
    support: &[usize],
) -> Result<(f64, f64)> {
    let n = problem.num_components();
    if n > MAX_ENUMERATED_COMPONENTS {
        return invalid(format!("enumeration is capped at n = {MAX_ENUMERATED_COMPONENTS}"));
    }
    let d = theta.len();
    let mut mu = vec![S::zero(); d];
    problem.gradient_into(snapshot, &mut mu);
    let mut g = vec![S::zero(); d];
    let mut scratch = vec![S::zero(); d];
    let mut sum = vec![0.0f64; d];
    let mut second = 0.0;
    for i in 0..n {
        vr_gradient_into(problem, i, theta, snapshot, &mu, &mut g, &mut scratch);
        for (s, v) in sum.iter_mut().zip(&g) {
            *s += v.to_f64_lossy();
        }
        second += support.iter().map(|&j| g[j].to_f64_lossy().powi(2)).sum::<f64>();
    }
    let mut full = vec![S::zero(); d];
    problem.gradient_into(theta, &mut full);
    let deviation = sum
        .iter()
        .zip(&full)
        .map(|(s, f)| (s / n as f64 - f.to_f64_lossy()).abs())
        .fold(0.0, f64::max);
    Ok((deviation, second / n as f64))
}

/// Unbiasedness of the variance-reduced gradient by exact enumeration over
/// `i` at random `k`-sparse `(θ, θ̃)` pairs, plus the informational second
/// moment ratio when the problem carries a ground truth. Without a supplied
/// `rho_plus`, one is estimated at sparsity `2k + k*`.
pub fn check_vr_unbiasedness<S: Real, P: Objective<S> + ?Sized>(
    problem: &P,
    k: usize,
    trials: usize,
    rho_plus: Option<f64>,
    seed: u64,
) -> Result<VrReport> {
    let n = problem.num_components();
    if n > MAX_ENUMERATED_COMPONENTS {
        return invalid(format!("enumeration is capped at n = {MAX_ENUMERATED_COMPONENTS}"));
    }
    let d = problem.shape().len();
    if k == 0 || k > d {
        return invalid(format!("k must lie in 1..={d}"));
    }
    let truth = problem.ground_truth().map(|t| t.as_slice().to_vec());
    let rho_plus = match (&truth, rho_plus) {
        (Some(t), None) => {
            let k_star = t.iter().filter(|v| !v.is_zero()).count();
            Some(estimate_rsc_rss(problem, (2 * k + k_star).min(d), 20, seed ^ 0x5eed)?.rho_plus)
        }
        (_, r) => r,
    };
    let mut rng = rng_for(seed, 0);
    let to_s = |v: Vec<f64>| -> Vec<S> { v.into_iter().map(S::lit).collect() };
    let mut report = VrReport {
        trials,
        max_deviation: 0.0,
        max_second_moment_ratio: None,
        rho_plus,
    };
    for _ in 0..trials {
        let theta = to_s(random_sparse(&mut rng, d, k));
        let snapshot = to_s(random_sparse(&mut rng, d, k));
        let support: Vec<usize> = match &truth {
            Some(t) => (0..d).filter(|&j| !t[j].is_zero() || !theta[j].is_zero()).collect(),
            None => (0..d).filter(|&j| !theta[j].is_zero()).collect(),
        };
        let (deviation, second) = vr_moments(problem, &theta, &snapshot, &support)?;
        report.max_deviation = report.max_deviation.max(deviation);
        if let (Some(t), Some(rho)) = (&truth, rho_plus) {
            let f = |x: &[S]| problem.value(x).to_f64_lossy();
            let f_star = f(t);
            let mut grad_star = vec![S::zero(); d];
            problem.gradient_into(t, &mut grad_star);
            let restricted: f64 = support.iter().map(|&j| grad_star[j].to_f64_lossy().powi(2)).sum();
            let bound = 12.0 * rho * (f(&theta) - f_star + f(&snapshot) - f_star) + 3.0 * restricted;
            let ratio = if bound > 0.0 { second / bound } else { f64::INFINITY };
            report.max_second_moment_ratio = Some(report.max_second_moment_ratio.map_or(ratio, |r| r.max(ratio)));
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RscStatus {
    Valid,
    /// The restricted strong convexity estimate is not positive.
    RscViolated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RscRssEstimate {
    pub rho_minus: f64,
    pub rho_plus: f64,
    /// `ρ⁺/ρ⁻`, present when `ρ⁻ > 0`.
    pub kappa: Option<f64>,
    pub sparsity: usize,
    pub trials: usize,
    /// Extreme eigenvalues over sampled `s x s` principal submatrices of
    /// the Hessian, for problems that expose one.
    pub hessian_min_eigenvalue: Option<f64>,
    pub hessian_max_eigenvalue: Option<f64>,
    pub status: RscStatus,
}

/// Bregman divergence `f(θ′+δ) − f(θ′) − ⟨∇f(θ′), δ⟩`.
fn bregman<S: Real>(value_at: impl Fn(&[S]) -> S, grad_base: &[S], base: &[S], moved: &[S], delta: &[S]) -> f64 {
    let inner: f64 = grad_base.iter().zip(delta).map(|(g, d)| (*g * *d).to_f64_lossy()).sum();
    value_at(moved).to_f64_lossy() - value_at(base).to_f64_lossy() - inner
}

/// Sampled restricted strong convexity / smoothness at sparsity `s`.
///
/// Each trial draws an `s`-sparse base point `θ′` and an `s`-sparse
/// direction `δ`; `ρ⁻` is the minimum of `2·D_F/‖δ‖²` and `ρ⁺` the maximum
/// of `2·D_{f_i}/‖δ‖²` over trials and components. When the problem exposes
/// a Hessian, `ρ⁻` is further lowered to the smallest eigenvalue over
/// sampled `s x s` principal submatrices.
pub fn estimate_rsc_rss<S: Real, P: Objective<S> + ?Sized>(
    problem: &P,
    s: usize,
    trials: usize,
    seed: u64,
) -> Result<RscRssEstimate> {
    let d = problem.shape().len();
    if s == 0 || s > d {
        return invalid(format!("sparsity s must lie in 1..={d}"));
    }
    if trials == 0 {
        return invalid("at least one trial is required");
    }
    let n = problem.num_components();
    let mut rng = rng_for(seed, 0);
    let mut rho_minus = f64::INFINITY;
    let mut rho_plus = f64::NEG_INFINITY;
    let mut grad = vec![S::zero(); d];
    for _ in 0..trials {
        let base: Vec<S> = random_sparse(&mut rng, d, s).into_iter().map(S::lit).collect();
        let delta: Vec<S> = random_sparse(&mut rng, d, s).into_iter().map(S::lit).collect();
        let moved: Vec<S> = base.iter().zip(&delta).map(|(a, b)| *a + *b).collect();
        let norm2: f64 = delta.iter().map(|v| v.to_f64_lossy().powi(2)).sum();
        problem.gradient_into(&base, &mut grad);
        let full = bregman(|x| problem.value(x), &grad, &base, &moved, &delta);
        rho_minus = rho_minus.min(2.0 * full / norm2);
        for i in 0..n {
            problem.component_gradient_into(i, &base, &mut grad);
            let comp = bregman(|x| problem.component_value(i, x), &grad, &base, &moved, &delta);
            rho_plus = rho_plus.max(2.0 * comp / norm2);
        }
    }

    let (mut hmin, mut hmax) = (None, None);
    if let Some(h) = problem.hessian() {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let samples = if s == d { 1 } else { trials };
        for _ in 0..samples {
            let mut idx = index::sample(&mut rng, d, s).into_vec();
            idx.sort_unstable();
            let eig = symmetric_eigen(&h.principal_submatrix(&idx))?;
            lo = lo.min(eig.eigenvalues[0].to_f64_lossy());
            hi = hi.max(eig.eigenvalues[s - 1].to_f64_lossy());
        }
        rho_minus = rho_minus.min(lo);
        hmin = Some(lo);
        hmax = Some(hi);
    }

    let status = if rho_minus > 0.0 {
        RscStatus::Valid
    } else {
        RscStatus::RscViolated
    };
    Ok(RscRssEstimate {
        rho_minus,
        rho_plus,
        kappa: (rho_minus > 0.0).then(|| rho_plus / rho_minus),
        sparsity: s,
        trials,
        hessian_min_eigenvalue: hmin,
        hessian_max_eigenvalue: hmax,
        status,
    })
}
