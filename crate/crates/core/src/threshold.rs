//! Projection and thresholding operators.
//!
//! * [`hard_threshold`] keeps the `k` largest-magnitude entries. Among equal
//!   magnitudes the lower index wins.
//! * [`l2_ball_project`] is the Euclidean projection onto `{‖v‖₂ ≤ τ}`.
//! * [`svt`] keeps the top `k` singular values (best rank-`k` approximation).
//!   Equal singular values are kept in decomposition order, so the result
//!   depends on the decomposition only on a measure-zero set of inputs.
//! * [`soft_threshold`] is the proximal operator of `level·‖·‖₁`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::{rank_k_approx, DenseMatrix};
use crate::param::norm2;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdSpec<S> {
    Hard { k: usize },
    L2Ball { radius: S },
    Svt { k: usize },
    Soft { level: S },
}

impl<S: Real> ThresholdSpec<S> {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ThresholdSpec::Hard { k: 0 } | ThresholdSpec::Svt { k: 0 } => {
                invalid("sparsity/rank level k must be at least 1")
            }
            ThresholdSpec::L2Ball { radius } if !(radius > S::zero()) => invalid("l2 radius must be positive"),
            ThresholdSpec::Soft { level } if !(level >= S::zero()) => {
                invalid("soft-threshold level must be nonnegative")
            }
            _ => Ok(()),
        }
    }
}

/// Reusable buffer for [`hard_threshold_in_place`].
#[derive(Debug, Default, Clone)]
pub struct HtScratch {
    keys: Vec<u64>,
}

/// `H_k(v)`: zero all but the `k` largest-magnitude entries.
pub fn hard_threshold<S: Real>(v: &[S], k: usize) -> Result<Vec<S>> {
    if k == 0 {
        return invalid("hard thresholding needs k >= 1");
    }
    let mut out = v.to_vec();
    hard_threshold_in_place(&mut out, k, &mut HtScratch::default());
    Ok(out)
}

/// In-place `H_k` using an O(d) average-time selection of the k-th largest
/// magnitude. `k` must be at least 1.
pub fn hard_threshold_in_place<S: Real>(v: &mut [S], k: usize, scratch: &mut HtScratch) {
    debug_assert!(k >= 1);
    let d = v.len();
    if k >= d {
        return;
    }
    let keys = &mut scratch.keys;
    keys.clear();
    keys.extend(v.iter().map(|x| x.magnitude_key()));
    let (_, kth, _) = keys.select_nth_unstable_by(k - 1, |a, b| b.cmp(a));
    let cutoff = *kth;
    let above = v.iter().filter(|x| x.magnitude_key() > cutoff).count();
    let mut ties_left = k - above;
    for x in v.iter_mut() {
        let key = x.magnitude_key();
        if key > cutoff {
            continue;
        }
        if key == cutoff && ties_left > 0 {
            ties_left -= 1;
            continue;
        }
        *x = S::zero();
    }
}

/// Euclidean projection onto the ball of radius `radius`.
pub fn l2_ball_project<S: Real>(v: &[S], radius: S) -> Result<Vec<S>> {
    if !(radius > S::zero()) {
        return invalid("l2 radius must be positive");
    }
    let mut out = v.to_vec();
    l2_ball_project_in_place(&mut out, radius);
    Ok(out)
}

pub fn l2_ball_project_in_place<S: Real>(v: &mut [S], radius: S) {
    let norm = norm2(v);
    if norm <= radius {
        return;
    }
    let mut scale = radius / norm;
    let original: Vec<S> = v.to_vec();
    // guard against the rescaled norm landing a few ulps outside the ball
    for _ in 0..8 {
        for (o, &x) in v.iter_mut().zip(&original) {
            *o = x * scale;
        }
        if norm2(v) <= radius {
            return;
        }
        scale *= S::one() - S::epsilon() * S::lit(2.0);
    }
}

/// `R_k(M)` for a matrix given in column-major order.
pub fn svt_col_major<S: Real>(values: &[S], rows: usize, cols: usize, k: usize) -> Result<Vec<S>> {
    if k == 0 {
        return invalid("singular value thresholding needs k >= 1");
    }
    if values.len() != rows * cols {
        return invalid("matrix buffer does not match its dimensions");
    }
    if k >= rows.min(cols) {
        return Ok(values.to_vec());
    }
    let m = DenseMatrix::from_col_major(rows, cols, values);
    Ok(rank_k_approx(&m, k)?.to_col_major())
}

/// `R_k(M)`: best rank-`k` approximation in Frobenius norm.
pub fn svt<S: Real>(m: &DenseMatrix<S>, k: usize) -> Result<DenseMatrix<S>> {
    if k == 0 {
        return invalid("singular value thresholding needs k >= 1");
    }
    if k >= m.rows().min(m.cols()) {
        return Ok(m.clone());
    }
    rank_k_approx(m, k)
}

/// Elementwise `sign(v)·max(|v| − level, 0)`.
pub fn soft_threshold<S: Real>(v: &[S], level: S) -> Result<Vec<S>> {
    if !(level >= S::zero()) {
        return invalid("soft-threshold level must be nonnegative");
    }
    let mut out = v.to_vec();
    soft_threshold_in_place(&mut out, level);
    Ok(out)
}

pub fn soft_threshold_in_place<S: Real>(v: &mut [S], level: S) {
    if level.is_zero() {
        return;
    }
    for x in v.iter_mut() {
        let mag = x.abs() - level;
        *x = if mag > S::zero() { x.signum() * mag } else { S::zero() };
    }
}
