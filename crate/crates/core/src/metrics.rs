use crate::error::{invalid, Result};
use crate::param::Parameter;
use crate::scalar::Real;

/// `‖θ − θ*‖₂ / ‖θ*‖₂` (Frobenius for matrices).
pub fn relative_estimation_error<S: Real>(theta: &Parameter<S>, truth: &Parameter<S>) -> Result<f64> {
    if theta.len() != truth.len() {
        return invalid("estimate and truth have different sizes");
    }
    relative_error_slices(theta.as_slice(), truth.as_slice())
}

pub(crate) fn relative_error_slices<S: Real>(theta: &[S], truth: &[S]) -> Result<f64> {
    let denom: f64 = truth.iter().map(|t| t.to_f64_lossy().powi(2)).sum::<f64>().sqrt();
    if denom == 0.0 {
        return invalid("relative error is undefined for a zero ground truth");
    }
    let num: f64 = theta
        .iter()
        .zip(truth)
        .map(|(a, b)| (a.to_f64_lossy() - b.to_f64_lossy()).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(num / denom)
}

/// Median of a non-empty sample (mean of the two middle values for even
/// sizes). NaNs sort last.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2.0
    })
}
