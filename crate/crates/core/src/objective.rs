//! Decomposable objectives `F(θ) = (1/n) Σ_i f_i(θ)` and the gradient
//! oracles the solvers consume, including the variance-reduced gradient
//! `∇f_i(θ) − ∇f_i(θ̃) + μ̃`.
//!
//! Component indices are zero-based (`0..n`).

use crate::error::{invalid, HtError, Result};
use crate::linalg::DenseMatrix;
use crate::param::{Parameter, Shape};
use crate::scalar::Real;

/// A finite-sum objective. Implementations must be pure: evaluating the same
/// `(i, θ)` twice gives bit-identical results, and evaluation never mutates
/// internal state, so instances can be shared read-only across threads.
pub trait Objective<S: Real>: Send + Sync {
    /// Number of component functions `n`.
    fn num_components(&self) -> usize;

    fn shape(&self) -> Shape;

    /// Samples per component (mini-batch size `b`); metadata for reporting.
    fn batch_size(&self) -> usize {
        1
    }

    /// `f_i(θ)` for `i < n`. Callers guarantee shapes and bounds.
    fn component_value(&self, i: usize, theta: &[S]) -> S;

    /// Writes `∇f_i(θ)` into `out`, overwriting it.
    fn component_gradient_into(&self, i: usize, theta: &[S], out: &mut [S]);

    /// `F(θ)`, the arithmetic mean of component values.
    fn value(&self, theta: &[S]) -> S {
        let n = self.num_components();
        let mut acc = S::zero();
        for i in 0..n {
            acc += self.component_value(i, theta);
        }
        acc / S::from_usize_lossy(n)
    }

    /// Writes `∇F(θ)`, the arithmetic mean of component gradients.
    fn gradient_into(&self, theta: &[S], out: &mut [S]) {
        let n = self.num_components();
        let mut tmp = vec![S::zero(); out.len()];
        out.iter_mut().for_each(|v| *v = S::zero());
        for i in 0..n {
            self.component_gradient_into(i, theta, &mut tmp);
            for (o, &t) in out.iter_mut().zip(&tmp) {
                *o += t;
            }
        }
        let nf = S::from_usize_lossy(n);
        out.iter_mut().for_each(|v| *v /= nf);
    }

    /// ℓ2 radius carried by the problem (sparse GLMs), applied after
    /// thresholding by the solvers.
    fn l2_radius(&self) -> Option<S> {
        None
    }

    /// Constant Hessian of `F` for quadratic objectives.
    fn hessian(&self) -> Option<DenseMatrix<S>> {
        None
    }

    /// Planted parameter of a synthetic instance, used only for reporting
    /// estimation error.
    fn ground_truth(&self) -> Option<&Parameter<S>> {
        None
    }
}

impl<S: Real, T: Objective<S> + ?Sized> Objective<S> for &T {
    fn num_components(&self) -> usize {
        (**self).num_components()
    }
    fn shape(&self) -> Shape {
        (**self).shape()
    }
    fn batch_size(&self) -> usize {
        (**self).batch_size()
    }
    fn component_value(&self, i: usize, theta: &[S]) -> S {
        (**self).component_value(i, theta)
    }
    fn component_gradient_into(&self, i: usize, theta: &[S], out: &mut [S]) {
        (**self).component_gradient_into(i, theta, out)
    }
    fn value(&self, theta: &[S]) -> S {
        (**self).value(theta)
    }
    fn gradient_into(&self, theta: &[S], out: &mut [S]) {
        (**self).gradient_into(theta, out)
    }
    fn l2_radius(&self) -> Option<S> {
        (**self).l2_radius()
    }
    fn hessian(&self) -> Option<DenseMatrix<S>> {
        (**self).hessian()
    }
    fn ground_truth(&self) -> Option<&Parameter<S>> {
        (**self).ground_truth()
    }
}

/// Anchor of one variance-reduction round: the snapshot `θ̃` and the full
/// gradient `μ̃ = ∇F(θ̃)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotState<S> {
    snapshot: Parameter<S>,
    full_gradient: Vec<S>,
}

impl<S: Real> SnapshotState<S> {
    /// Computes `μ̃` at `snapshot` (one full pass).
    pub fn new<P: Objective<S> + ?Sized>(problem: &P, snapshot: Parameter<S>) -> Result<Self> {
        let full_gradient = full_gradient(problem, &snapshot)?;
        Ok(Self {
            snapshot,
            full_gradient,
        })
    }

    pub fn snapshot(&self) -> &Parameter<S> {
        &self.snapshot
    }

    pub fn full_gradient(&self) -> &[S] {
        &self.full_gradient
    }
}

fn check_shape<S: Real, P: Objective<S> + ?Sized>(problem: &P, theta: &Parameter<S>) -> Result<()> {
    let want = problem.shape();
    if theta.shape() != want {
        // a vector of the right length is accepted for matrix problems
        if !(theta.len() == want.len() && matches!(theta.shape(), Shape::Vector(_))) {
            return invalid(format!(
                "parameter shape {:?} does not match problem shape {:?}",
                theta.shape(),
                want
            ));
        }
    }
    Ok(())
}

fn check_index<S: Real, P: Objective<S> + ?Sized>(problem: &P, i: usize) -> Result<()> {
    let n = problem.num_components();
    if i >= n {
        return invalid(format!("component index {i} out of range 0..{n}"));
    }
    Ok(())
}

fn first_non_finite<S: Real>(v: &[S]) -> Option<usize> {
    v.iter().position(|x| !x.is_finite())
}

/// `F(θ)` with shape validation and overflow detection.
pub fn objective_value<S: Real, P: Objective<S> + ?Sized>(problem: &P, theta: &Parameter<S>) -> Result<S> {
    check_shape(problem, theta)?;
    let n = problem.num_components();
    let mut acc = S::zero();
    for i in 0..n {
        let v = problem.component_value(i, theta.as_slice());
        if !v.is_finite() {
            return Err(HtError::NumericOverflow {
                component: i,
                detail: format!("component value {v}"),
            });
        }
        acc += v;
    }
    let value = acc / S::from_usize_lossy(n);
    if !value.is_finite() {
        return Err(HtError::NumericOverflow {
            component: n - 1,
            detail: "objective sum overflowed".into(),
        });
    }
    Ok(value)
}

/// `∇f_i(θ)`.
pub fn component_gradient<S: Real, P: Objective<S> + ?Sized>(
    problem: &P,
    i: usize,
    theta: &Parameter<S>,
) -> Result<Vec<S>> {
    check_shape(problem, theta)?;
    check_index(problem, i)?;
    let mut out = vec![S::zero(); theta.len()];
    problem.component_gradient_into(i, theta.as_slice(), &mut out);
    if let Some(j) = first_non_finite(&out) {
        return Err(HtError::NumericOverflow {
            component: i,
            detail: format!("gradient entry {j} is not finite"),
        });
    }
    Ok(out)
}

/// `∇F(θ)`, the mean of all component gradients.
pub fn full_gradient<S: Real, P: Objective<S> + ?Sized>(problem: &P, theta: &Parameter<S>) -> Result<Vec<S>> {
    check_shape(problem, theta)?;
    let mut out = vec![S::zero(); theta.len()];
    problem.gradient_into(theta.as_slice(), &mut out);
    if let Some(j) = first_non_finite(&out) {
        // locate the offending component for the report
        let mut tmp = vec![S::zero(); theta.len()];
        let component = (0..problem.num_components())
            .find(|&i| {
                problem.component_gradient_into(i, theta.as_slice(), &mut tmp);
                first_non_finite(&tmp).is_some()
            })
            .unwrap_or(0);
        return Err(HtError::NumericOverflow {
            component,
            detail: format!("full gradient entry {j} is not finite"),
        });
    }
    Ok(out)
}

/// Variance-reduced gradient `(∇f_i(θ) − ∇f_i(θ̃)) + μ̃`.
pub fn vr_gradient<S: Real, P: Objective<S> + ?Sized>(
    problem: &P,
    i: usize,
    theta: &Parameter<S>,
    state: &SnapshotState<S>,
) -> Result<Vec<S>> {
    check_shape(problem, theta)?;
    check_index(problem, i)?;
    if state.snapshot.len() != theta.len() || state.full_gradient.len() != theta.len() {
        return invalid("snapshot state does not match the parameter size");
    }
    let mut out = vec![S::zero(); theta.len()];
    let mut scratch = vec![S::zero(); theta.len()];
    vr_gradient_into(
        problem,
        i,
        theta.as_slice(),
        state.snapshot.as_slice(),
        &state.full_gradient,
        &mut out,
        &mut scratch,
    );
    Ok(out)
}

/// Unchecked kernel shared by the solvers.
#[inline]
pub(crate) fn vr_gradient_into<S: Real, P: Objective<S> + ?Sized>(
    problem: &P,
    i: usize,
    theta: &[S],
    snapshot: &[S],
    mu: &[S],
    out: &mut [S],
    scratch: &mut [S],
) {
    problem.component_gradient_into(i, theta, out);
    problem.component_gradient_into(i, snapshot, scratch);
    // grouped as g + (μ̃ − s): with n = 1, μ̃ == s and g passes through exactly
    for ((o, &s), &m) in out.iter_mut().zip(scratch.iter()).zip(mu) {
        *o += m - s;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::QuadraticProblem;

    fn two_scalar_quadratics() -> QuadraticProblem<f64> {
        // f1 = θ², f2 = 2θ²
        QuadraticProblem::scalar(&[(2.0, 0.0, 0.0), (4.0, 0.0, 0.0)])
    }

    #[test]
    fn value_is_mean_of_components() {
        let p = two_scalar_quadratics();
        let theta = Parameter::from_vec(vec![1.0]).unwrap();
        assert_eq!(objective_value(&p, &theta).unwrap(), 1.5);
    }

    #[test]
    fn shifted_quadratic_gradient() {
        // f1 = ½(θ − 2)² = ½θ² − 2θ + 2
        let p = QuadraticProblem::scalar(&[(1.0, 2.0, 2.0)]);
        let theta = Parameter::from_vec(vec![5.0]).unwrap();
        assert_eq!(component_gradient(&p, 0, &theta).unwrap(), vec![3.0]);
        assert_eq!(objective_value(&p, &theta).unwrap(), 4.5);
    }

    #[test]
    fn single_component_full_gradient_is_component_gradient() {
        let p = QuadraticProblem::scalar(&[(3.0, -1.0, 0.5)]);
        let theta = Parameter::from_vec(vec![0.7]).unwrap();
        assert_eq!(
            full_gradient(&p, &theta).unwrap(),
            component_gradient(&p, 0, &theta).unwrap()
        );
    }

    #[test]
    fn vr_gradient_at_snapshot_is_mu() {
        let p = two_scalar_quadratics();
        let snap = Parameter::from_vec(vec![0.3]).unwrap();
        let state = SnapshotState::new(&p, snap.clone()).unwrap();
        for i in 0..2 {
            assert_eq!(vr_gradient(&p, i, &snap, &state).unwrap(), state.full_gradient());
        }
    }

    #[test]
    fn index_and_shape_errors() {
        let p = two_scalar_quadratics();
        let theta = Parameter::from_vec(vec![1.0]).unwrap();
        assert!(matches!(
            component_gradient(&p, 2, &theta),
            Err(HtError::InvalidArgument(_))
        ));
        let wrong = Parameter::from_vec(vec![1.0, 2.0]).unwrap();
        assert!(objective_value(&p, &wrong).is_err());
    }

    #[test]
    fn overflow_names_the_component() {
        let p = QuadraticProblem::scalar(&[(1.0, 0.0, 0.0), (f64::MAX, 0.0, 0.0)]);
        let theta = Parameter::from_vec(vec![1e200]).unwrap();
        match objective_value(&p, &theta) {
            Err(HtError::NumericOverflow { component, .. }) => assert_eq!(component, 0),
            other => panic!("expected overflow, got {other:?}"),
        }
    }
}
