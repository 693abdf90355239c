use crate::error::{invalid, Result};
use crate::linalg::DenseMatrix;
use crate::objective::Objective;
use crate::param::{dot, Parameter, Shape};
use crate::scalar::Real;

/// Binary-response GLM data with an ℓ2 constraint radius.
#[derive(Debug, Clone)]
pub struct GlmData<S> {
    pub design: DenseMatrix<S>,
    /// Labels in `{0, 1}`.
    pub labels: Vec<S>,
    pub batches: usize,
    pub batch_size: usize,
    pub radius: S,
}

/// `log(1 + e^z)` without overflow.
#[inline]
pub fn softplus<S: Real>(z: S) -> S {
    z.max(S::zero()) + (-z.abs()).exp().ln_1p()
}

/// Logistic link `e^z / (1 + e^z)`.
#[inline]
pub fn sigmoid<S: Real>(z: S) -> S {
    if z >= S::zero() {
        S::one() / (S::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (S::one() + e)
    }
}

/// Per-row loss `log(1 + e^z) − y z` for a binary label. For `y = 1` this is
/// evaluated as `softplus(−z)` to avoid cancellation at large margins.
#[inline]
pub fn logistic_loss<S: Real>(z: S, y: S) -> S {
    if y == S::one() {
        softplus(-z)
    } else {
        softplus(z)
    }
}

/// Sparse logistic regression: `f_i(θ) = (1/b) Σ_{ℓ∈S_i} [log(1 + e^{a_ℓθ}) − y_ℓ a_ℓθ]`.
#[derive(Debug, Clone)]
pub struct Logistic<S> {
    data: GlmData<S>,
    truth: Option<Parameter<S>>,
}

pub fn make_logistic<S: Real>(data: GlmData<S>) -> Result<Logistic<S>> {
    let rows = data.design.rows();
    if data.batches == 0 || data.batch_size == 0 || data.batches * data.batch_size != rows {
        return invalid(format!(
            "n*b = {}*{} does not equal the {rows} samples",
            data.batches, data.batch_size
        ));
    }
    if data.labels.len() != rows {
        return invalid("label count does not match the design");
    }
    if let Some(l) = data.labels.iter().position(|&y| y != S::zero() && y != S::one()) {
        return invalid(format!("label {l} is {} but must be 0 or 1", data.labels[l]));
    }
    if !(data.radius > S::zero()) {
        return invalid("l2 radius must be positive");
    }
    Ok(Logistic { data, truth: None })
}

impl<S: Real> Logistic<S> {
    pub fn with_truth(mut self, truth: Parameter<S>) -> Result<Self> {
        if truth.len() != self.data.design.cols() {
            return invalid("ground truth length does not match the design width");
        }
        self.truth = Some(truth);
        Ok(self)
    }

    pub fn data(&self) -> &GlmData<S> {
        &self.data
    }
}

impl<S: Real> Objective<S> for Logistic<S> {
    fn num_components(&self) -> usize {
        self.data.batches
    }

    fn shape(&self) -> Shape {
        Shape::Vector(self.data.design.cols())
    }

    fn batch_size(&self) -> usize {
        self.data.batch_size
    }

    fn component_value(&self, i: usize, theta: &[S]) -> S {
        let b = self.data.batch_size;
        let mut acc = S::zero();
        for l in i * b..(i + 1) * b {
            let z = dot(self.data.design.row(l), theta);
            acc += logistic_loss(z, self.data.labels[l]);
        }
        acc / S::from_usize_lossy(b)
    }

    fn component_gradient_into(&self, i: usize, theta: &[S], out: &mut [S]) {
        let b = self.data.batch_size;
        out.iter_mut().for_each(|o| *o = S::zero());
        for l in i * b..(i + 1) * b {
            let row = self.data.design.row(l);
            let w = sigmoid(dot(row, theta)) - self.data.labels[l];
            for (o, &a) in out.iter_mut().zip(row) {
                *o += w * a;
            }
        }
        if b > 1 {
            let bf = S::from_usize_lossy(b);
            out.iter_mut().for_each(|o| *o /= bf);
        }
    }

    fn l2_radius(&self) -> Option<S> {
        Some(self.data.radius)
    }

    fn ground_truth(&self) -> Option<&Parameter<S>> {
        self.truth.as_ref()
    }
}

/// Fraction of rows whose predicted probability falls on the wrong side of
/// ½; a probability of exactly ½ counts as an error.
pub fn misclassification_rate<S: Real>(design: &DenseMatrix<S>, labels: &[S], theta: &[S]) -> f64 {
    let half = S::lit(0.5);
    let errors = (0..design.rows())
        .filter(|&l| {
            let p = sigmoid(dot(design.row(l), theta));
            if p == half {
                return true;
            }
            let predicted = if p > half { S::one() } else { S::zero() };
            predicted != labels[l]
        })
        .count();
    errors as f64 / design.rows().max(1) as f64
}
