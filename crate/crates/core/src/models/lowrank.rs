use crate::error::{invalid, Result};
use crate::linalg::DenseMatrix;
use crate::models::linear::{linear_gradient_into, LinearRegressionData};
use crate::objective::Objective;
use crate::param::{dot, Parameter, Shape};
use crate::scalar::Real;

/// Linear measurements `y_ℓ = ⟨A_ℓ, Θ⟩ + z_ℓ` of a `rows x cols` matrix.
///
/// Each row of `measurements` holds `vec(A_ℓ)` in column-major order, so
/// `⟨A_ℓ, Θ⟩` is a plain dot product with the flattened parameter.
#[derive(Debug, Clone)]
pub struct LowRankData<S> {
    pub rows: usize,
    pub cols: usize,
    pub measurements: DenseMatrix<S>,
    pub responses: Vec<S>,
    pub batches: usize,
    pub batch_size: usize,
}

impl<S: Real> LowRankData<S> {
    /// Flattens a list of `rows x cols` measurement matrices.
    pub fn from_matrices(
        matrices: &[DenseMatrix<S>],
        responses: Vec<S>,
        batches: usize,
        batch_size: usize,
    ) -> Result<Self> {
        let Some(first) = matrices.first() else {
            return invalid("at least one measurement matrix is required");
        };
        let (rows, cols) = (first.rows(), first.cols());
        let mut flat = Vec::with_capacity(matrices.len() * rows * cols);
        for (l, m) in matrices.iter().enumerate() {
            if m.rows() != rows || m.cols() != cols {
                return invalid(format!("measurement {l} has shape {}x{}", m.rows(), m.cols()));
            }
            flat.extend(m.to_col_major());
        }
        Ok(Self {
            rows,
            cols,
            measurements: DenseMatrix::from_row_major(matrices.len(), rows * cols, flat)?,
            responses,
            batches,
            batch_size,
        })
    }
}

/// `f_i(Θ) = (1/2b) Σ_{ℓ∈S_i} (y_ℓ − ⟨A_ℓ, Θ⟩)²` over matrix parameters.
#[derive(Debug, Clone)]
pub struct LowRank<S> {
    shape: Shape,
    inner: LinearRegressionData<S>,
    truth: Option<Parameter<S>>,
}

pub fn make_lowrank<S: Real>(data: LowRankData<S>) -> Result<LowRank<S>> {
    if data.rows == 0 || data.cols == 0 {
        return invalid("matrix dimensions must be positive");
    }
    if data.measurements.cols() != data.rows * data.cols {
        return invalid(format!(
            "measurements have {} entries each, expected {}x{}",
            data.measurements.cols(),
            data.rows,
            data.cols
        ));
    }
    let inner = LinearRegressionData {
        design: data.measurements,
        responses: data.responses,
        batches: data.batches,
        batch_size: data.batch_size,
    };
    inner.validate()?;
    Ok(LowRank {
        shape: Shape::Matrix {
            rows: data.rows,
            cols: data.cols,
        },
        inner,
        truth: None,
    })
}

impl<S: Real> LowRank<S> {
    pub fn with_truth(mut self, truth: Parameter<S>) -> Result<Self> {
        if truth.len() != self.shape.len() {
            return invalid("ground truth size does not match the matrix shape");
        }
        self.truth = Some(Parameter::new(truth.into_vec(), self.shape)?);
        Ok(self)
    }

    /// `A(Θ)`: the vector of all noiseless measurements.
    pub fn apply_operator(&self, theta: &[S]) -> Vec<S> {
        self.inner.design.matvec(theta)
    }
}

impl<S: Real> Objective<S> for LowRank<S> {
    fn num_components(&self) -> usize {
        self.inner.batches
    }

    fn shape(&self) -> Shape {
        self.shape
    }

    fn batch_size(&self) -> usize {
        self.inner.batch_size
    }

    fn component_value(&self, i: usize, theta: &[S]) -> S {
        let b = self.inner.batch_size;
        let mut acc = S::zero();
        for l in i * b..(i + 1) * b {
            let r = self.inner.responses[l] - dot(self.inner.design.row(l), theta);
            acc += r * r;
        }
        acc / S::from_usize_lossy(2 * b)
    }

    fn component_gradient_into(&self, i: usize, theta: &[S], out: &mut [S]) {
        let b = self.inner.batch_size;
        linear_gradient_into(&self.inner, i * b..(i + 1) * b, theta, out);
    }

    fn ground_truth(&self) -> Option<&Parameter<S>> {
        self.truth.as_ref()
    }
}
