use crate::error::{invalid, Result};
use crate::linalg::DenseMatrix;
use crate::objective::Objective;
use crate::param::{dot, Parameter, Shape};
use crate::scalar::Real;

/// Design, responses and the mini-batch partition. Batch `i` is the
/// contiguous row block `i*b .. (i+1)*b`.
#[derive(Debug, Clone)]
pub struct LinearRegressionData<S> {
    pub design: DenseMatrix<S>,
    pub responses: Vec<S>,
    pub batches: usize,
    pub batch_size: usize,
}

impl<S: Real> LinearRegressionData<S> {
    pub(crate) fn validate(&self) -> Result<()> {
        let rows = self.design.rows();
        if self.batches == 0 || self.batch_size == 0 {
            return invalid("batch count and batch size must be positive");
        }
        if self.batches * self.batch_size != rows {
            return invalid(format!(
                "n*b = {}*{} does not equal the {rows} samples",
                self.batches, self.batch_size
            ));
        }
        if self.responses.len() != rows {
            return invalid(format!("{} responses for {rows} design rows", self.responses.len()));
        }
        if self.design.cols() == 0 {
            return invalid("design has no columns");
        }
        if self
            .design
            .as_slice()
            .iter()
            .chain(&self.responses)
            .any(|v| !v.is_finite())
        {
            return invalid("design and responses must be finite");
        }
        Ok(())
    }
}

/// `f_i(θ) = (1/2b)‖y_{S_i} − A_{S_i}θ‖²`, so `F(θ) = (1/2nb)‖y − Aθ‖²`.
#[derive(Debug, Clone)]
pub struct LinearRegression<S> {
    data: LinearRegressionData<S>,
    truth: Option<Parameter<S>>,
}

pub fn make_linear_regression<S: Real>(data: LinearRegressionData<S>) -> Result<LinearRegression<S>> {
    data.validate()?;
    Ok(LinearRegression { data, truth: None })
}

impl<S: Real> LinearRegression<S> {
    /// Attaches the planted parameter used for estimation-error reporting.
    pub fn with_truth(mut self, truth: Parameter<S>) -> Result<Self> {
        if truth.len() != self.data.design.cols() {
            return invalid("ground truth length does not match the design width");
        }
        self.truth = Some(truth);
        Ok(self)
    }

    pub fn data(&self) -> &LinearRegressionData<S> {
        &self.data
    }

    pub fn truth(&self) -> Option<&Parameter<S>> {
        self.truth.as_ref()
    }

    #[inline]
    fn rows_of(&self, i: usize) -> std::ops::Range<usize> {
        let b = self.data.batch_size;
        i * b..(i + 1) * b
    }
}

impl<S: Real> Objective<S> for LinearRegression<S> {
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
        let mut acc = S::zero();
        for l in self.rows_of(i) {
            let r = self.data.responses[l] - dot(self.data.design.row(l), theta);
            acc += r * r;
        }
        acc / S::from_usize_lossy(2 * self.data.batch_size)
    }

    fn component_gradient_into(&self, i: usize, theta: &[S], out: &mut [S]) {
        linear_gradient_into(&self.data, self.rows_of(i), theta, out);
    }

    fn ground_truth(&self) -> Option<&Parameter<S>> {
        self.truth.as_ref()
    }
}

/// `−(1/b) A_Sᵀ(y_S − A_S θ)` over the row range.
pub(crate) fn linear_gradient_into<S: Real>(
    data: &LinearRegressionData<S>,
    rows: std::ops::Range<usize>,
    theta: &[S],
    out: &mut [S],
) {
    let b = data.batch_size;
    let mut first = true;
    for l in rows {
        let row = data.design.row(l);
        let r = dot(row, theta) - data.responses[l];
        if first {
            for (o, &a) in out.iter_mut().zip(row) {
                *o = r * a;
            }
            first = false;
        } else {
            for (o, &a) in out.iter_mut().zip(row) {
                *o += r * a;
            }
        }
    }
    if b > 1 {
        let bf = S::from_usize_lossy(b);
        out.iter_mut().for_each(|o| *o /= bf);
    }
}
