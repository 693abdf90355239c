//! Quadratic finite sums `f_i(θ) = ½θᵀH_iθ − b_iᵀθ + c_i`, and the
//! corrected-covariance objectives built from noisy or incomplete designs.
//!
//! The corrected objective `F(θ) = ½θᵀΓ̂θ − b̂ᵀθ` need not be convex: `Γ̂`
//! can be indefinite when `d > nb`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::{symmetric_eigen, DenseMatrix};
use crate::objective::Objective;
use crate::param::{dot, Parameter, Shape};
use crate::scalar::Real;

#[derive(Debug, Clone)]
pub struct QuadraticComponent<S> {
    pub hessian: DenseMatrix<S>,
    pub linear: Vec<S>,
    pub constant: S,
}

#[derive(Debug, Clone)]
pub struct QuadraticProblem<S> {
    components: Vec<QuadraticComponent<S>>,
    dim: usize,
    truth: Option<Parameter<S>>,
}

impl<S: Real> QuadraticProblem<S> {
    pub fn new(components: Vec<QuadraticComponent<S>>) -> Result<Self> {
        let Some(first) = components.first() else {
            return invalid("a quadratic problem needs at least one component");
        };
        let dim = first.linear.len();
        if dim == 0 {
            return invalid("quadratic components must have positive dimension");
        }
        for (i, c) in components.iter().enumerate() {
            if c.hessian.rows() != dim || c.hessian.cols() != dim || c.linear.len() != dim {
                return invalid(format!("component {i} has inconsistent dimensions"));
            }
        }
        Ok(Self {
            components,
            dim,
            truth: None,
        })
    }

    /// One-dimensional components given as `(h, b, c)` for `½hθ² − bθ + c`.
    pub fn scalar(terms: &[(S, S, S)]) -> Self {
        let components = terms
            .iter()
            .map(|&(h, b, c)| QuadraticComponent {
                hessian: DenseMatrix::from_diagonal(&[h]),
                linear: vec![b],
                constant: c,
            })
            .collect();
        Self::new(components).expect("scalar components are consistent")
    }

    /// `f_i(θ) = ½‖θ − center_i‖²` for each center.
    pub fn isotropic(centers: &[Vec<S>]) -> Result<Self> {
        let components = centers
            .iter()
            .map(|c| QuadraticComponent {
                hessian: DenseMatrix::identity(c.len()),
                linear: c.clone(),
                constant: dot(c, c) / S::lit(2.0),
            })
            .collect();
        Self::new(components)
    }

    pub fn with_truth(mut self, truth: Parameter<S>) -> Result<Self> {
        if truth.len() != self.dim {
            return invalid("ground truth length does not match the problem dimension");
        }
        self.truth = Some(truth);
        Ok(self)
    }

    pub fn components(&self) -> &[QuadraticComponent<S>] {
        &self.components
    }
}

impl<S: Real> Objective<S> for QuadraticProblem<S> {
    fn num_components(&self) -> usize {
        self.components.len()
    }

    fn shape(&self) -> Shape {
        Shape::Vector(self.dim)
    }

    fn component_value(&self, i: usize, theta: &[S]) -> S {
        let c = &self.components[i];
        let h_theta = c.hessian.matvec(theta);
        dot(theta, &h_theta) / S::lit(2.0) - dot(&c.linear, theta) + c.constant
    }

    fn component_gradient_into(&self, i: usize, theta: &[S], out: &mut [S]) {
        let c = &self.components[i];
        for (r, o) in out.iter_mut().enumerate() {
            *o = dot(c.hessian.row(r), theta) - c.linear[r];
        }
    }

    fn hessian(&self) -> Option<DenseMatrix<S>> {
        let n = S::from_usize_lossy(self.components.len());
        let mut h = DenseMatrix::zeros(self.dim, self.dim);
        for c in &self.components {
            for (dst, &src) in h.as_mut_slice().iter_mut().zip(c.hessian.as_slice()) {
                *dst += src;
            }
        }
        h.as_mut_slice().iter_mut().for_each(|v| *v /= n);
        Some(h)
    }

    fn ground_truth(&self) -> Option<&Parameter<S>> {
        self.truth.as_ref()
    }
}

/// How the observed design was corrupted, and hence which correction turns
/// `ZᵀZ/nb` into an unbiased surrogate for `AᵀA/nb`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignCorrection<S> {
    /// Entries observed independently with probability `1 − rho`, zero
    /// otherwise. Rows are rescaled by the observation probability.
    Missing { rho: S },
    /// `Z = A + W`, rows of `W` with known covariance.
    Additive { noise_covariance: DenseMatrix<S> },
    /// `Z = A ⊙ U` with known moments `E[u]` and `E[uᵀu]`.
    Multiplicative {
        first_moment: Vec<S>,
        second_moment: DenseMatrix<S>,
    },
}

impl<S: Real> DesignCorrection<S> {
    /// Moments of i.i.d. Bernoulli(`keep`) multiplicative masks.
    pub fn bernoulli_mask(d: usize, keep: S) -> Self {
        DesignCorrection::Multiplicative {
            first_moment: vec![keep; d],
            second_moment: DenseMatrix::from_fn(d, d, |i, j| if i == j { keep } else { keep * keep }),
        }
    }

    fn validate(&self, d: usize) -> Result<()> {
        match self {
            DesignCorrection::Missing { rho } => {
                if !(*rho >= S::zero() && *rho < S::one()) {
                    return invalid("missing-data rate must lie in [0, 1)");
                }
            }
            DesignCorrection::Additive { noise_covariance: cov } => {
                if cov.rows() != d || cov.cols() != d {
                    return invalid("noise covariance must be d x d");
                }
                let scale = cov.max_abs().max(S::one());
                if !cov.is_symmetric(S::lit(1e-12) * scale) {
                    return invalid("noise covariance must be symmetric");
                }
                let eig = symmetric_eigen(cov)?;
                if eig.eigenvalues[0] < -S::lit(1e-10) * scale {
                    return invalid("noise covariance must be positive semidefinite");
                }
            }
            DesignCorrection::Multiplicative {
                first_moment,
                second_moment,
            } => {
                if first_moment.len() != d || second_moment.rows() != d || second_moment.cols() != d {
                    return invalid("multiplicative moments must match the design width");
                }
                if first_moment
                    .iter()
                    .chain(second_moment.as_slice())
                    .any(|v| !(*v > S::zero()))
                {
                    return invalid("multiplicative moments must be strictly positive");
                }
            }
        }
        Ok(())
    }
}

/// Corrected quadratic with aggregate `Γ̂`, `b̂` and per-batch `Γ̂_i`, `b̂_i`
/// built from the batch's own rows, so that the means recover the
/// aggregates.
#[derive(Debug, Clone)]
pub struct CorruptedQuadratic<S> {
    gamma_hat: DenseMatrix<S>,
    b_hat: Vec<S>,
    inner: QuadraticProblem<S>,
}

impl<S: Real> CorruptedQuadratic<S> {
    pub fn gamma_hat(&self) -> &DenseMatrix<S> {
        &self.gamma_hat
    }

    pub fn b_hat(&self) -> &[S] {
        &self.b_hat
    }

    pub fn components(&self) -> &[QuadraticComponent<S>] {
        self.inner.components()
    }

    pub fn with_truth(mut self, truth: Parameter<S>) -> Result<Self> {
        self.inner = self.inner.with_truth(truth)?;
        Ok(self)
    }
}

impl<S: Real> Objective<S> for CorruptedQuadratic<S> {
    fn num_components(&self) -> usize {
        self.inner.num_components()
    }
    fn shape(&self) -> Shape {
        self.inner.shape()
    }
    fn batch_size(&self) -> usize {
        self.inner.batch_size()
    }
    fn component_value(&self, i: usize, theta: &[S]) -> S {
        self.inner.component_value(i, theta)
    }
    fn component_gradient_into(&self, i: usize, theta: &[S], out: &mut [S]) {
        self.inner.component_gradient_into(i, theta, out)
    }
    fn hessian(&self) -> Option<DenseMatrix<S>> {
        Some(self.gamma_hat.clone())
    }
    fn ground_truth(&self) -> Option<&Parameter<S>> {
        self.inner.ground_truth()
    }
}

/// Builds the corrected quadratic from the observed design `z` (nb x d),
/// responses `y`, and `batches` contiguous mini-batches.
pub fn make_corrupted_quadratic<S: Real>(
    z: &DenseMatrix<S>,
    y: &[S],
    correction: &DesignCorrection<S>,
    batches: usize,
) -> Result<CorruptedQuadratic<S>> {
    let (nb, d) = (z.rows(), z.cols());
    if y.len() != nb {
        return invalid("response length does not match the design");
    }
    if batches == 0 || nb % batches != 0 {
        return invalid(format!("{nb} samples cannot be split into {batches} equal batches"));
    }
    correction.validate(d)?;
    let b = nb / batches;

    let rescaled;
    let z = match correction {
        DesignCorrection::Missing { rho } => {
            let keep = S::one() - *rho;
            let mut m = z.clone();
            m.as_mut_slice().iter_mut().for_each(|v| *v /= keep);
            rescaled = m;
            &rescaled
        }
        _ => z,
    };

    let correct = |gram: &mut DenseMatrix<S>, cross: &mut Vec<S>| match correction {
        DesignCorrection::Missing { rho } => {
            for j in 0..d {
                let v = gram.get(j, j);
                gram.set(j, j, v - *rho * v);
            }
        }
        DesignCorrection::Additive { noise_covariance } => {
            for (g, &w) in gram.as_mut_slice().iter_mut().zip(noise_covariance.as_slice()) {
                *g -= w;
            }
        }
        DesignCorrection::Multiplicative {
            first_moment,
            second_moment,
        } => {
            for (g, &m) in gram.as_mut_slice().iter_mut().zip(second_moment.as_slice()) {
                *g /= m;
            }
            for (c, &m) in cross.iter_mut().zip(first_moment) {
                *c /= m;
            }
        }
    };

    let cross_block = |start: usize, end: usize, scale: S| -> Vec<S> {
        let mut out = vec![S::zero(); d];
        for l in start..end {
            let row = z.row(l);
            for (o, &a) in out.iter_mut().zip(row) {
                *o += a * y[l];
            }
        }
        out.iter_mut().for_each(|o| *o /= scale);
        out
    };

    let mut components = Vec::with_capacity(batches);
    let bf = S::from_usize_lossy(b);
    for i in 0..batches {
        let mut gram = z.gram_block(i * b, (i + 1) * b, bf);
        let mut cross = cross_block(i * b, (i + 1) * b, bf);
        correct(&mut gram, &mut cross);
        components.push(QuadraticComponent {
            hessian: gram,
            linear: cross,
            constant: S::zero(),
        });
    }

    let nbf = S::from_usize_lossy(nb);
    let mut gamma_hat = z.gram_block(0, nb, nbf);
    let mut b_hat = cross_block(0, nb, nbf);
    correct(&mut gamma_hat, &mut b_hat);

    Ok(CorruptedQuadratic {
        gamma_hat,
        b_hat,
        inner: QuadraticProblem::new(components)?,
    })
}
