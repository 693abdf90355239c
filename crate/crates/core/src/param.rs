//! Optimization iterates.
//!
//! A [`Parameter`] is either a vector of length `d` or a `d x p` matrix.
//! Matrices are stored flattened in **column-major** order (entry `(i, j)`
//! lives at `j * d + i`), so vector-oriented solvers handle both shapes and
//! only the thresholding step looks at the shape.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Vector(usize),
    Matrix { rows: usize, cols: usize },
}

impl Shape {
    pub fn len(&self) -> usize {
        match *self {
            Shape::Vector(d) => d,
            Shape::Matrix { rows, cols } => rows * cols,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_matrix(&self) -> bool {
        matches!(self, Shape::Matrix { .. })
    }

    pub(crate) fn validate(&self) -> Result<()> {
        match *self {
            Shape::Vector(0) => invalid("vector dimension must be positive"),
            Shape::Matrix { rows, cols } if rows == 0 || cols == 0 => invalid("matrix dimensions must be positive"),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Parameter<S> {
    values: Vec<S>,
    shape: Shape,
}

impl<S: Real> Parameter<S> {
    pub fn zeros(shape: Shape) -> Self {
        Self {
            values: vec![S::zero(); shape.len()],
            shape,
        }
    }

    pub fn from_vec(values: Vec<S>) -> Result<Self> {
        let shape = Shape::Vector(values.len());
        Self::new(values, shape)
    }

    /// Builds a matrix parameter from column-major values.
    pub fn from_col_major(rows: usize, cols: usize, values: Vec<S>) -> Result<Self> {
        Self::new(values, Shape::Matrix { rows, cols })
    }

    pub fn new(values: Vec<S>, shape: Shape) -> Result<Self> {
        shape.validate()?;
        if values.len() != shape.len() {
            return invalid(format!(
                "parameter has {} entries but shape {:?} needs {}",
                values.len(),
                shape,
                shape.len()
            ));
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return invalid(format!("parameter entry {j} is not finite"));
        }
        Ok(Self { values, shape })
    }

    /// Wraps values without the finiteness check. Used on solver hot paths
    /// where finiteness is monitored separately.
    pub(crate) fn from_raw(values: Vec<S>, shape: Shape) -> Self {
        debug_assert_eq!(values.len(), shape.len());
        Self { values, shape }
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[S] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [S] {
        &mut self.values
    }

    pub fn into_vec(self) -> Vec<S> {
        self.values
    }

    /// Matrix entry `(i, j)`; panics for vector parameters.
    pub fn get(&self, i: usize, j: usize) -> S {
        match self.shape {
            Shape::Matrix { rows, .. } => self.values[j * rows + i],
            Shape::Vector(_) => panic!("get(i, j) on a vector parameter"),
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.iter().filter(|v| !v.is_zero()).count()
    }

    pub fn norm2(&self) -> S {
        norm2(&self.values)
    }
}

pub(crate) fn norm2<S: Real>(v: &[S]) -> S {
    v.iter().map(|&x| x * x).sum::<S>().sqrt()
}

pub(crate) fn dot<S: Real>(a: &[S], b: &[S]) -> S {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = S::zero();
    for (&x, &y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}
