//! Small dense linear algebra: a row-major matrix type, one-sided Jacobi SVD
//! and cyclic Jacobi symmetric eigendecomposition.
//!
//! Both decompositions are exact-arithmetic algorithms iterated to working
//! precision; they are meant for the modest sizes used here (low-rank
//! iterates, Hessian sub-blocks, covariance square roots).

use serde::{Deserialize, Serialize};

use crate::error::{invalid, HtError, Result};
use crate::scalar::Real;

const MAX_SWEEPS: usize = 80;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Real> DenseMatrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, S::one());
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<S>) -> Result<Self> {
        if data.len() != rows * cols {
            return invalid(format!(
                "matrix data has {} entries, expected {rows}x{cols}",
                data.len()
            ));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_diagonal(diag: &[S]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    /// Reads a column-major buffer (the layout of matrix parameters).
    pub fn from_col_major(rows: usize, cols: usize, values: &[S]) -> Self {
        Self::from_fn(rows, cols, |i, j| values[j * rows + i])
    }

    pub fn to_col_major(&self) -> Vec<S> {
        let mut out = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                out.push(self.get(i, j));
            }
        }
        out
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> S {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: S) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Contiguous block of rows `start..end`, row-major.
    #[inline]
    pub fn row_block(&self, start: usize, end: usize) -> &[S] {
        &self.data[start * self.cols..end * self.cols]
    }

    pub fn as_slice(&self) -> &[S] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [S] {
        &mut self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return invalid(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            ));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self.get(i, l);
                if a.is_zero() {
                    continue;
                }
                let src = other.row(l);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(src) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, x: &[S]) -> Vec<S> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| crate::param::dot(self.row(i), x)).collect()
    }

    /// `X^T X / scale` over the row block `start..end`.
    pub fn gram_block(&self, start: usize, end: usize, scale: S) -> Self {
        let d = self.cols;
        let mut g = Self::zeros(d, d);
        for r in start..end {
            let row = self.row(r);
            for j in 0..d {
                let a = row[j];
                if a.is_zero() {
                    continue;
                }
                let dst = &mut g.data[j * d..(j + 1) * d];
                for (k, &b) in row.iter().enumerate().skip(j) {
                    dst[k] += a * b;
                }
            }
        }
        for j in 0..d {
            for k in j..d {
                let v = g.get(j, k) / scale;
                g.set(j, k, v);
                g.set(k, j, v);
            }
        }
        g
    }

    pub fn frobenius(&self) -> S {
        crate::param::norm2(&self.data)
    }

    pub fn max_abs(&self) -> S {
        self.data.iter().fold(S::zero(), |m, &v| m.max(v.abs()))
    }

    pub fn is_symmetric(&self, tol: S) -> bool {
        self.rows == self.cols && (0..self.rows).all(|i| (0..i).all(|j| (self.get(i, j) - self.get(j, i)).abs() <= tol))
    }

    /// Principal submatrix on the given index set.
    pub fn principal_submatrix(&self, idx: &[usize]) -> Self {
        Self::from_fn(idx.len(), idx.len(), |a, b| self.get(idx[a], idx[b]))
    }
}

/// Thin singular value decomposition `M = U diag(s) V^T`, singular values in
/// non-increasing order.
#[derive(Debug, Clone)]
pub struct Svd<S> {
    pub u: DenseMatrix<S>,
    pub singular_values: Vec<S>,
    pub v: DenseMatrix<S>,
}

impl<S: Real> Svd<S> {
    /// `sum_{i < k} s_i u_i v_i^T`.
    pub fn truncated(&self, k: usize) -> DenseMatrix<S> {
        let (m, n) = (self.u.rows(), self.v.rows());
        let r = k.min(self.singular_values.len());
        DenseMatrix::from_fn(m, n, |i, j| {
            let mut acc = S::zero();
            for l in 0..r {
                acc += self.singular_values[l] * self.u.get(i, l) * self.v.get(j, l);
            }
            acc
        })
    }
}

/// One-sided (Hestenes) Jacobi SVD. Wide matrices are handled by
/// decomposing the transpose.
pub fn svd<S: Real>(m: &DenseMatrix<S>) -> Result<Svd<S>> {
    if m.rows() >= m.cols() {
        svd_tall(m)
    } else {
        let t = svd_tall(&m.transpose())?;
        Ok(Svd {
            u: t.v,
            singular_values: t.singular_values,
            v: t.u,
        })
    }
}

fn svd_tall<S: Real>(m: &DenseMatrix<S>) -> Result<Svd<S>> {
    let (rows, cols) = (m.rows(), m.cols());
    // columns stored contiguously
    let mut a: Vec<Vec<S>> = (0..cols).map(|j| (0..rows).map(|i| m.get(i, j)).collect()).collect();
    let mut v: Vec<Vec<S>> = (0..cols)
        .map(|j| (0..cols).map(|i| if i == j { S::one() } else { S::zero() }).collect())
        .collect();
    // rounding keeps column cosines near rows·ε
    let tol = S::epsilon() * S::lit(rows as f64);
    let mut converged = false;
    let mut residual = S::zero();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        residual = S::zero();
        for p in 0..cols {
            for q in (p + 1)..cols {
                let alpha = crate::param::dot(&a[p], &a[p]);
                let beta = crate::param::dot(&a[q], &a[q]);
                let gamma = crate::param::dot(&a[p], &a[q]);
                if alpha.is_zero() || beta.is_zero() {
                    continue;
                }
                let scale = (alpha * beta).sqrt();
                residual = residual.max(gamma.abs() / scale);
                if gamma.abs() <= tol * scale {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (gamma + gamma);
                let t = zeta.signum() / (zeta.abs() + (S::one() + zeta * zeta).sqrt());
                let c = S::one() / (S::one() + t * t).sqrt();
                let s = c * t;
                rotate_pair(&mut a, p, q, c, s);
                rotate_pair(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(HtError::SvdNoConvergence {
            rows,
            cols,
            residual: residual.to_f64_lossy(),
            max_abs: m.max_abs().to_f64_lossy(),
        });
    }

    let norms: Vec<S> = a.iter().map(|c| crate::param::norm2(c)).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    // stable: equal singular values keep column order
    order.sort_by(|&x, &y| norms[y].partial_cmp(&norms[x]).unwrap_or(std::cmp::Ordering::Equal));

    let mut u = DenseMatrix::zeros(rows, cols);
    let mut vv = DenseMatrix::zeros(cols, cols);
    let mut s = Vec::with_capacity(cols);
    for (dst, &src) in order.iter().enumerate() {
        let sigma = norms[src];
        s.push(sigma);
        for i in 0..rows {
            let val = if sigma.is_zero() { S::zero() } else { a[src][i] / sigma };
            u.set(i, dst, val);
        }
        for i in 0..cols {
            vv.set(i, dst, v[src][i]);
        }
    }
    Ok(Svd {
        u,
        singular_values: s,
        v: vv,
    })
}

fn rotate_pair<S: Real>(cols: &mut [Vec<S>], p: usize, q: usize, c: S, s: S) {
    let (lo, hi) = cols.split_at_mut(q);
    let (xp, xq) = (&mut lo[p], &mut hi[0]);
    for (a, b) in xp.iter_mut().zip(xq.iter_mut()) {
        let (x, y) = (*a, *b);
        *a = c * x - s * y;
        *b = s * x + c * y;
    }
}

/// Best rank-`k` approximation via Jacobi SVD.
pub(crate) fn rank_k_approx<S: Real>(m: &DenseMatrix<S>, k: usize) -> Result<DenseMatrix<S>> {
    Ok(svd(m)?.truncated(k))
}

/// Eigen-decomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymmetricEigen<S> {
    /// Ascending.
    pub eigenvalues: Vec<S>,
    /// Column `j` is the eigenvector for `eigenvalues[j]`.
    pub eigenvectors: DenseMatrix<S>,
}

/// Cyclic Jacobi eigenvalue algorithm for symmetric matrices.
pub fn symmetric_eigen<S: Real>(m: &DenseMatrix<S>) -> Result<SymmetricEigen<S>> {
    let n = m.rows();
    if m.cols() != n {
        return invalid("eigendecomposition needs a square matrix");
    }
    let mut a = m.clone();
    let mut v = DenseMatrix::identity(n);
    let total = a.frobenius();
    let eps = S::epsilon();
    let mut converged = n < 2 || total.is_zero();
    let mut off = S::zero();
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        off = S::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off += a.get(p, q) * a.get(p, q);
            }
        }
        off = off.sqrt();
        if off <= eps * total {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq.is_zero() {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let theta = (aqq - app) / (apq + apq);
                let t = if theta.is_infinite() {
                    S::zero()
                } else {
                    let sgn = if theta < S::zero() { -S::one() } else { S::one() };
                    sgn / (theta.abs() + (theta * theta + S::one()).sqrt())
                };
                if t.is_zero() {
                    a.set(p, q, S::zero());
                    a.set(q, p, S::zero());
                    continue;
                }
                let c = S::one() / (t * t + S::one()).sqrt();
                let s = t * c;
                for r in 0..n {
                    let arp = a.get(r, p);
                    let arq = a.get(r, q);
                    a.set(r, p, c * arp - s * arq);
                    a.set(r, q, s * arp + c * arq);
                }
                for r in 0..n {
                    let apr = a.get(p, r);
                    let aqr = a.get(q, r);
                    a.set(p, r, c * apr - s * aqr);
                    a.set(q, r, s * apr + c * aqr);
                }
                for r in 0..n {
                    let vrp = v.get(r, p);
                    let vrq = v.get(r, q);
                    v.set(r, p, c * vrp - s * vrq);
                    v.set(r, q, s * vrp + c * vrq);
                }
            }
        }
    }
    if !converged {
        return Err(HtError::SvdNoConvergence {
            rows: n,
            cols: n,
            residual: off.to_f64_lossy(),
            max_abs: m.max_abs().to_f64_lossy(),
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| {
        a.get(x, x)
            .partial_cmp(&a.get(y, y))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let eigenvalues = order.iter().map(|&i| a.get(i, i)).collect();
    let eigenvectors = DenseMatrix::from_fn(n, n, |r, c| v.get(r, order[c]));
    Ok(SymmetricEigen {
        eigenvalues,
        eigenvectors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lcg_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix<f64> {
        let mut state = seed;
        DenseMatrix::from_fn(rows, cols, |_, _| {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        })
    }

    #[test]
    fn svd_reconstructs_tall_and_wide() {
        for &(r, c) in &[(5, 3), (3, 5), (4, 4), (1, 6)] {
            let m = lcg_matrix(r, c, 7 + r as u64);
            let d = svd(&m).unwrap();
            let back = d.truncated(r.min(c));
            for i in 0..r {
                for j in 0..c {
                    assert!((back.get(i, j) - m.get(i, j)).abs() < 1e-13);
                }
            }
            assert!(d.singular_values.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn eigen_of_diagonal_and_indefinite() {
        let m = DenseMatrix::from_diagonal(&[3.0, -1.0, 2.0]);
        let e = symmetric_eigen(&m).unwrap();
        assert_eq!(e.eigenvalues, vec![-1.0, 2.0, 3.0]);

        let m = DenseMatrix::from_row_major(2, 2, vec![0.0f64, 1.0, 1.0, 0.0]).unwrap();
        let e = symmetric_eigen(&m).unwrap();
        assert!((e.eigenvalues[0] + 1.0).abs() < 1e-15);
        assert!((e.eigenvalues[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gram_block_matches_matmul() {
        let a = lcg_matrix(6, 4, 3);
        let g = a.gram_block(0, 6, 2.0);
        let direct = a.transpose().matmul(&a).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert!((g.get(i, j) - direct.get(i, j) / 2.0).abs() < 1e-14);
            }
        }
    }
}
