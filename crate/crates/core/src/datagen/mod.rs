//! Synthetic instance generation, design corruption, the libsvm loader and
//! the on-disk instance container.
//!
//! Every generator is a pure function of its arguments. Randomness comes
//! from `ChaCha8Rng::seed_from_u64(seed)`; composite generators derive one
//! sub-seed per ingredient with [`sub_seed`], so for example the design and
//! the noise of an instance never share a stream.

mod container;
mod libsvm;

pub use container::{read_instance, sidecar_path, write_instance, CONTAINER_MAGIC, CONTAINER_VERSION};
pub use libsvm::{load_libsvm, parse_libsvm, write_libsvm, LibsvmOptions};

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::{symmetric_eigen, DenseMatrix};
use crate::models::{
    make_corrupted_quadratic, make_linear_regression, make_logistic, make_lowrank, CorruptedQuadratic,
    DesignCorrection, GlmData, LinearRegression, LinearRegressionData, Logistic, LowRank, LowRankData,
};
use crate::param::{Parameter, Shape};
use crate::scalar::Real;
use crate::solvers::rng_for;

/// Derives an independent seed for ingredient `tag` of a composite
/// generator: the first output of ChaCha stream `tag` keyed by `seed`.
pub fn sub_seed(seed: u64, tag: u64) -> u64 {
    rng_for(seed, tag).next_u64()
}

const TAG_DESIGN: u64 = 1;
const TAG_TRUTH: u64 = 2;
const TAG_NOISE: u64 = 3;
const TAG_CORRUPTION: u64 = 4;
const TAG_FACTORS: u64 = 5;

fn normal<S: Real, R: Rng>(rng: &mut R) -> S {
    S::lit(rng.sample::<f64, _>(StandardNormal))
}

/// `nb x d` design with i.i.d. rows `N(0, Σ)`, `Σ_ii = 1`, `Σ_ij = c`,
/// sampled as `√(1−c)·g_ij + √c·h_i`.
pub fn gen_equicorrelated_design<S: Real>(nb: usize, d: usize, c: f64, seed: u64) -> Result<DenseMatrix<S>> {
    if !(0.0..1.0).contains(&c) {
        return invalid(format!("correlation {c} must lie in [0, 1)"));
    }
    let mut rng = rng_for(seed, 0);
    let (a, b) = ((1.0 - c).sqrt(), c.sqrt());
    let mut data = Vec::with_capacity(nb * d);
    for _ in 0..nb {
        let h: f64 = rng.sample(StandardNormal);
        for _ in 0..d {
            let g: f64 = rng.sample(StandardNormal);
            data.push(S::lit(a * g + b * h));
        }
    }
    DenseMatrix::from_row_major(nb, d, data)
}

/// Length-`d` vector with exactly `k_star` nonzeros at uniformly chosen
/// positions, values uniform on `(−2, 2) \ {0}`.
pub fn gen_sparse_truth<S: Real>(d: usize, k_star: usize, seed: u64) -> Result<Vec<S>> {
    if k_star == 0 || k_star > d {
        return invalid(format!("true sparsity {k_star} must lie in 1..={d}"));
    }
    let mut rng = rng_for(seed, 0);
    let mut positions = rand::seq::index::sample(&mut rng, d, k_star).into_vec();
    positions.sort_unstable();
    let mut theta = vec![S::zero(); d];
    for p in positions {
        let v = loop {
            let v: f64 = rng.random_range(-2.0..2.0);
            if v != 0.0 && v.abs() < 2.0 {
                break v;
            }
        };
        theta[p] = S::lit(v);
    }
    Ok(theta)
}

/// `y = Aθ* + σg` with `g` i.i.d. standard normal.
pub fn gen_linear_responses<S: Real>(a: &DenseMatrix<S>, theta: &[S], sigma: f64, seed: u64) -> Result<Vec<S>> {
    if theta.len() != a.cols() {
        return invalid("truth length does not match the design width");
    }
    if !(sigma >= 0.0) {
        return invalid("noise level must be nonnegative");
    }
    let mut y = a.matvec(theta);
    if sigma > 0.0 {
        let mut rng = rng_for(seed, 0);
        let s = S::lit(sigma);
        for v in &mut y {
            *v += s * normal::<S, _>(&mut rng);
        }
    }
    Ok(y)
}

/// Labels `y_ℓ ~ Bernoulli(sigmoid(A_ℓθ*))` in `{0, 1}`.
pub fn gen_logistic_responses<S: Real>(a: &DenseMatrix<S>, theta: &[S], seed: u64) -> Result<Vec<S>> {
    if theta.len() != a.cols() {
        return invalid("truth length does not match the design width");
    }
    let mut rng = rng_for(seed, 0);
    Ok(a.matvec(theta)
        .into_iter()
        .map(|z| {
            let p = crate::models::sigmoid(z.to_f64_lossy());
            let u: f64 = rng.random();
            if u < p {
                S::one()
            } else {
                S::zero()
            }
        })
        .collect())
}

/// Low-rank sensing instance: `Θ* = UVᵀ` with `U` (`rows x k*`) and `V`
/// (`cols x k*`) entries `N(0, 1/√k*)`, standard Gaussian measurement
/// matrices, and `y_ℓ = ⟨A_ℓ, Θ*⟩ + σg_ℓ`.
///
/// Returns the flattened measurements (column-major `vec(A_ℓ)` per row),
/// the responses and `Θ*`.
pub fn gen_lowrank_instance<S: Real>(
    rows: usize,
    cols: usize,
    rank: usize,
    nb: usize,
    sigma: f64,
    seed: u64,
) -> Result<(DenseMatrix<S>, Vec<S>, Parameter<S>)> {
    if rank == 0 || rank > rows.min(cols) {
        return invalid(format!("rank {rank} must lie in 1..={}", rows.min(cols)));
    }
    let mut rng = rng_for(sub_seed(seed, TAG_FACTORS), 0);
    let std = (rank as f64).powf(-0.25);
    let mut factor = |r: usize| -> DenseMatrix<f64> {
        DenseMatrix::from_fn(r, rank, |_, _| std * rng.sample::<f64, _>(StandardNormal))
    };
    let u = factor(rows);
    let v = factor(cols);
    let theta = u.matmul(&v.transpose())?;
    let truth: Vec<S> = theta.to_col_major().into_iter().map(S::lit).collect();

    let measurements = gen_equicorrelated_design::<S>(nb, rows * cols, 0.0, sub_seed(seed, TAG_DESIGN))?;
    let y = gen_linear_responses(&measurements, &truth, sigma, sub_seed(seed, TAG_NOISE))?;
    let truth = Parameter::new(truth, Shape::Matrix { rows, cols })?;
    Ok((measurements, y, truth))
}

/// How an observed design is derived from the clean one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CorruptionSpec {
    /// Each entry independently zeroed with probability `rho`.
    Missing { rho: f64 },
    /// `Z = A + W` with independent `N(0, std_j²)` noise per column.
    AdditiveDiagonal { std: Vec<f64> },
    /// `Z = A + W` with rows of `W` drawn from `N(0, Σ_W)`.
    AdditiveFull { covariance: DenseMatrix<f64> },
    /// `Z = A ⊙ U` with i.i.d. Bernoulli(`keep`) entries of `U`.
    MultiplicativeBernoulli { keep: f64 },
}

impl CorruptionSpec {
    /// The correction that makes the corrected quadratic unbiased for this
    /// corruption.
    pub fn correction<S: Real>(&self, d: usize) -> Result<DesignCorrection<S>> {
        Ok(match self {
            CorruptionSpec::Missing { rho } => DesignCorrection::Missing { rho: S::lit(*rho) },
            CorruptionSpec::AdditiveDiagonal { std } => {
                if std.len() != d {
                    return invalid("one noise std per column is required");
                }
                let var: Vec<S> = std.iter().map(|s| S::lit(s * s)).collect();
                DesignCorrection::Additive {
                    noise_covariance: DenseMatrix::from_diagonal(&var),
                }
            }
            CorruptionSpec::AdditiveFull { covariance } => DesignCorrection::Additive {
                noise_covariance: DenseMatrix::from_fn(covariance.rows(), covariance.cols(), |i, j| {
                    S::lit(covariance.get(i, j))
                }),
            },
            CorruptionSpec::MultiplicativeBernoulli { keep } => DesignCorrection::bernoulli_mask(d, S::lit(*keep)),
        })
    }

    fn validate(&self, d: usize) -> Result<()> {
        match self {
            CorruptionSpec::Missing { rho } if !(0.0..1.0).contains(rho) => {
                invalid("missing-data rate must lie in [0, 1)")
            }
            CorruptionSpec::AdditiveDiagonal { std } if std.len() != d || std.iter().any(|s| !(*s >= 0.0)) => {
                invalid("additive noise needs one nonnegative std per column")
            }
            CorruptionSpec::AdditiveFull { covariance } if covariance.rows() != d || covariance.cols() != d => {
                invalid("noise covariance must be d x d")
            }
            CorruptionSpec::MultiplicativeBernoulli { keep } if !(*keep > 0.0 && *keep <= 1.0) => {
                invalid("keep probability must lie in (0, 1]")
            }
            _ => Ok(()),
        }
    }
}

/// Applies `spec` to a clean design. Returns the observed design and the
/// matching correction for [`make_corrupted_quadratic`].
pub fn apply_corruption<S: Real>(
    a: &DenseMatrix<S>,
    spec: &CorruptionSpec,
    seed: u64,
) -> Result<(DenseMatrix<S>, DesignCorrection<S>)> {
    let d = a.cols();
    spec.validate(d)?;
    let correction = spec.correction(d)?;
    let mut rng = rng_for(seed, 0);
    let mut z = a.clone();
    match spec {
        CorruptionSpec::Missing { rho } => {
            if *rho > 0.0 {
                for v in z.as_mut_slice() {
                    if rng.random::<f64>() < *rho {
                        *v = S::zero();
                    }
                }
            }
        }
        CorruptionSpec::AdditiveDiagonal { std } => {
            for row in z.as_mut_slice().chunks_exact_mut(d) {
                for (v, s) in row.iter_mut().zip(std) {
                    let g: f64 = rng.sample(StandardNormal);
                    if *s > 0.0 {
                        *v += S::lit(s * g);
                    }
                }
            }
        }
        CorruptionSpec::AdditiveFull { covariance } => {
            let root = psd_sqrt(covariance)?;
            let mut g = vec![0.0; d];
            for row in z.as_mut_slice().chunks_exact_mut(d) {
                g.iter_mut().for_each(|x| *x = rng.sample(StandardNormal));
                for (j, v) in row.iter_mut().enumerate() {
                    let w: f64 = root.row(j).iter().zip(&g).map(|(r, x)| r * x).sum();
                    if w != 0.0 {
                        *v += S::lit(w);
                    }
                }
            }
        }
        CorruptionSpec::MultiplicativeBernoulli { keep } => {
            if *keep < 1.0 {
                for v in z.as_mut_slice() {
                    if rng.random::<f64>() >= *keep {
                        *v = S::zero();
                    }
                }
            }
        }
    }
    Ok((z, correction))
}

/// Symmetric square root of a PSD matrix (negative eigenvalues clipped).
fn psd_sqrt(m: &DenseMatrix<f64>) -> Result<DenseMatrix<f64>> {
    let eig = symmetric_eigen(m)?;
    let n = m.rows();
    let v = &eig.eigenvectors;
    let roots: Vec<f64> = eig.eigenvalues.iter().map(|l| l.max(0.0).sqrt()).collect();
    Ok(DenseMatrix::from_fn(n, n, |i, j| {
        (0..n).map(|l| v.get(i, l) * roots[l] * v.get(j, l)).sum()
    }))
}

/// Which estimation problem an instance feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Linear,
    Logistic,
    LowRank,
    Corrupted,
}

/// Everything needed to regenerate an instance bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub model: ModelKind,
    /// Total sample count `nb`.
    pub samples: usize,
    /// Feature dimension `d` (matrix rows for low-rank instances).
    pub dim: usize,
    /// Matrix columns for low-rank instances.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cols: Option<usize>,
    /// `k*`: nonzeros of the truth, or its rank.
    pub true_sparsity: usize,
    /// Equicorrelation `c` of the design.
    pub correlation: f64,
    /// Noise level `σ` (ignored for logistic labels).
    pub noise_std: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corruption: Option<CorruptionSpec>,
    pub seed: u64,
}

impl InstanceSpec {
    /// The desk-scale linear instance: `nb = 1000`, `d = 2000`, `k* = 20`.
    pub fn standard(correlation: f64, noise_std: f64, seed: u64) -> Self {
        Self {
            model: ModelKind::Linear,
            samples: 1000,
            dim: 2000,
            cols: None,
            true_sparsity: 20,
            correlation,
            noise_std,
            corruption: None,
            seed,
        }
    }

    pub fn parameter_shape(&self) -> Shape {
        match (self.model, self.cols) {
            (ModelKind::LowRank, Some(cols)) => Shape::Matrix { rows: self.dim, cols },
            _ => Shape::Vector(self.dim),
        }
    }
}

/// A generated (or loaded) instance with its planted truth.
///
/// For low-rank instances `design` holds one flattened measurement matrix
/// per row; for corrupted instances it holds the observed design `Z`.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticInstance<S> {
    pub spec: InstanceSpec,
    pub design: DenseMatrix<S>,
    pub responses: Vec<S>,
    pub truth: Parameter<S>,
}

/// Generates the instance described by `spec`.
pub fn generate_instance<S: Real>(spec: &InstanceSpec) -> Result<SyntheticInstance<S>> {
    if spec.samples == 0 || spec.dim == 0 {
        return invalid("sample count and dimension must be positive");
    }
    let seed = spec.seed;
    match spec.model {
        ModelKind::LowRank => {
            let Some(cols) = spec.cols else {
                return invalid("low-rank instances need a column count");
            };
            let (design, responses, truth) =
                gen_lowrank_instance(spec.dim, cols, spec.true_sparsity, spec.samples, spec.noise_std, seed)?;
            Ok(SyntheticInstance {
                spec: spec.clone(),
                design,
                responses,
                truth,
            })
        }
        ModelKind::Linear | ModelKind::Logistic | ModelKind::Corrupted => {
            let truth = gen_sparse_truth::<S>(spec.dim, spec.true_sparsity, sub_seed(seed, TAG_TRUTH))?;
            let clean =
                gen_equicorrelated_design::<S>(spec.samples, spec.dim, spec.correlation, sub_seed(seed, TAG_DESIGN))?;
            let responses = if spec.model == ModelKind::Logistic {
                gen_logistic_responses(&clean, &truth, sub_seed(seed, TAG_NOISE))?
            } else {
                gen_linear_responses(&clean, &truth, spec.noise_std, sub_seed(seed, TAG_NOISE))?
            };
            let design = match (&spec.model, &spec.corruption) {
                (ModelKind::Corrupted, Some(c)) => apply_corruption(&clean, c, sub_seed(seed, TAG_CORRUPTION))?.0,
                (ModelKind::Corrupted, None) => return invalid("corrupted instances need a corruption spec"),
                _ => clean,
            };
            Ok(SyntheticInstance {
                spec: spec.clone(),
                design,
                responses,
                truth: Parameter::new(truth, Shape::Vector(spec.dim))?,
            })
        }
    }
}

impl<S: Real> SyntheticInstance<S> {
    pub fn num_samples(&self) -> usize {
        self.design.rows()
    }

    pub fn linear_problem(&self, batches: usize) -> Result<LinearRegression<S>> {
        let b = self.batch_size(batches)?;
        make_linear_regression(LinearRegressionData {
            design: self.design.clone(),
            responses: self.responses.clone(),
            batches,
            batch_size: b,
        })?
        .with_truth(self.truth.clone())
    }

    pub fn logistic_problem(&self, batches: usize, radius: S) -> Result<Logistic<S>> {
        let b = self.batch_size(batches)?;
        make_logistic(GlmData {
            design: self.design.clone(),
            labels: self.responses.clone(),
            batches,
            batch_size: b,
            radius,
        })?
        .with_truth(self.truth.clone())
    }

    pub fn lowrank_problem(&self, batches: usize) -> Result<LowRank<S>> {
        let Shape::Matrix { rows, cols } = self.truth.shape() else {
            return invalid("instance does not carry a matrix truth");
        };
        let b = self.batch_size(batches)?;
        make_lowrank(LowRankData {
            rows,
            cols,
            measurements: self.design.clone(),
            responses: self.responses.clone(),
            batches,
            batch_size: b,
        })?
        .with_truth(self.truth.clone())
    }

    pub fn corrupted_problem(&self, batches: usize) -> Result<CorruptedQuadratic<S>> {
        let Some(spec) = &self.spec.corruption else {
            return invalid("instance carries no corruption spec");
        };
        let correction = spec.correction(self.design.cols())?;
        make_corrupted_quadratic(&self.design, &self.responses, &correction, batches)?.with_truth(self.truth.clone())
    }

    fn batch_size(&self, batches: usize) -> Result<usize> {
        let nb = self.num_samples();
        if batches == 0 || !nb.is_multiple_of(batches) {
            return invalid(format!("{nb} samples cannot be split into {batches} equal batches"));
        }
        Ok(nb / batches)
    }
}
