#![allow(dead_code)]

use sparse_ht::datagen::{generate_instance, InstanceSpec, ModelKind};
use sparse_ht::models::LinearRegression;

/// Small linear instance (nb x d, k* nonzeros) split into `batches`.
pub fn linear(
    nb: usize,
    d: usize,
    k_star: usize,
    c: f64,
    sigma: f64,
    batches: usize,
    seed: u64,
) -> LinearRegression<f64> {
    let spec = InstanceSpec {
        model: ModelKind::Linear,
        samples: nb,
        dim: d,
        cols: None,
        true_sparsity: k_star,
        correlation: c,
        noise_std: sigma,
        corruption: None,
        seed,
    };
    generate_instance::<f64>(&spec)
        .unwrap()
        .linear_problem(batches)
        .unwrap()
}

pub fn bits(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}

pub fn nnz(v: &[f64]) -> usize {
    v.iter().filter(|x| **x != 0.0).count()
}
