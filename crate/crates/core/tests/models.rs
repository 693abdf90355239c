mod common;

use common::linear;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sparse_ht::datagen::{
    apply_corruption, gen_equicorrelated_design, generate_instance, CorruptionSpec, InstanceSpec, ModelKind,
};
use sparse_ht::linalg::DenseMatrix;
use sparse_ht::models::{
    logistic_loss, make_corrupted_quadratic, make_linear_regression, DesignCorrection, LinearRegressionData,
    QuadraticProblem,
};
use sparse_ht::{svt, Objective};

fn fd_check<P: Objective<f64>>(p: &P, points: usize, scale: f64, seed: u64) {
    let d = p.shape().len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = 1e-6;
    let mut g = vec![0.0; d];
    for _ in 0..points {
        let theta: Vec<f64> = (0..d).map(|_| scale * (rng.random::<f64>() * 2.0 - 1.0)).collect();
        let i = rng.random_range(0..p.num_components());
        for full in [false, true] {
            let f = |t: &[f64]| if full { p.value(t) } else { p.component_value(i, t) };
            if full {
                p.gradient_into(&theta, &mut g);
            } else {
                p.component_gradient_into(i, &theta, &mut g);
            }
            let mut t = theta.clone();
            let mut diff2 = 0.0;
            for j in 0..d {
                t[j] = theta[j] + h;
                let up = f(&t);
                t[j] = theta[j] - h;
                let down = f(&t);
                t[j] = theta[j];
                diff2 += ((up - down) / (2.0 * h) - g[j]).powi(2);
            }
            let gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(
                diff2.sqrt() <= 1e-5 * gnorm.max(1.0),
                "fd mismatch {} vs |g| {gnorm}",
                diff2.sqrt()
            );
        }
    }
}

fn instance(model: ModelKind, nb: usize, d: usize, k: usize, seed: u64) -> InstanceSpec {
    InstanceSpec {
        model,
        samples: nb,
        dim: d,
        cols: None,
        true_sparsity: k,
        correlation: 0.3,
        noise_std: 0.5,
        corruption: None,
        seed,
    }
}

#[test]
fn linear_gradient_matches_finite_differences() {
    fd_check(&linear(40, 12, 3, 0.3, 0.5, 8, 1), 10, 2.0, 11);
}

#[test]
fn logistic_gradient_matches_finite_differences() {
    let inst = generate_instance::<f64>(&instance(ModelKind::Logistic, 60, 10, 3, 2)).unwrap();
    fd_check(&inst.logistic_problem(6, 10.0).unwrap(), 10, 1.5, 12);
}

#[test]
fn lowrank_gradient_matches_finite_differences() {
    let spec = InstanceSpec {
        model: ModelKind::LowRank,
        cols: Some(4),
        ..instance(ModelKind::LowRank, 30, 5, 2, 3)
    };
    let inst = generate_instance::<f64>(&spec).unwrap();
    fd_check(&inst.lowrank_problem(5).unwrap(), 10, 1.0, 13);
}

#[test]
fn corrected_quadratic_gradient_matches_finite_differences() {
    let spec = InstanceSpec {
        corruption: Some(CorruptionSpec::Missing { rho: 0.2 }),
        ..instance(ModelKind::Corrupted, 40, 8, 2, 4)
    };
    let inst = generate_instance::<f64>(&spec).unwrap();
    fd_check(&inst.corrupted_problem(4).unwrap(), 10, 2.0, 14);
}

/// `log(1 + x)` for `x ∈ [0, 1]` via `2 atanh(x / (2 + x))`.
fn ln1p_series(x: f64) -> f64 {
    let u = x / (2.0 + x);
    let (mut term, mut sum, mut k) = (u, 0.0, 0);
    while term.abs() > 1e-300 && k < 200 {
        sum += term / (2 * k + 1) as f64;
        term *= u * u;
        k += 1;
    }
    2.0 * sum
}

#[test]
fn logistic_loss_matches_series_oracle_over_wide_margins() {
    for step in 0..=400 {
        let z = -50.0 + 0.25 * step as f64;
        for y in [0.0, 1.0] {
            // loss = log(1 + e^{±z}) with the sign set by the label
            let m = if y == 1.0 { -z } else { z };
            let oracle = m.max(0.0) + ln1p_series((-m.abs()).exp());
            let got = logistic_loss(z, y);
            assert!(
                (got - oracle).abs() <= 1e-14 * oracle.max(1e-300) + 1e-300,
                "z={z} y={y}: {got} vs {oracle}"
            );
            assert!(got.is_finite() && got > 0.0);
        }
    }
}

#[test]
fn lowrank_equals_vectorized_regression() {
    let spec = InstanceSpec {
        model: ModelKind::LowRank,
        cols: Some(5),
        ..instance(ModelKind::LowRank, 48, 6, 2, 5)
    };
    let inst = generate_instance::<f64>(&spec).unwrap();
    let lowrank = inst.lowrank_problem(8).unwrap();
    let flat = make_linear_regression(LinearRegressionData {
        design: inst.design.clone(),
        responses: inst.responses.clone(),
        batches: 8,
        batch_size: 6,
    })
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let theta: Vec<f64> = (0..30).map(|_| rng.random::<f64>() - 0.5).collect();
    assert_eq!(lowrank.value(&theta), flat.value(&theta));
    let (mut a, mut b) = (vec![0.0; 30], vec![0.0; 30]);
    for i in 0..8 {
        lowrank.component_gradient_into(i, &theta, &mut a);
        flat.component_gradient_into(i, &theta, &mut b);
        assert_eq!(a, b);
    }
    let truth = lowrank.ground_truth().unwrap();
    assert!(truth.shape().is_matrix());
}

#[test]
fn svt_matches_nalgebra_eckart_young() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for (rows, cols) in [(6, 4), (4, 7), (8, 8), (1, 5)] {
        let vals: Vec<f64> = (0..rows * cols).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
        let m = DenseMatrix::from_row_major(rows, cols, vals.clone()).unwrap();
        let na = DMatrix::from_row_slice(rows, cols, &vals);
        let svd = na.clone().svd(true, true);
        let mut sigma: Vec<f64> = svd.singular_values.iter().copied().collect();
        sigma.sort_by(|a, b| b.total_cmp(a));
        for k in 1..=rows.min(cols) {
            let ours = svt(&m, k).unwrap();
            let tail: f64 = sigma[k..].iter().map(|s| s * s).sum();
            let resid: f64 = (0..rows)
                .flat_map(|i| (0..cols).map(move |j| (i, j)))
                .map(|(i, j)| (ours.get(i, j) - vals[i * cols + j]).powi(2))
                .sum();
            assert!((resid - tail).abs() <= 1e-10 * (1.0 + tail), "k={k}: {resid} vs {tail}");
            let rank = DMatrix::from_row_slice(rows, cols, ours.as_slice()).rank(1e-9);
            assert!(rank <= k);
        }
    }
}

#[test]
fn missing_data_gram_is_indefinite_when_underdetermined() {
    let spec = InstanceSpec {
        corruption: Some(CorruptionSpec::Missing { rho: 0.3 }),
        ..instance(ModelKind::Corrupted, 20, 40, 3, 7)
    };
    let inst = generate_instance::<f64>(&spec).unwrap();
    let p = inst.corrupted_problem(4).unwrap();
    let g = p.gamma_hat();
    let eig = DMatrix::from_row_slice(40, 40, g.as_slice()).symmetric_eigen();
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    assert!(min < 0.0, "smallest eigenvalue {min}");
}

#[test]
fn zero_missing_rate_is_least_squares() {
    let a = gen_equicorrelated_design::<f64>(30, 6, 0.2, 8).unwrap();
    let y: Vec<f64> = (0..30).map(|i| (i as f64 * 0.7).sin()).collect();
    let q = make_corrupted_quadratic(&a, &y, &DesignCorrection::Missing { rho: 0.0 }, 5).unwrap();
    let ls = make_linear_regression(LinearRegressionData {
        design: a,
        responses: y.clone(),
        batches: 5,
        batch_size: 6,
    })
    .unwrap();
    let offset = y.iter().map(|v| v * v).sum::<f64>() / 60.0;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..5 {
        let t: Vec<f64> = (0..6).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        assert!((q.value(&t) + offset - ls.value(&t)).abs() <= 1e-12);
        let (mut g1, mut g2) = (vec![0.0; 6], vec![0.0; 6]);
        q.gradient_into(&t, &mut g1);
        ls.gradient_into(&t, &mut g2);
        for (x, z) in g1.iter().zip(&g2) {
            assert!((x - z).abs() <= 1e-12);
        }
    }
}

#[test]
fn corrected_gram_is_unbiased_over_corruptions() {
    let a = gen_equicorrelated_design::<f64>(50, 4, 0.0, 9).unwrap();
    let clean = a.gram_block(0, 50, 50.0);
    let y = vec![0.0; 50];
    let specs = [
        CorruptionSpec::Missing { rho: 0.25 },
        CorruptionSpec::AdditiveDiagonal { std: vec![0.5; 4] },
        CorruptionSpec::MultiplicativeBernoulli { keep: 0.8 },
    ];
    for spec in specs {
        let reps = 2000;
        let mut mean = [0.0; 16];
        for r in 0..reps {
            let (z, corr) = apply_corruption(&a, &spec, 1000 + r).unwrap();
            let q = make_corrupted_quadratic(&z, &y, &corr, 1).unwrap();
            for (m, g) in mean.iter_mut().zip(q.gamma_hat().as_slice()) {
                *m += g / reps as f64;
            }
        }
        let worst = mean
            .iter()
            .zip(clean.as_slice())
            .map(|(m, c)| (m - c).abs())
            .fold(0.0, f64::max);
        assert!(worst < 0.03, "{spec:?}: deviation {worst}");
    }
}

#[test]
fn linear_value_at_zero_is_half_mean_square_response() {
    let p = linear(40, 10, 2, 0.0, 1.0, 4, 10);
    let inst = generate_instance::<f64>(&InstanceSpec {
        correlation: 0.0,
        noise_std: 1.0,
        ..instance(ModelKind::Linear, 40, 10, 2, 10)
    })
    .unwrap();
    let want = inst.responses.iter().map(|v| v * v).sum::<f64>() / 80.0;
    assert!((p.value(&[0.0; 10]) - want).abs() <= 1e-12 * want);
}

#[test]
fn isotropic_quadratic_has_identity_hessian() {
    let p = QuadraticProblem::isotropic(&[vec![1.0, 2.0], vec![3.0, -1.0]]).unwrap();
    let h = p.hessian().unwrap();
    assert_eq!(h.as_slice(), &[1.0, 0.0, 0.0, 1.0]);
    // minimizer is the mean of the centres
    let mut g = vec![0.0; 2];
    p.gradient_into(&[2.0, 0.5], &mut g);
    assert_eq!(g, vec![0.0, 0.0]);
}

#[test]
fn single_precision_tracks_double() {
    let spec = instance(ModelKind::Linear, 40, 10, 3, 11);
    let p64 = generate_instance::<f64>(&spec).unwrap().linear_problem(4).unwrap();
    let p32 = generate_instance::<f32>(&spec).unwrap().linear_problem(4).unwrap();
    let t64 = vec![0.3; 10];
    let t32 = vec![0.3f32; 10];
    let (mut g64, mut g32) = (vec![0.0; 10], vec![0.0f32; 10]);
    p64.gradient_into(&t64, &mut g64);
    p32.gradient_into(&t32, &mut g32);
    for (a, b) in g64.iter().zip(&g32) {
        assert!((a - f64::from(*b)).abs() <= 1e-4 * a.abs().max(1.0));
    }
}
