mod common;

use common::linear;
use sparse_ht::datagen::{generate_instance, CorruptionSpec, InstanceSpec, ModelKind};
use sparse_ht::linalg::DenseMatrix;
use sparse_ht::models::{make_linear_regression, LinearRegressionData, QuadraticProblem};
use sparse_ht::verify::{
    best_k_support_distance, check_ht_lemma, check_ht_lemma_cases, check_svt_diagonal_reduction, check_svt_lemma,
    check_vr_unbiasedness, estimate_rsc_rss, expansion_factor, ht_dropped_distance, ht_lemma_sides, svt_lemma_sides,
    vr_moments, RscStatus,
};

#[test]
fn expansion_factor_values() {
    assert_eq!(expansion_factor(2, 1), 3.0);
    assert_eq!(expansion_factor(5, 1), 2.0);
    assert_eq!(expansion_factor(13, 4), 1.0 + 4.0 / 3.0);
}

#[test]
fn lemma_sides_by_hand() {
    // H_2 keeps the two unit entries and drops the support of θ*
    let (lhs, rhs) = ht_lemma_sides(&[0.0, 1.0, 1.0], &[1.0, 0.0, 0.0], 2).unwrap();
    assert_eq!((lhs, rhs), (3.0, 9.0));
    // θ already 2-sparse: H_2 is the identity
    let (lhs, rhs) = ht_lemma_sides(&[0.5, 0.0, 2.0], &[1.0, 0.0, 0.0], 2).unwrap();
    assert_eq!((lhs, rhs), (4.25, 3.0 * 4.25));
    assert!(ht_lemma_sides(&[1.0, 1.0], &[1.0, 1.0], 2).is_err());
}

#[test]
fn ht_lemma_holds_on_random_families() {
    let report = check_ht_lemma(3000, 12, 7).unwrap();
    assert_eq!(report.trials, 3000);
    assert_eq!(report.violations, 0, "{:?}", report.worst_case);
    assert_eq!(report.oracle_mismatches, 0);
    assert!(report.worst_ratio <= 1.0);
    assert!(check_ht_lemma(10, 17, 0).is_err());
}

#[test]
fn ht_is_the_best_support_with_ties() {
    let theta = [1.0, -1.0, 1.0, 0.5, -0.5];
    for k in 1..=5 {
        assert_eq!(
            ht_dropped_distance(&theta, k).unwrap(),
            best_k_support_distance(&theta, k).unwrap()
        );
    }
    let report = check_ht_lemma_cases(&[
        (theta.to_vec(), vec![0.0, 0.0, 0.0, 0.0, 2.0], 2),
        (vec![3.0, 0.0, 0.0], vec![3.0, 0.0, 0.0], 2),
    ])
    .unwrap();
    assert_eq!(report.violations, 0);
    assert_eq!(report.oracle_mismatches, 0);
}

#[test]
fn svt_lemma_holds_and_reduces_to_vectors() {
    let report = check_svt_lemma(300, 6, 3).unwrap();
    assert_eq!(report.violations, 0, "{:?}", report.worst_case);
    assert!(report.worst_ratio <= 1.0);
    let diff = check_svt_diagonal_reduction(100, 8, 4).unwrap();
    assert!(diff <= 1e-12, "{diff}");

    // diagonal matrices give exactly the vector inequality
    let theta = DenseMatrix::from_diagonal(&[0.0, 1.0, 1.0]);
    let star = DenseMatrix::from_diagonal(&[1.0, 0.0, 0.0]);
    let (lhs, rhs) = svt_lemma_sides(&theta, &star, 2, 1).unwrap();
    assert!((lhs - 3.0).abs() < 1e-12 && (rhs - 9.0).abs() < 1e-12);
}

#[test]
fn vr_gradient_is_unbiased() {
    let p = linear(60, 20, 3, 0.3, 1.0, 12, 2);
    let report = check_vr_unbiasedness(&p, 5, 20, None, 9).unwrap();
    assert!(report.max_deviation <= 1e-12, "{}", report.max_deviation);
    assert!(report.rho_plus.unwrap() > 0.0);
    assert!(report.max_second_moment_ratio.is_some());

    // at θ = θ̃ every g_i equals μ̃, so the second moment is ‖μ̃_I‖²
    let theta = vec![0.3; 20];
    let all: Vec<usize> = (0..20).collect();
    let (dev, second) = vr_moments(&p, &theta, &theta, &all).unwrap();
    let g = sparse_ht::full_gradient(&p, &sparse_ht::Parameter::from_vec(theta).unwrap()).unwrap();
    assert!(dev <= 1e-14);
    assert!((second - g.iter().map(|v| v * v).sum::<f64>()).abs() <= 1e-12 * second.max(1.0));

    let too_many = linear(202, 5, 1, 0.0, 0.0, 101, 1);
    assert!(check_vr_unbiasedness(&too_many, 2, 1, None, 0).is_err());
}

#[test]
fn identity_quadratic_has_unit_constants() {
    let centers: Vec<Vec<f64>> = (0..5)
        .map(|i| (0..10).map(|j| (i * j) as f64 * 0.1).collect())
        .collect();
    let p = QuadraticProblem::isotropic(&centers).unwrap();
    let est = estimate_rsc_rss(&p, 4, 30, 1).unwrap();
    assert!((est.rho_minus - 1.0).abs() < 1e-9);
    assert!((est.rho_plus - 1.0).abs() < 1e-9);
    assert!((est.kappa.unwrap() - 1.0).abs() < 1e-9);
    assert_eq!(est.hessian_min_eigenvalue.map(|v| (v - 1.0).abs() < 1e-12), Some(true));
    assert_eq!(est.status, RscStatus::Valid);
}

#[test]
fn scaling_the_design_scales_curvature_quadratically() {
    let inst = generate_instance::<f64>(&InstanceSpec {
        samples: 120,
        dim: 30,
        true_sparsity: 3,
        ..InstanceSpec::standard(0.2, 0.5, 5)
    })
    .unwrap();
    let base = inst.linear_problem(12).unwrap();
    let mut scaled_design = inst.design.clone();
    scaled_design.as_mut_slice().iter_mut().for_each(|v| *v *= 4.0);
    let scaled = make_linear_regression(LinearRegressionData {
        design: scaled_design,
        responses: inst.responses.clone(),
        batches: 12,
        batch_size: 10,
    })
    .unwrap();
    let a = estimate_rsc_rss(&base, 6, 25, 3).unwrap();
    let b = estimate_rsc_rss(&scaled, 6, 25, 3).unwrap();
    assert!((b.rho_minus / a.rho_minus - 16.0).abs() < 1e-8);
    assert!((b.rho_plus / a.rho_plus - 16.0).abs() < 1e-8);
    assert!((b.kappa.unwrap() - a.kappa.unwrap()).abs() < 1e-8 * a.kappa.unwrap());
}

#[test]
fn missing_data_is_not_strongly_convex_in_full_dimension() {
    let spec = InstanceSpec {
        model: ModelKind::Corrupted,
        samples: 20,
        dim: 40,
        cols: None,
        true_sparsity: 3,
        correlation: 0.0,
        noise_std: 0.5,
        corruption: Some(CorruptionSpec::Missing { rho: 0.3 }),
        seed: 11,
    };
    let p = generate_instance::<f64>(&spec).unwrap().corrupted_problem(4).unwrap();
    let est = estimate_rsc_rss(&p, 40, 10, 2).unwrap();
    assert_eq!(est.status, RscStatus::RscViolated);
    assert!(est.hessian_min_eigenvalue.unwrap() < 0.0);
    assert!(est.kappa.is_none());
}

#[test]
fn rsc_rejects_bad_arguments() {
    let p = linear(20, 10, 2, 0.0, 0.0, 2, 1);
    assert!(estimate_rsc_rss(&p, 0, 5, 0).is_err());
    assert!(estimate_rsc_rss(&p, 11, 5, 0).is_err());
    assert!(estimate_rsc_rss(&p, 3, 0, 0).is_err());
}
