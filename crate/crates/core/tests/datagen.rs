use std::io::Cursor;

use proptest::prelude::*;
use sparse_ht::datagen::{
    apply_corruption, gen_equicorrelated_design, gen_linear_responses, gen_sparse_truth, generate_instance,
    parse_libsvm, read_instance, sidecar_path, sub_seed, write_instance, write_libsvm, CorruptionSpec, InstanceSpec,
    LibsvmOptions, ModelKind,
};
use sparse_ht::linalg::DenseMatrix;
use sparse_ht::{HtError, Shape};

fn column(m: &DenseMatrix<f64>, j: usize) -> Vec<f64> {
    (0..m.rows()).map(|i| m.get(i, j)).collect()
}

#[test]
fn equicorrelated_design_moments() {
    let c = 0.5;
    let a = gen_equicorrelated_design::<f64>(20000, 6, c, 1).unwrap();
    let n = a.rows() as f64;
    let cols: Vec<Vec<f64>> = (0..6).map(|j| column(&a, j)).collect();
    for x in &cols {
        let mean = x.iter().sum::<f64>() / n;
        let var = x.iter().map(|v| v * v).sum::<f64>() / n;
        assert!(mean.abs() < 0.03, "mean {mean}");
        assert!((var - 1.0).abs() < 0.04, "var {var}");
    }
    for i in 0..6 {
        for j in i + 1..6 {
            let cov = cols[i].iter().zip(&cols[j]).map(|(x, y)| x * y).sum::<f64>() / n;
            assert!((cov - c).abs() < 0.04, "cov({i},{j}) = {cov}");
        }
    }
    assert!(gen_equicorrelated_design::<f64>(5, 5, 1.0, 1).is_err());
}

#[test]
fn sparse_truth_has_exact_support_and_range() {
    for seed in 0..50 {
        let t = gen_sparse_truth::<f64>(100, 7, seed).unwrap();
        assert_eq!(t.iter().filter(|v| **v != 0.0).count(), 7);
        assert!(t.iter().all(|v| v.abs() < 2.0));
    }
    assert!(gen_sparse_truth::<f64>(5, 0, 0).is_err());
    assert!(gen_sparse_truth::<f64>(5, 6, 0).is_err());
}

#[test]
fn noise_has_requested_scale() {
    let a = gen_equicorrelated_design::<f64>(20000, 3, 0.0, 2).unwrap();
    let theta = vec![1.0, -1.0, 0.5];
    let clean = gen_linear_responses(&a, &theta, 0.0, 3).unwrap();
    assert_eq!(clean, a.matvec(&theta));
    let y = gen_linear_responses(&a, &theta, 2.0, 3).unwrap();
    let n = y.len() as f64;
    let var = y.iter().zip(&clean).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / n;
    assert!((var.sqrt() - 2.0).abs() < 0.05, "std {}", var.sqrt());
}

#[test]
fn logistic_labels_follow_the_link() {
    let spec = InstanceSpec {
        model: ModelKind::Logistic,
        samples: 20000,
        dim: 1,
        cols: None,
        true_sparsity: 1,
        correlation: 0.0,
        noise_std: 0.0,
        corruption: None,
        seed: 4,
    };
    let inst = generate_instance::<f64>(&spec).unwrap();
    assert!(inst.responses.iter().all(|y| *y == 0.0 || *y == 1.0));
    // E[y] = E[sigmoid(θ a)] = 1/2 by symmetry of a
    let mean = inst.responses.iter().sum::<f64>() / 20000.0;
    assert!((mean - 0.5).abs() < 0.02);
    // labels agree with the sign of the margin more often than not
    let agree = (0..20000)
        .filter(|&i| (inst.design.get(i, 0) * inst.truth.as_slice()[0] > 0.0) == (inst.responses[i] == 1.0))
        .count();
    assert!(agree > 10000);
}

#[test]
fn missing_fraction_matches_rate() {
    let a = gen_equicorrelated_design::<f64>(200, 100, 0.0, 5).unwrap();
    let (z, _) = apply_corruption(&a, &CorruptionSpec::Missing { rho: 0.3 }, 6).unwrap();
    let zeros = z.as_slice().iter().filter(|v| **v == 0.0).count() as f64 / 20000.0;
    assert!((zeros - 0.3).abs() < 0.015, "{zeros}");
    let kept = z.as_slice().iter().zip(a.as_slice()).filter(|(z, a)| *z == *a).count();
    assert_eq!(kept as f64 + zeros * 20000.0, 20000.0);
}

#[test]
fn additive_full_noise_has_target_covariance() {
    let cov = DenseMatrix::from_row_major(2, 2, vec![1.0, 0.6, 0.6, 0.5]).unwrap();
    let a = DenseMatrix::<f64>::zeros(40000, 2);
    let (z, _) = apply_corruption(
        &a,
        &CorruptionSpec::AdditiveFull {
            covariance: cov.clone(),
        },
        7,
    )
    .unwrap();
    let g = z.gram_block(0, 40000, 40000.0);
    for (x, y) in g.as_slice().iter().zip(cov.as_slice()) {
        assert!((x - y).abs() < 0.03, "{x} vs {y}");
    }
}

#[test]
fn instances_are_deterministic_in_the_seed() {
    let spec = InstanceSpec::standard(0.3, 1.0, 42);
    let small = InstanceSpec {
        samples: 50,
        dim: 80,
        true_sparsity: 5,
        ..spec
    };
    let a = generate_instance::<f64>(&small).unwrap();
    let b = generate_instance::<f64>(&small).unwrap();
    assert_eq!(a, b);
    let c = generate_instance::<f64>(&InstanceSpec {
        seed: 43,
        ..small.clone()
    })
    .unwrap();
    assert_ne!(a.design, c.design);
    assert_ne!(a.truth, c.truth);
    // ingredient seeds are distinct
    let tags: Vec<u64> = (1..=5).map(|t| sub_seed(42, t)).collect();
    for i in 0..5 {
        for j in i + 1..5 {
            assert_ne!(tags[i], tags[j]);
        }
    }
}

#[test]
fn standard_instance_shape() {
    let spec = InstanceSpec::standard(0.5, 1.0, 0);
    assert_eq!((spec.samples, spec.dim, spec.true_sparsity), (1000, 2000, 20));
    assert_eq!(spec.parameter_shape(), Shape::Vector(2000));
}

#[test]
fn lowrank_truth_has_requested_rank() {
    let spec = InstanceSpec {
        model: ModelKind::LowRank,
        samples: 40,
        dim: 8,
        cols: Some(6),
        true_sparsity: 2,
        correlation: 0.0,
        noise_std: 0.0,
        corruption: None,
        seed: 8,
    };
    let inst = generate_instance::<f64>(&spec).unwrap();
    assert_eq!(inst.truth.shape(), Shape::Matrix { rows: 8, cols: 6 });
    let m = nalgebra::DMatrix::from_column_slice(8, 6, inst.truth.as_slice());
    assert_eq!(m.rank(1e-9), 2);
    let p = inst.lowrank_problem(4).unwrap();
    assert_eq!(p.apply_operator(inst.truth.as_slice()), inst.responses);
}

#[test]
fn libsvm_round_trip() {
    let a = DenseMatrix::from_row_major(
        3,
        4,
        vec![0.5, 0.0, -1.25, 0.0, 0.0, 0.0, 0.0, 3.0, 1e-3, 2.0, 0.0, 0.0],
    )
    .unwrap();
    let labels = vec![1.0, 0.0, 1.0];
    let mut text = Vec::new();
    write_libsvm(&mut text, &a, &labels).unwrap();
    let opts = LibsvmOptions {
        dim: Some(4),
        map_pm1: false,
    };
    let (b, y) = parse_libsvm::<f64, _>(Cursor::new(&text), opts).unwrap();
    assert_eq!(b, a);
    assert_eq!(y, labels);
}

#[test]
fn libsvm_reports_line_numbers() {
    let text = "# header\n1 1:0.5 3:2\n\n-1 2:1 2:3\n";
    let err = parse_libsvm::<f64, _>(Cursor::new(text), LibsvmOptions::default()).unwrap_err();
    match err {
        HtError::Parse { line, .. } => assert_eq!(line, 4),
        other => panic!("unexpected {other:?}"),
    }
    let (a, y) = parse_libsvm::<f64, _>(
        Cursor::new("+1 1:1\n-1 3:2\n"),
        LibsvmOptions {
            dim: None,
            map_pm1: true,
        },
    )
    .unwrap();
    assert_eq!((a.rows(), a.cols()), (2, 3));
    assert_eq!(y, vec![1.0, 0.0]);
}

#[test]
fn container_round_trip_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let spec = InstanceSpec {
        model: ModelKind::Corrupted,
        samples: 30,
        dim: 12,
        cols: None,
        true_sparsity: 3,
        correlation: 0.2,
        noise_std: 0.5,
        corruption: Some(CorruptionSpec::Missing { rho: 0.1 }),
        seed: 9,
    };
    let inst = generate_instance::<f64>(&spec).unwrap();
    let first = dir.path().join("a.bin");
    let second = dir.path().join("b.bin");
    write_instance(&first, &inst).unwrap();
    let back = read_instance::<f64>(&first).unwrap();
    assert_eq!(back, inst);
    write_instance(&second, &back).unwrap();
    assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
    assert_eq!(
        std::fs::read(sidecar_path(&first)).unwrap(),
        std::fs::read(sidecar_path(&second)).unwrap()
    );
    assert!(back.corrupted_problem(3).is_ok());
}

#[test]
fn container_rejects_damage() {
    let dir = tempfile::tempdir().unwrap();
    let inst = generate_instance::<f64>(&InstanceSpec {
        samples: 10,
        dim: 5,
        true_sparsity: 2,
        ..InstanceSpec::standard(0.0, 0.0, 1)
    })
    .unwrap();
    let path = dir.path().join("x.bin");
    write_instance(&path, &inst).unwrap();
    let mut bytes = std::fs::read(&path).unwrap();
    bytes.truncate(bytes.len() - 8);
    std::fs::write(&path, &bytes).unwrap();
    assert!(matches!(read_instance::<f64>(&path), Err(HtError::Format(_))));
    bytes[0] = b'X';
    std::fs::write(&path, &bytes).unwrap();
    assert!(matches!(read_instance::<f64>(&path), Err(HtError::Format(_))));
    assert!(matches!(
        read_instance::<f64>(dir.path().join("missing.bin")),
        Err(HtError::Io(_))
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn libsvm_round_trips_arbitrary_sparse_rows(
        cells in proptest::collection::vec((0usize..6, -1e6f64..1e6), 0..30),
        labels in proptest::collection::vec(prop_oneof![Just(0.0), Just(1.0)], 4),
    ) {
        let mut vals = vec![0.0; 24];
        for (k, (j, v)) in cells.into_iter().enumerate() {
            vals[(k % 4) * 6 + j] = v;
        }
        let a = DenseMatrix::from_row_major(4, 6, vals).unwrap();
        let mut text = Vec::new();
        write_libsvm(&mut text, &a, &labels).unwrap();
        let (b, y) = parse_libsvm::<f64, _>(Cursor::new(&text), LibsvmOptions { dim: Some(6), map_pm1: false }).unwrap();
        prop_assert_eq!(b, a);
        prop_assert_eq!(y, labels);
    }
}
