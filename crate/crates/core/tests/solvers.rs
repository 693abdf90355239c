mod common;

use common::{bits, linear, nnz};
use proptest::prelude::*;
use sparse_ht::models::QuadraticProblem;
use sparse_ht::solvers::SagaTable;
use sparse_ht::{
    fg_ht, full_gradient, prox_svrg, saga_ht, sg_ht, svrg_ht, HtError, Objective, Parameter, Sampling, Shape,
    SnapshotRule, SolverConfig, StopReason,
};

fn steps(eta: f64, k: usize, outer: u64) -> SolverConfig {
    SolverConfig {
        outer_budget: Some(outer),
        pass_budget: None,
        ..SolverConfig::new(eta, k)
    }
}

fn zeros(d: usize) -> Parameter<f64> {
    Parameter::zeros(Shape::Vector(d))
}

#[test]
fn fg_one_dimensional_step_lands_on_minimizer() {
    // ½(θ − 2)² = ½θ² − 2θ + 2
    let p = QuadraticProblem::scalar(&[(1.0, 2.0, 2.0)]);
    let tr = fg_ht(&p, &steps(1.0, 1, 1), &zeros(1)).unwrap();
    assert_eq!(tr.final_parameter.as_slice(), &[2.0]);
    assert_eq!(tr.iterations, 1);
}

#[test]
fn fg_threshold_keeps_largest_after_step() {
    let p = QuadraticProblem::isotropic(&[vec![3.0, 1.0, 0.0]]).unwrap();
    let tr = fg_ht(&p, &steps(1.0, 1, 1), &zeros(3)).unwrap();
    assert_eq!(tr.final_parameter.as_slice(), &[3.0, 0.0, 0.0]);
}

#[test]
fn fg_ten_pass_budget_gives_ten_rows_after_initial() {
    let p = linear(40, 30, 3, 0.0, 0.5, 4, 1);
    let cfg = SolverConfig {
        pass_budget: Some(10.0),
        ..SolverConfig::new(0.1, 6)
    };
    let tr = fg_ht(&p, &cfg, &zeros(30)).unwrap();
    assert_eq!(tr.checkpoints.len(), 11);
    let passes: Vec<f64> = tr.checkpoints.iter().map(|c| c.passes).collect();
    assert_eq!(passes, (0..=10).map(f64::from).collect::<Vec<_>>());
    assert_eq!(tr.checkpoints[0].relative_objective, 1.0);
    assert_eq!(tr.full_gradient_evals, 10);
    assert_eq!(tr.stochastic_steps, 0);
    assert_eq!(tr.stop_reason, StopReason::BudgetExhausted);
}

#[test]
fn fg_recovers_noiseless_truth() {
    let p = linear(200, 400, 10, 0.0, 0.0, 1, 7);
    let cfg = SolverConfig {
        pass_budget: Some(500.0),
        objective_tol: Some(1e-26),
        ..SolverConfig::new(0.25, 30)
    };
    let tr = fg_ht(&p, &cfg, &zeros(400)).unwrap();
    let err = tr.final_estimation_error().unwrap();
    assert!(err < 1e-10, "error {err:e} after {} passes", tr.final_passes);
    assert!(tr.final_passes <= 500.0);
}

#[test]
fn single_component_solvers_match_fg_bitwise() {
    let p = linear(30, 20, 3, 0.2, 0.5, 1, 3);
    let theta0 = zeros(20);
    for t in [1, 2, 5, 17] {
        let fg = fg_ht(&p, &steps(0.05, 5, t), &theta0).unwrap();
        let sg = sg_ht(&p, &steps(0.05, 5, t), &theta0).unwrap();
        let svrg = svrg_ht(
            &p,
            &SolverConfig {
                inner_length: Some(1),
                ..steps(0.05, 5, t)
            },
            &theta0,
        )
        .unwrap();
        let saga = saga_ht(&p, &steps(0.05, 5, t), &theta0).unwrap();
        let want = bits(fg.final_parameter.as_slice());
        assert_eq!(bits(sg.final_parameter.as_slice()), want, "sg after {t}");
        assert_eq!(bits(svrg.final_parameter.as_slice()), want, "svrg after {t}");
        assert_eq!(bits(saga.final_parameter.as_slice()), want, "saga after {t}");
    }
}

#[test]
fn prox_without_penalty_is_gradient_descent() {
    let p = linear(30, 8, 3, 0.0, 0.5, 1, 4);
    let eta = 0.05;
    let cfg = SolverConfig {
        inner_length: Some(1),
        l1_weight: Some(0.0),
        ..steps(eta, 1, 6)
    };
    let tr = prox_svrg(&p, &cfg, &zeros(8)).unwrap();
    let mut theta = vec![0.0; 8];
    let mut g = vec![0.0; 8];
    for _ in 0..6 {
        p.gradient_into(&theta, &mut g);
        for (x, gj) in theta.iter_mut().zip(&g) {
            *x -= eta * gj;
        }
    }
    assert_eq!(tr.final_parameter.as_slice(), theta.as_slice());
}

#[test]
fn prox_with_huge_penalty_stays_at_zero() {
    let p = linear(60, 20, 3, 0.3, 1.0, 6, 5);
    let g0 = full_gradient(&p, &zeros(20)).unwrap();
    let gmax = g0.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let cfg = SolverConfig {
        l1_weight: Some(10.0 * gmax),
        pass_budget: Some(20.0),
        ..SolverConfig::new(0.05, 1)
    };
    let tr = prox_svrg(&p, &cfg, &zeros(20)).unwrap();
    assert!(tr.final_parameter.as_slice().iter().all(|v| *v == 0.0));
    // penalized objective at zero is F(0), so every checkpoint sits at 1
    assert!(tr.checkpoints.iter().all(|c| c.relative_objective == 1.0));
}

#[test]
fn prox_requires_penalty() {
    let p = linear(10, 5, 1, 0.0, 0.0, 1, 1);
    let err = prox_svrg(&p, &SolverConfig::new(0.1, 1), &zeros(5)).unwrap_err();
    assert!(matches!(err, HtError::InvalidArgument(_)));
}

#[test]
fn truth_is_a_fixed_point_of_every_solver() {
    let p = linear(60, 40, 4, 0.3, 0.0, 20, 9);
    let truth = p.truth().unwrap().clone();
    let cfg = SolverConfig {
        pass_budget: Some(10.0),
        ..SolverConfig::new(0.05, 8)
    };
    let random = SolverConfig {
        snapshot_rule: SnapshotRule::RandomIterate,
        ..cfg.clone()
    };
    let runs = [
        fg_ht(&p, &cfg, &truth).unwrap(),
        sg_ht(&p, &cfg, &truth).unwrap(),
        svrg_ht(&p, &cfg, &truth).unwrap(),
        svrg_ht(&p, &random, &truth).unwrap(),
        saga_ht(&p, &cfg, &truth).unwrap(),
    ];
    for tr in runs {
        assert!(tr.final_estimation_error().unwrap() < 1e-12);
    }
}

#[test]
fn svrg_checkpoints_every_round() {
    let p = linear(100, 30, 3, 0.0, 0.5, 100, 2);
    let cfg = SolverConfig {
        pass_budget: Some(10.0),
        ..SolverConfig::new(0.01, 6)
    };
    let tr = svrg_ht(&p, &cfg, &zeros(30)).unwrap();
    let passes: Vec<f64> = tr.checkpoints.iter().map(|c| c.passes).collect();
    assert_eq!(passes, vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0]);
    assert_eq!(tr.full_gradient_evals, 5);
    assert_eq!(tr.stochastic_steps, 500);

    let half = SolverConfig {
        inner_length: Some(50),
        ..cfg
    };
    let tr = svrg_ht(&p, &half, &zeros(30)).unwrap();
    assert!(tr.checkpoints.windows(2).all(|w| w[1].passes - w[0].passes == 1.5));
}

#[test]
fn per_step_solvers_checkpoint_by_stride() {
    let p = linear(100, 30, 3, 0.0, 0.5, 50, 2);
    let cfg = SolverConfig {
        pass_budget: Some(3.0),
        trace_stride: 0.5,
        ..SolverConfig::new(0.01, 6)
    };
    let sg = sg_ht(&p, &cfg, &zeros(30)).unwrap();
    let passes: Vec<f64> = sg.checkpoints.iter().map(|c| c.passes).collect();
    assert_eq!(passes, vec![0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0]);
    assert_eq!(sg.stochastic_steps, 150);

    let saga = saga_ht(&p, &cfg, &zeros(30)).unwrap();
    let passes: Vec<f64> = saga.checkpoints.iter().map(|c| c.passes).collect();
    assert_eq!(passes, vec![0.0, 1.5, 2.0, 2.5, 3.0]);
    assert_eq!(saga.full_gradient_evals, 1);
    assert_eq!(saga.stochastic_steps, 100);
}

#[test]
fn pass_accounting_matches_counters() {
    let p = linear(90, 30, 3, 0.0, 0.5, 30, 2);
    let cfg = SolverConfig {
        pass_budget: Some(7.3),
        inner_length: Some(13),
        ..SolverConfig::new(0.01, 6)
    };
    let theta0 = zeros(30);
    for tr in [
        fg_ht(&p, &cfg, &theta0).unwrap(),
        sg_ht(&p, &cfg, &theta0).unwrap(),
        svrg_ht(&p, &cfg, &theta0).unwrap(),
        saga_ht(&p, &cfg, &theta0).unwrap(),
    ] {
        let audit = tr.full_gradient_evals as f64 + tr.stochastic_steps as f64 / 30.0;
        assert!((tr.final_passes - audit).abs() <= 1e-9);
        assert!(tr.final_passes <= 7.3 + 1e-9);
        assert!(tr.checkpoints.windows(2).all(|w| w[1].passes > w[0].passes));
        assert_eq!(tr.last().passes, tr.final_passes);
    }
}

#[test]
fn same_seed_same_trace_bytes() {
    let p = linear(80, 40, 4, 0.5, 1.0, 40, 11);
    let theta0 = zeros(40);
    let cfg = SolverConfig {
        pass_budget: Some(12.0),
        seed: 99,
        snapshot_rule: SnapshotRule::RandomIterate,
        ..SolverConfig::new(0.01, 8)
    };
    for run in [sg_ht::<f64, _>, svrg_ht, saga_ht] {
        let a = run(&p, &cfg, &theta0).unwrap();
        let b = run(&p, &cfg, &theta0).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        assert_eq!(bits(a.final_parameter.as_slice()), bits(b.final_parameter.as_slice()));
        let other = SolverConfig {
            seed: 100,
            ..cfg.clone()
        };
        let c = run(&p, &other, &theta0).unwrap();
        assert_ne!(bits(a.final_parameter.as_slice()), bits(c.final_parameter.as_slice()));
    }
}

#[test]
fn without_replacement_sampling_runs() {
    let p = linear(80, 40, 4, 0.0, 0.0, 40, 12);
    let cfg = SolverConfig {
        pass_budget: Some(60.0),
        sampling: Sampling::WithoutReplacement,
        ..SolverConfig::new(0.05, 8)
    };
    let tr = svrg_ht(&p, &cfg, &zeros(40)).unwrap();
    assert!(tr.final_relative_objective() < 1e-6);
}

#[test]
fn divergence_is_reported_with_step_size() {
    let p = linear(50, 20, 3, 0.0, 0.5, 50, 1);
    let cfg = SolverConfig {
        pass_budget: Some(50.0),
        ..SolverConfig::new(8.0, 5)
    };
    for res in [
        fg_ht(&p, &cfg, &zeros(20)),
        sg_ht(&p, &cfg, &zeros(20)),
        svrg_ht(&p, &cfg, &zeros(20)),
    ] {
        match res {
            Err(HtError::Divergence { step_size, .. }) => assert_eq!(step_size, 8.0),
            other => panic!("expected divergence, got {other:?}"),
        }
    }
}

#[test]
fn radius_bounds_every_iterate() {
    let p = linear(60, 30, 4, 0.0, 0.5, 30, 3);
    let tau = 0.5;
    for budget in 1..8 {
        let cfg = SolverConfig {
            l2_radius: Some(tau),
            outer_budget: Some(budget),
            pass_budget: None,
            ..SolverConfig::new(0.05, 6)
        };
        let tr = svrg_ht(&p, &cfg, &zeros(30)).unwrap();
        let norm = tr.final_parameter.norm2();
        assert!(norm <= tau * (1.0 + f64::EPSILON), "{norm}");
    }
}

#[test]
fn invalid_configs_are_rejected() {
    let p = linear(20, 10, 2, 0.0, 0.0, 2, 1);
    let bad = [
        SolverConfig::new(0.0, 2),
        SolverConfig::new(0.1, 0),
        SolverConfig {
            inner_length: Some(0),
            ..SolverConfig::new(0.1, 2)
        },
        SolverConfig {
            pass_budget: None,
            ..SolverConfig::new(0.1, 2)
        },
    ];
    for cfg in bad {
        assert!(matches!(
            svrg_ht(&p, &cfg, &zeros(10)),
            Err(HtError::InvalidArgument(_))
        ));
    }
    assert!(fg_ht(&p, &SolverConfig::new(0.1, 2), &zeros(11)).is_err());
}

#[test]
fn saga_table_mean_tracks_stored_gradients() {
    let p = linear(70, 12, 3, 0.2, 1.0, 7, 5);
    let mut table = SagaTable::new(&p, &[0.0; 12]).unwrap();
    let mut rng_theta = vec![0.0; 12];
    let mut g = vec![0.0; 12];
    for step in 0..40usize {
        let i = (step * 5 + 3) % 7;
        rng_theta[step % 12] += 0.1 * (step as f64).sin();
        p.component_gradient_into(i, &rng_theta, &mut g);
        table.update(i, &g);
        for j in 0..12 {
            let exact: f64 = (0..7).map(|r| table.stored(r)[j]).sum::<f64>() / 7.0;
            assert!((table.mean()[j] - exact).abs() <= 1e-10);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn iterates_stay_k_sparse(seed in 0u64..1000, k in 1usize..12, budget in 1u64..40, solver in 0usize..4) {
        let p = linear(40, 24, 3, 0.3, 1.0, 20, seed);
        let cfg = SolverConfig {
            outer_budget: Some(budget),
            pass_budget: None,
            seed,
            ..SolverConfig::new(0.02, k)
        };
        let theta0 = zeros(24);
        let tr = match solver {
            0 => fg_ht(&p, &cfg, &theta0),
            1 => sg_ht(&p, &cfg, &theta0),
            2 => svrg_ht(&p, &cfg, &theta0),
            _ => saga_ht(&p, &cfg, &theta0),
        }.unwrap();
        prop_assert!(nnz(tr.final_parameter.as_slice()) <= k);
    }
}
