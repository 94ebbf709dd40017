use std::f64::consts::PI;

use drm_core::analysis::{
    calibrate_aggregate, convergence_sweep, decompose_errors, gap_study, h1_error, h1_error_net,
    DecompositionConfig, ErrorRule, GapSettings, LargeBudget, SweepSettings, SWEEP_HEADER,
};
use drm_core::bounds::{
    arch_for_plan, plan_hyperparams, BoundaryKind, HyperParamRequest, PlanConstants,
};
use drm_core::function::FnTrial;
use drm_core::network::init_params;
use drm_core::problems::named_problem;
use drm_core::ritz::IntegrationRule;
use drm_core::{
    Activation, BoundaryCondition, Domain, EllipticProblem, Error, Field, InitScheme, Network,
    NetworkArch, Optimizer, TrainConfig,
};

fn sin1d() -> FnTrial<impl Fn(&[f64]) -> f64, impl Fn(&[f64], &mut [f64])> {
    FnTrial::new(
        1,
        |x: &[f64]| (PI * x[0]).sin(),
        |x: &[f64], g: &mut [f64]| g[0] = PI * (PI * x[0]).cos(),
    )
}

fn zero1d() -> FnTrial<impl Fn(&[f64]) -> f64, impl Fn(&[f64], &mut [f64])> {
    FnTrial::new(1, |_: &[f64]| 0.0, |_: &[f64], g: &mut [f64]| g[0] = 0.0)
}

#[test]
fn zero_against_sine_on_the_grid() {
    let domain = Domain::unit_hypercube(1).unwrap();
    let r = h1_error(&zero1d(), &sin1d(), &domain, 4097, 0, ErrorRule::Grid1d).unwrap();
    // trapezoid error on sin² and cos² over a full period vanishes to rounding
    assert!((r.l2_error - 0.5f64.sqrt()).abs() < 1e-12);
    assert!((r.h1_seminorm_error - (PI * PI / 2.0).sqrt()).abs() < 1e-12);
    assert!((r.h1_error - (0.5 + PI * PI / 2.0).sqrt()).abs() < 1e-12);
    assert_eq!(r.h1_stderr, 0.0);
    assert!(h1_error(&zero1d(), &sin1d(), &domain, 100, 0, ErrorRule::Grid1d).is_err());
    let square = Domain::unit_hypercube(2).unwrap();
    let z2 = FnTrial::new(2, |_: &[f64]| 0.0, |_: &[f64], g: &mut [f64]| g.fill(0.0));
    assert!(h1_error(&z2, &z2, &square, 1024, 0, ErrorRule::Grid1d).is_err());
}

#[test]
fn monte_carlo_agrees_with_grid() {
    let domain = Domain::unit_hypercube(1).unwrap();
    let grid = h1_error(&zero1d(), &sin1d(), &domain, 4097, 0, ErrorRule::Grid1d).unwrap();
    for seed in 0..5 {
        let mc = h1_error(
            &zero1d(),
            &sin1d(),
            &domain,
            20_000,
            seed,
            ErrorRule::MonteCarlo,
        )
        .unwrap();
        assert!(
            (mc.l2_error - grid.l2_error).abs() <= 3.0 * mc.l2_stderr,
            "seed {seed}"
        );
        assert!(
            (mc.h1_seminorm_error - grid.h1_seminorm_error).abs() <= 3.0 * mc.h1_seminorm_stderr
        );
        assert!((mc.h1_error - grid.h1_error).abs() <= 3.0 * mc.h1_stderr);
    }
}

#[test]
fn self_comparison_pythagoras_and_symmetry() {
    let arch = NetworkArch::new(vec![2, 5, 5, 1], Activation::Tanh, 2.0).unwrap();
    let domain = Domain::unit_hypercube(2).unwrap();
    let p = init_params(&arch, InitScheme::UniformScaled, 1);
    let q = init_params(&arch, InitScheme::UniformScaled, 2);
    let a = Network::new(&arch, &p).unwrap();
    let b = Network::new(&arch, &q).unwrap();
    let zero = h1_error_net(&arch, &p, &a, &domain, 2000, 3, ErrorRule::MonteCarlo).unwrap();
    assert_eq!(
        (zero.l2_error, zero.h1_seminorm_error, zero.h1_error),
        (0.0, 0.0, 0.0)
    );

    let ab = h1_error(&a, &b, &domain, 5000, 4, ErrorRule::MonteCarlo).unwrap();
    let ba = h1_error(&b, &a, &domain, 5000, 4, ErrorRule::MonteCarlo).unwrap();
    assert_eq!(ab, ba);
    let lhs = ab.h1_error * ab.h1_error;
    let rhs = ab.l2_error * ab.l2_error + ab.h1_seminorm_error * ab.h1_seminorm_error;
    assert!((lhs - rhs).abs() <= 1e-12 * lhs);
    assert_eq!(ab.samples, 5000);
}

fn zero_data_problem() -> EllipticProblem {
    EllipticProblem::new(
        Domain::unit_hypercube(1).unwrap(),
        Field::constant(1.0),
        1.0,
        Field::zero(),
        Field::zero(),
        BoundaryCondition::Robin {
            alpha: 1.0,
            beta: 1.0,
        },
    )
    .unwrap()
}

fn decomposition_config(init: InitScheme) -> DecompositionConfig {
    let arch = NetworkArch::new(vec![1, 4, 1], Activation::Tanh, 5.0).unwrap();
    let train = TrainConfig {
        init,
        log_every: 10,
        ..TrainConfig::new(Optimizer::adam(1e-2), 100, 0)
    };
    DecompositionConfig {
        arch: arch.clone(),
        train: train.clone(),
        n: 64,
        m: 64,
        batch_seed: 3,
        seeds: vec![0, 1, 2],
        random_draws: 0,
        n_fresh: 2000,
        gap_trials: 2,
        gap_rule: IntegrationRule::MonteCarlo,
        n_quad: 2000,
        error_rule: ErrorRule::MonteCarlo,
        c_constant: 1.0,
        large: LargeBudget {
            arch,
            train,
            n: 128,
            m: 128,
            seed: 9,
        },
    }
}

#[test]
fn decomposition_of_zero_data_vanishes() {
    let report = decompose_errors(
        &zero_data_problem(),
        &decomposition_config(InitScheme::Zero),
    )
    .unwrap();
    assert_eq!(report.e_app_surrogate, 0.0);
    assert_eq!(report.e_sta_surrogate, 0.0);
    assert_eq!(report.e_opt_surrogate, 0.0);
    assert_eq!(report.notes.len(), 3);
}

#[test]
fn decomposition_surrogates_are_nonnegative() {
    let problem = named_problem("sin1d_robin", None).unwrap();
    let mut cfg = decomposition_config(InitScheme::UniformScaled);
    cfg.random_draws = 2;
    let report = decompose_errors(&problem, &cfg).unwrap();
    assert!(
        report.e_app_surrogate > 0.0
            && report.e_sta_surrogate > 0.0
            && report.e_opt_surrogate >= 0.0
    );
    assert_eq!(report.gap_per_member.len(), 5);
    assert!(report.e_opt_per_seed.iter().any(|&e| e == 0.0));
    assert_eq!(
        report.e_sta_surrogate,
        report.gap_per_member.iter().copied().fold(0.0, f64::max)
    );
    let h = report.large_budget_h1;
    assert_eq!(report.e_app_surrogate, h * h);
    cfg.seeds.clear();
    assert!(decompose_errors(&problem, &cfg).is_err());
}

fn small_settings() -> SweepSettings {
    SweepSettings {
        activation: Activation::Tanh,
        train: TrainConfig {
            log_every: 25,
            ..TrainConfig::new(Optimizer::adam(1e-2), 50, 0)
        },
        n_quad: 1000,
        error_rule: ErrorRule::MonteCarlo,
        gap_trials: 1,
        n_fresh: 1000,
        gap_rule: IntegrationRule::MonteCarlo,
        c_aggregate: 1.0,
    }
}

fn plan(eps: f64, c_weight: f64) -> drm_core::bounds::HyperParamPlan {
    let constants = PlanConstants {
        c_width: 8.0,
        c_samples: 16.0,
        c_weight,
        ..Default::default()
    };
    plan_hyperparams(
        &HyperParamRequest {
            eps,
            d: 1,
            mu: 0.5,
            constants,
        },
        BoundaryKind::Robin,
    )
    .unwrap()
}

#[test]
fn sweep_rows_arrive_in_order_and_failures_are_rows() {
    let problem = named_problem("sin1d_robin", None).unwrap();
    // c_weight = 1e-6 pushes B_θ below 1 for ε = 0.5, which must fail
    let plans = vec![plan(0.5, 1.0), plan(0.5, 1e-6), plan(0.4, 1.0)];
    let seeds = [1, 2];
    let mut seen = Vec::new();
    let rows = convergence_sweep(&problem, &plans, &seeds, &small_settings(), 3, &mut |r| {
        seen.push((r.plan_id, r.seed));
        Ok(())
    })
    .unwrap();
    assert_eq!(seen, vec![(0, 1), (0, 2), (1, 1), (1, 2), (2, 1), (2, 2)]);
    assert_eq!(rows.len(), 6);
    for r in &rows {
        assert_eq!(r.csv_record().len(), SWEEP_HEADER.len());
        if r.plan_id == 1 {
            assert!(r.status.starts_with("failed:"), "{}", r.status);
            assert!(r.h1_error.is_nan());
        } else {
            assert!(r.is_ok(), "{}", r.status);
            assert!(r.h1_error.is_finite() && r.gap.is_finite());
            let arch = arch_for_plan(&plans[r.plan_id], Activation::Tanh).unwrap();
            assert_eq!(r.width_total, arch.widths()[1]);
        }
    }
    // worker count does not change the numbers
    let serial = convergence_sweep(&problem, &plans, &seeds, &small_settings(), 1, &mut |_| {
        Ok(())
    })
    .unwrap();
    let records =
        |rs: &[drm_core::analysis::SweepRow]| rs.iter().map(|r| r.csv_record()).collect::<Vec<_>>();
    assert_eq!(records(&serial), records(&rows));

    let c = calibrate_aggregate(&rows, 1.0).unwrap();
    assert!((c * rows[0].stat_bound.get() - rows[0].gap).abs() <= 1e-9 * rows[0].gap);
}

#[test]
fn empty_sweep_and_sink_errors() {
    let problem = named_problem("sin1d_robin", None).unwrap();
    let rows = convergence_sweep(&problem, &[], &[1, 2], &small_settings(), 2, &mut |_| {
        panic!("no rows expected")
    })
    .unwrap();
    assert!(rows.is_empty());
    assert!(calibrate_aggregate(&rows, 1.0).is_none());

    let plans = vec![plan(0.5, 1.0)];
    let mut calls = 0;
    let err = convergence_sweep(
        &problem,
        &plans,
        &[1, 2, 3],
        &small_settings(),
        1,
        &mut |_| {
            calls += 1;
            Err(Error::InvalidArgument("disk full".into()))
        },
    )
    .unwrap_err();
    assert!(err.to_string().contains("disk full"));
    assert_eq!(calls, 1);
}

#[test]
fn gap_study_rows_and_summaries() {
    let problem = named_problem("sin1d_robin", None).unwrap();
    let arch = NetworkArch::new(vec![1, 4, 1], Activation::Tanh, 5.0).unwrap();
    let cfg = TrainConfig {
        log_every: 20,
        ..TrainConfig::new(Optimizer::adam(1e-2), 40, 0)
    };
    let settings = GapSettings {
        n_list: vec![32, 128],
        n_fresh: 1000,
        trials: 2,
        rule: IntegrationRule::GaussLegendre1d,
    };
    let (rows, summaries) = gap_study(&problem, &arch, &cfg, &settings, &[5, 6, 7]).unwrap();
    assert_eq!(rows.len(), 6);
    assert_eq!(
        rows.iter().map(|r| (r.n, r.seed)).collect::<Vec<_>>(),
        vec![(32, 5), (32, 6), (32, 7), (128, 5), (128, 6), (128, 7)]
    );
    assert_eq!(summaries.len(), 2);
    for s in &summaries {
        let gaps: Vec<f64> = rows.iter().filter(|r| r.n == s.n).map(|r| r.gap).collect();
        assert_eq!(s.max_gap, gaps.iter().copied().fold(0.0, f64::max));
        assert!(s.median_gap <= s.max_gap && s.calibration_log10().is_finite());
    }
    assert!(summaries[1].unit_bound_log10 < summaries[0].unit_bound_log10);
    for r in &rows {
        assert!(
            (r.gap - (r.continuous_loss - r.empirical_loss).abs()).abs()
                <= 1e-12 * r.gap.max(1e-300)
                || r.gap_std > 0.0
        );
    }
    let bad = GapSettings {
        n_list: vec![0],
        ..settings
    };
    assert!(gap_study(&problem, &arch, &cfg, &bad, &[1]).is_err());
}
