use std::f64::consts::PI;

use drm_core::function::TrialFunction;
use drm_core::problems::{
    make_manufactured, named_problem, penalty_gap_1d, solve_reference_1d, solve_reference_1d_with,
    ManufacturedKind, ManufacturedSolution, ReferenceBc,
};
use drm_core::rng::{seeded, stream};
use drm_core::{BoundaryCondition, Domain, EllipticProblem, Field};
use rand::Rng;

const KINDS: [ManufacturedKind; 3] = [
    ManufacturedKind::SinProduct,
    ManufacturedKind::GaussianBump,
    ManufacturedKind::Quadratic,
];

#[test]
fn sin_robin_data_matches_hand_derivation() {
    let p = named_problem("sin1d_robin", None).unwrap();
    for x in [0.1, 0.37, 0.5, 0.9] {
        let f = p.f().eval(&[x]);
        assert!((f - (PI * PI + 1.0) * (PI * x).sin()).abs() < 1e-12);
    }
    // outward normal −1 at 0 and +1 at 1: g = u ∓ u'
    assert!((p.g().eval(&[0.0]) + PI).abs() < 1e-12);
    assert!((p.g().eval(&[1.0]) + PI).abs() < 1e-12);
}

#[test]
fn coercivity_is_checked() {
    let err = make_manufactured(
        Domain::unit_hypercube(1).unwrap(),
        ManufacturedKind::Quadratic,
        Field::constant(0.0),
        1e-6,
        BoundaryCondition::Robin {
            alpha: 1.0,
            beta: 1.0,
        },
    );
    assert!(err.is_err());
}

#[test]
fn dirichlet_traces() {
    let p = named_problem("sin2d_dirichlet", None).unwrap();
    let exact = p.exact().unwrap();
    let pts = p.domain().sample_boundary(400, 3).unwrap();
    for y in pts.iter() {
        assert!(exact.value(y).abs() < 1e-15);
    }
    assert!(p.g().is_zero());
    let bump = make_manufactured(
        Domain::unit_hypercube(2).unwrap(),
        ManufacturedKind::GaussianBump,
        Field::constant(1.0),
        1.0,
        BoundaryCondition::DirichletPenalty { beta: 0.1 },
    );
    assert!(bump.is_err());
}

#[test]
fn manufactured_derivatives_match_finite_differences() {
    let mut rng = seeded(1, stream::MISC);
    for kind in KINDS {
        for d in 1..=3 {
            let u = ManufacturedSolution::new(kind, d).unwrap();
            let mut g = vec![0.0; d];
            for _ in 0..100 {
                let x: Vec<f64> = (0..d).map(|_| rng.random_range(0.05..0.95)).collect();
                u.value_and_gradient(&x, &mut g);
                let mut lap_fd = 0.0;
                for k in 0..d {
                    let h = 1e-5;
                    let mut xp = x.clone();
                    xp[k] += h;
                    let mut xm = x.clone();
                    xm[k] -= h;
                    let fd = (u.value(&xp) - u.value(&xm)) / (2.0 * h);
                    assert!(
                        (g[k] - fd).abs() <= 1e-6 * g[k].abs().max(1e-3),
                        "{kind:?} d={d}: {} vs {fd}",
                        g[k]
                    );
                    let second = |h2: f64| {
                        let mut xp = x.clone();
                        xp[k] += h2;
                        let mut xm = x.clone();
                        xm[k] -= h2;
                        (u.value(&xp) - 2.0 * u.value(&x) + u.value(&xm)) / (h2 * h2)
                    };
                    // Richardson extrapolation of the second difference.
                    lap_fd += (4.0 * second(5e-4) - second(1e-3)) / 3.0;
                }
                let lap = u.laplacian(&x);
                assert!(
                    (lap - lap_fd).abs() <= 1e-4 * lap.abs().max(1e-2),
                    "{kind:?}: {lap} vs {lap_fd}"
                );
            }
        }
    }
}

#[test]
fn manufactured_problems_satisfy_their_equation() {
    let mut rng = seeded(2, stream::MISC);
    for kind in KINDS {
        for d in 1..=3 {
            let w = Field::new(|x: &[f64]| 1.5 + x[0]);
            let p = make_manufactured(
                Domain::unit_hypercube(d).unwrap(),
                kind,
                w,
                1.5,
                BoundaryCondition::Robin {
                    alpha: 2.0,
                    beta: 0.5,
                },
            )
            .unwrap();
            let u = ManufacturedSolution::new(kind, d).unwrap();
            for _ in 0..50 {
                let x: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
                let r = -u.laplacian(&x) + p.w().eval(&x) * u.value(&x) - p.f().eval(&x);
                assert!(r.abs() < 1e-10);
            }
            // Robin data on the faces: αu + β ∂u/∂n with axis-aligned normals.
            let y: Vec<f64> = (0..d).map(|k| if k == 0 { 1.0 } else { 0.3 }).collect();
            let mut g = vec![0.0; d];
            let v = u.value_and_gradient(&y, &mut g);
            assert!((p.g().eval(&y) - (2.0 * v + 0.5 * g[0])).abs() < 1e-12);
        }
    }
}

#[test]
fn ball_boundary_uses_radial_normal() {
    let domain = Domain::ball(vec![0.5, 0.5], 0.4).unwrap();
    let p = make_manufactured(
        domain,
        ManufacturedKind::GaussianBump,
        Field::constant(1.0),
        1.0,
        BoundaryCondition::Neumann,
    )
    .unwrap();
    // radial bump: ∂u/∂n = -(r/σ²) u on the circle r = 0.4
    let y = [0.9, 0.5];
    let u = ManufacturedSolution::new(ManufacturedKind::GaussianBump, 2).unwrap();
    let expected = -0.4 / (0.25 * 0.25) * u.value(&y);
    assert!((p.g().eval(&y) - expected).abs() < 1e-12);
}

fn max_error(p: &EllipticProblem, n: usize) -> f64 {
    let r = solve_reference_1d(p, n).unwrap();
    let exact = p.exact().unwrap();
    r.nodes()
        .zip(r.values())
        .map(|(x, v)| (v - exact.value(&[x])).abs())
        .fold(0.0, f64::max)
}

#[test]
fn reference_solver_is_second_order() {
    let p = named_problem("sin1d_robin", None).unwrap();
    let e = max_error(&p, 512);
    assert!(e <= 1e-4, "{e}");
    let ratio = max_error(&p, 128) / max_error(&p, 256);
    assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    // Both the interior stencil and the one-sided closure are exact on quadratics.
    let quad = named_problem("quad1d_robin", None).unwrap();
    assert!(max_error(&quad, 64) < 1e-10);
    let neumann = named_problem("sin1d_robin", Some(BoundaryCondition::Neumann)).unwrap();
    let ratio = max_error(&neumann, 128) / max_error(&neumann, 256);
    assert!((3.5..=4.5).contains(&ratio), "neumann ratio {ratio}");
}

#[test]
fn reference_solver_dirichlet_and_trivial_cases() {
    let dirichlet = named_problem(
        "sin1d_robin",
        Some(BoundaryCondition::DirichletPenalty { beta: 0.1 }),
    )
    .unwrap();
    assert!(max_error(&dirichlet, 512) <= 1e-4);
    let r = solve_reference_1d(&dirichlet, 512).unwrap();
    assert!(r.interior_residual(&dirichlet) < 1e-6);

    for bc in [
        BoundaryCondition::Robin {
            alpha: 1.0,
            beta: 1.0,
        },
        BoundaryCondition::Neumann,
        BoundaryCondition::DirichletPenalty { beta: 0.3 },
    ] {
        let zero = EllipticProblem::new(
            Domain::unit_hypercube(1).unwrap(),
            Field::constant(1.0),
            1.0,
            Field::zero(),
            Field::zero(),
            bc,
        )
        .unwrap();
        let r = solve_reference_1d_with(&zero, ReferenceBc::for_problem(&zero), 64).unwrap();
        assert!(r.values().iter().all(|&v| v == 0.0));
    }
    assert!(solve_reference_1d(&dirichlet, 8).is_err());
    let p2 = named_problem("sin2d_dirichlet", None).unwrap();
    assert!(solve_reference_1d(&p2, 64).is_err());
}

#[test]
fn reference_interpolant_tracks_exact_gradient() {
    let p = named_problem("sin1d_robin", None).unwrap();
    let r = solve_reference_1d(&p, 1024).unwrap();
    let exact = p.exact().unwrap();
    let (mut g, mut ge) = ([0.0], [0.0]);
    for k in 0..97 {
        let x = [k as f64 / 96.0];
        let v = r.value_and_gradient(&x, &mut g);
        let ve = exact.value_and_gradient(&x, &mut ge);
        assert!((v - ve).abs() < 1e-5);
        assert!((g[0] - ge[0]).abs() < 1e-4);
    }
}

#[test]
fn penalty_gap_is_linear_in_beta() {
    let base = named_problem(
        "sin1d_robin",
        Some(BoundaryCondition::DirichletPenalty { beta: 0.1 }),
    )
    .unwrap();
    let study = penalty_gap_1d(&base, &[0.2, 0.1, 0.05], 2048).unwrap();
    let gaps: Vec<f64> = study.rows.iter().map(|r| r.h1).collect();
    assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2]);
    assert!((0.9..=1.1).contains(&study.slope), "slope {}", study.slope);
    let ratio = gaps[0] / gaps[1];
    assert!((1.8..=2.2).contains(&ratio), "ratio {ratio}");
    for r in &study.rows {
        assert!(r.h1 <= study.linear_constant * r.beta * (1.0 + 1e-12));
    }
    let robin = named_problem("sin1d_robin", None).unwrap();
    assert!(penalty_gap_1d(&robin, &[0.1], 256).is_err());
}
