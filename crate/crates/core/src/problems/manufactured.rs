use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::{Field, TrialFunction};
use crate::geometry::Domain;
use crate::ritz::{BoundaryCondition, EllipticProblem};

/// Width `σ` of [`ManufacturedKind::GaussianBump`].
pub const BUMP_WIDTH: f64 = 0.25;

/// Centre coordinate (in every axis) of [`ManufacturedKind::GaussianBump`].
pub const BUMP_CENTER: f64 = 0.5;

/// Boundary points checked for a vanishing trace.
const TRACE_CHECK_SAMPLES: usize = 512;
const TRACE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManufacturedKind {
    /// `Π_k sin(π x_k)`
    SinProduct,
    /// `exp(-|x - c|² / (2σ²))` with `c = (½, …, ½)`, `σ = ¼`
    GaussianBump,
    /// `Π_k x_k (1 - x_k)`
    Quadratic,
}

/// A closed-form smooth function with analytic gradient and Laplacian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedSolution {
    kind: ManufacturedKind,
    dim: usize,
}

impl ManufacturedSolution {
    pub fn new(kind: ManufacturedKind, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument(
                "dimension must be at least 1".into(),
            ));
        }
        Ok(ManufacturedSolution { kind, dim })
    }

    pub fn kind(&self) -> ManufacturedKind {
        self.kind
    }

    pub fn description(&self) -> String {
        match self.kind {
            ManufacturedKind::SinProduct => format!("prod_k sin(pi x_k), d = {}", self.dim),
            ManufacturedKind::GaussianBump => format!(
                "exp(-|x - {BUMP_CENTER}|^2 / (2 * {BUMP_WIDTH}^2)), d = {}",
                self.dim
            ),
            ManufacturedKind::Quadratic => format!("prod_k x_k (1 - x_k), d = {}", self.dim),
        }
    }

    pub fn laplacian(&self, x: &[f64]) -> f64 {
        match self.kind {
            ManufacturedKind::SinProduct => -(self.dim as f64) * PI * PI * self.value(x),
            ManufacturedKind::GaussianBump => {
                let s2 = BUMP_WIDTH * BUMP_WIDTH;
                let r2: f64 = x.iter().map(|v| (v - BUMP_CENTER).powi(2)).sum();
                (r2 / (s2 * s2) - self.dim as f64 / s2) * self.value(x)
            }
            ManufacturedKind::Quadratic => {
                let q: Vec<f64> = x.iter().map(|v| v * (1.0 - v)).collect();
                (0..self.dim).map(|k| -2.0 * product_except(&q, k)).sum()
            }
        }
    }
}

fn product_except(v: &[f64], k: usize) -> f64 {
    v.iter()
        .enumerate()
        .filter(|&(j, _)| j != k)
        .map(|(_, x)| x)
        .product()
}

impl TrialFunction for ManufacturedSolution {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        match self.kind {
            ManufacturedKind::SinProduct => x.iter().map(|v| (PI * v).sin()).product(),
            ManufacturedKind::GaussianBump => {
                let r2: f64 = x.iter().map(|v| (v - BUMP_CENTER).powi(2)).sum();
                (-r2 / (2.0 * BUMP_WIDTH * BUMP_WIDTH)).exp()
            }
            ManufacturedKind::Quadratic => x.iter().map(|v| v * (1.0 - v)).product(),
        }
    }

    fn value_and_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        match self.kind {
            ManufacturedKind::SinProduct => {
                let s: Vec<f64> = x.iter().map(|v| (PI * v).sin()).collect();
                for (k, g) in grad.iter_mut().enumerate() {
                    *g = PI * (PI * x[k]).cos() * product_except(&s, k);
                }
                s.iter().product()
            }
            ManufacturedKind::GaussianBump => {
                let u = self.value(x);
                let s2 = BUMP_WIDTH * BUMP_WIDTH;
                for (g, v) in grad.iter_mut().zip(x) {
                    *g = -(v - BUMP_CENTER) / s2 * u;
                }
                u
            }
            ManufacturedKind::Quadratic => {
                let q: Vec<f64> = x.iter().map(|v| v * (1.0 - v)).collect();
                for (k, g) in grad.iter_mut().enumerate() {
                    *g = (1.0 - 2.0 * x[k]) * product_except(&q, k);
                }
                q.iter().product()
            }
        }
    }
}

/// Problem on `domain` whose exact solution is `kind`:
/// `f = -Δu + w u` and `g = αu + β ∂u/∂n` with the outward normal of `domain`.
///
/// For the penalised Dirichlet condition the attached solution is the
/// Dirichlet limit, `g ≡ 0`, and `u` must vanish on ∂Ω.
pub fn make_manufactured(
    domain: Domain,
    kind: ManufacturedKind,
    w: Field,
    c_w: f64,
    bc: BoundaryCondition,
) -> Result<EllipticProblem> {
    let exact = Arc::new(ManufacturedSolution::new(kind, domain.dim())?);
    let u = exact.clone();
    let w_in_f = w.clone();
    let f = Field::new(move |x| -u.laplacian(x) + w_in_f.eval(x) * u.value(x));
    let g = if bc.is_dirichlet() {
        let boundary = domain.sample_boundary(TRACE_CHECK_SAMPLES, 0x7ace)?;
        if let Some(y) = boundary.iter().find(|y| exact.value(y).abs() > TRACE_TOL) {
            return Err(Error::InvalidProblem(format!(
                "{} does not vanish on the boundary (u({y:?}) = {})",
                exact.description(),
                exact.value(y)
            )));
        }
        Field::zero()
    } else {
        let (alpha, beta) = bc.robin_coefficients();
        let u = exact.clone();
        let dom = domain.clone();
        Field::new(move |y| {
            let d = y.len();
            let mut grad = vec![0.0; d];
            let mut normal = vec![0.0; d];
            let v = u.value_and_gradient(y, &mut grad);
            dom.outward_normal(y, &mut normal);
            let dn: f64 = grad.iter().zip(&normal).map(|(a, b)| a * b).sum();
            alpha * v + beta * dn
        })
    };
    let name = format!("{:?}", kind);
    let problem = EllipticProblem::new(domain, w, c_w, f, g, bc)?;
    problem.with_name(name).with_exact(exact)
}

/// Names accepted by [`named_problem`].
pub const NAMED_PROBLEMS: [&str; 4] = [
    "sin1d_robin",
    "sin2d_dirichlet",
    "gauss2d_robin",
    "quad1d_robin",
];

/// Penalty parameter of `sin2d_dirichlet` unless overridden.
pub const DEFAULT_DIRICHLET_BETA: f64 = 0.1;

/// Built-in manufactured problems on the unit hypercube, `w ≡ 1`.
///
/// * `sin1d_robin`: `sin(πx)` with `α = β = 1`.
/// * `sin2d_dirichlet`: `sin(πx)sin(πy)` with the penalised Dirichlet condition.
/// * `gauss2d_robin`: Gaussian bump with `α = β = 1`.
/// * `quad1d_robin`: `x(1 - x)` with `α = β = 1`.
///
/// `bc` replaces the default boundary condition when given.
pub fn named_problem(name: &str, bc: Option<BoundaryCondition>) -> Result<EllipticProblem> {
    let robin = BoundaryCondition::Robin {
        alpha: 1.0,
        beta: 1.0,
    };
    let (dim, kind, default_bc) = match name {
        "sin1d_robin" => (1, ManufacturedKind::SinProduct, robin),
        "sin2d_dirichlet" => (
            2,
            ManufacturedKind::SinProduct,
            BoundaryCondition::DirichletPenalty {
                beta: DEFAULT_DIRICHLET_BETA,
            },
        ),
        "gauss2d_robin" => (2, ManufacturedKind::GaussianBump, robin),
        "quad1d_robin" => (1, ManufacturedKind::Quadratic, robin),
        other => {
            return Err(Error::InvalidProblem(format!(
                "unknown problem {other:?}; expected one of {NAMED_PROBLEMS:?}"
            )))
        }
    };
    let domain = Domain::unit_hypercube(dim)?;
    let p = make_manufactured(
        domain,
        kind,
        Field::constant(1.0),
        1.0,
        bc.unwrap_or(default_bc),
    )?;
    Ok(p.with_name(name))
}
