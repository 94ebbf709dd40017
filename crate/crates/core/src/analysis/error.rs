use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::function::TrialFunction;
use crate::geometry::Domain;
use crate::network::{Network, NetworkArch, NetworkParams};
use crate::problems::solve_reference_1d;
use crate::quadrature::trapezoid_weights;
use crate::ritz::EllipticProblem;
use crate::rng::derive_seed;
use crate::summation::kahan_sum;

/// Smallest node count of the [`ErrorRule::Grid1d`] rule.
pub const MIN_GRID_NODES: usize = 512;

/// Grid intervals used for finite-difference references.
const REFERENCE_GRID: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorRule {
    /// Uniform samples of Ω.
    #[default]
    MonteCarlo,
    /// Trapezoid rule on `n_quad` equally spaced nodes of an interval.
    Grid1d,
}

/// `‖u − u*‖` in L², the H¹ seminorm and H¹, with standard errors (zero for
/// the grid rule). All three come from the same sample set, so
/// `h1² = l2² + semi²` up to rounding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub l2_error: f64,
    pub h1_seminorm_error: f64,
    pub h1_error: f64,
    pub l2_stderr: f64,
    pub h1_seminorm_stderr: f64,
    pub h1_stderr: f64,
    pub samples: usize,
    pub rule: ErrorRule,
}

impl ErrorReport {
    /// `h1_error / ‖u*‖_{H¹}` given the norm of the exact solution.
    pub fn relative_h1(&self, exact_h1_norm: f64) -> f64 {
        self.h1_error / exact_h1_norm
    }
}

/// Integral estimate `|Ω| · mean` and its standard error.
fn integral(values: &[f64], weights: Option<&[f64]>, measure: f64) -> (f64, f64) {
    match weights {
        Some(w) => (kahan_sum(values.iter().zip(w).map(|(v, w)| v * w)), 0.0),
        None => {
            let n = values.len() as f64;
            let mean = kahan_sum(values.iter().copied()) / n;
            let var = if values.len() > 1 {
                kahan_sum(values.iter().map(|v| (v - mean) * (v - mean))) / (n - 1.0)
            } else {
                0.0
            };
            (measure * mean, measure * (var / n).sqrt())
        }
    }
}

/// Standard error of `√I` from that of `I` (delta method).
fn sqrt_with_error(i: f64, se: f64) -> (f64, f64) {
    let r = i.max(0.0).sqrt();
    (r, if r > 0.0 { se / (2.0 * r) } else { 0.0 })
}

pub fn h1_error(
    u: &dyn TrialFunction,
    exact: &dyn TrialFunction,
    domain: &Domain,
    n_quad: usize,
    seed: u64,
    rule: ErrorRule,
) -> Result<ErrorReport> {
    let d = domain.dim();
    check_dim(d, u.dim())?;
    check_dim(d, exact.dim())?;
    if n_quad == 0 {
        return Err(Error::InvalidArgument("n_quad must be positive".into()));
    }
    let (points, weights): (Vec<f64>, Option<Vec<f64>>) = match rule {
        ErrorRule::MonteCarlo => {
            let pts = domain.sample_interior(n_quad, derive_seed(seed, 0xe77))?;
            (pts.as_flat().to_vec(), None)
        }
        ErrorRule::Grid1d => {
            let (a, b) = domain.interval().ok_or_else(|| {
                Error::InvalidArgument("the grid rule needs a one-dimensional interval".into())
            })?;
            if n_quad < MIN_GRID_NODES {
                return Err(Error::InvalidArgument(format!(
                    "the grid rule needs at least {MIN_GRID_NODES} nodes, got {n_quad}"
                )));
            }
            let h = (b - a) / (n_quad - 1) as f64;
            let xs = (0..n_quad).map(|i| a + i as f64 * h).collect();
            (xs, Some(trapezoid_weights(a, b, n_quad)))
        }
    };
    let mut e0 = Vec::with_capacity(n_quad);
    let mut e1 = Vec::with_capacity(n_quad);
    let mut ga = vec![0.0; d];
    let mut gb = vec![0.0; d];
    for x in points.chunks_exact(d) {
        let va = u.value_and_gradient(x, &mut ga);
        let vb = exact.value_and_gradient(x, &mut gb);
        e0.push((va - vb) * (va - vb));
        e1.push(ga.iter().zip(&gb).map(|(a, b)| (a - b) * (a - b)).sum());
    }
    let both: Vec<f64> = e0.iter().zip(&e1).map(|(a, b)| a + b).collect();
    let measure = domain.interior_measure();
    let w = weights.as_deref();
    let (i0, s0) = integral(&e0, w, measure);
    let (i1, s1) = integral(&e1, w, measure);
    let (i2, s2) = integral(&both, w, measure);
    let (l2_error, l2_stderr) = sqrt_with_error(i0, s0);
    let (h1_seminorm_error, h1_seminorm_stderr) = sqrt_with_error(i1, s1);
    let (h1_error, h1_stderr) = sqrt_with_error(i2, s2);
    Ok(ErrorReport {
        l2_error,
        h1_seminorm_error,
        h1_error,
        l2_stderr,
        h1_seminorm_stderr,
        h1_stderr,
        samples: e0.len(),
        rule,
    })
}

pub fn h1_error_net(
    arch: &NetworkArch,
    params: &NetworkParams,
    exact: &dyn TrialFunction,
    domain: &Domain,
    n_quad: usize,
    seed: u64,
    rule: ErrorRule,
) -> Result<ErrorReport> {
    let net = Network::new(arch, params)?;
    h1_error(&net, exact, domain, n_quad, seed, rule)
}

/// Ground truth for error measurement: the attached exact solution, or a
/// fine finite-difference solution for one-dimensional problems.
pub fn reference_solution(problem: &EllipticProblem) -> Result<Arc<dyn TrialFunction>> {
    if let Some(exact) = problem.exact() {
        return Ok(exact.clone());
    }
    if problem.dim() == 1 {
        return Ok(Arc::new(solve_reference_1d(problem, REFERENCE_GRID)?));
    }
    Err(Error::Precondition(format!(
        "problem {:?} has no exact solution and no reference solver in d = {}",
        problem.name(),
        problem.dim()
    )))
}
