use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::TrialFunction;
use crate::quadrature::trapezoid_weights;
use crate::ritz::{BoundaryCondition, EllipticProblem};
use crate::summation::kahan_sum;

/// Smallest accepted number of grid intervals.
pub const MIN_GRID: usize = 16;

/// Boundary condition imposed by the finite-difference solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReferenceBc {
    /// `αu + β ∂u/∂n = g`.
    Robin { alpha: f64, beta: f64 },
    /// `u = 0` at both endpoints.
    Dirichlet,
}

impl ReferenceBc {
    /// The condition whose solution a problem's exact field describes: Robin
    /// as given, and the Dirichlet limit for the penalised Dirichlet condition.
    pub fn for_problem(problem: &EllipticProblem) -> Self {
        match problem.bc() {
            BoundaryCondition::DirichletPenalty { .. } => ReferenceBc::Dirichlet,
            bc => {
                let (alpha, beta) = bc.robin_coefficients();
                ReferenceBc::Robin { alpha, beta }
            }
        }
    }
}

/// Finite-difference solution on a uniform grid of `[a, b]`, evaluated
/// between nodes by cubic Hermite interpolation of the nodal values and
/// derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSolution1D {
    a: f64,
    b: f64,
    values: Vec<f64>,
    derivatives: Vec<f64>,
    bc: ReferenceBc,
}

impl ReferenceSolution1D {
    /// Interpolant through nodal values and derivatives on a uniform grid of `[a, b]`.
    pub fn from_nodal(
        a: f64,
        b: f64,
        values: Vec<f64>,
        derivatives: Vec<f64>,
        bc: ReferenceBc,
    ) -> Result<Self> {
        if values.len() < 2 || values.len() != derivatives.len() || !(b > a) {
            return Err(Error::InvalidArgument(
                "need at least two nodes with one derivative each on a non-empty interval".into(),
            ));
        }
        Ok(ReferenceSolution1D {
            a,
            b,
            values,
            derivatives,
            bc,
        })
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        let h = self.h();
        (0..self.values.len()).map(move |i| self.a + i as f64 * h)
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn h(&self) -> f64 {
        (self.b - self.a) / (self.values.len() - 1) as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn derivatives(&self) -> &[f64] {
        &self.derivatives
    }

    pub fn bc(&self) -> ReferenceBc {
        self.bc
    }

    /// Max-norm residual of the interior difference equations
    /// `-(u_{i-1} - 2u_i + u_{i+1})/h² + w_i u_i - f_i`.
    pub fn interior_residual(&self, problem: &EllipticProblem) -> f64 {
        let h = self.h();
        let u = &self.values;
        (1..u.len() - 1)
            .map(|i| {
                let x = [self.a + i as f64 * h];
                let lap = (u[i - 1] - 2.0 * u[i] + u[i + 1]) / (h * h);
                (-lap + problem.w().eval(&x) * u[i] - problem.f().eval(&x)).abs()
            })
            .fold(0.0, f64::max)
    }

    fn locate(&self, x: f64) -> (usize, f64) {
        let h = self.h();
        let n = self.values.len() - 1;
        let s = ((x - self.a) / h).clamp(0.0, n as f64);
        let i = (s.floor() as usize).min(n - 1);
        (i, s - i as f64)
    }
}

impl TrialFunction for ReferenceSolution1D {
    fn dim(&self) -> usize {
        1
    }

    fn value(&self, x: &[f64]) -> f64 {
        let (i, t) = self.locate(x[0]);
        let h = self.h();
        let (h00, h10, h01, h11) = hermite(t);
        h00 * self.values[i]
            + h10 * h * self.derivatives[i]
            + h01 * self.values[i + 1]
            + h11 * h * self.derivatives[i + 1]
    }

    fn value_and_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let (i, t) = self.locate(x[0]);
        let h = self.h();
        let (d00, d10, d01, d11) = hermite_derivative(t);
        grad[0] = (d00 * self.values[i] + d01 * self.values[i + 1]) / h
            + d10 * self.derivatives[i]
            + d11 * self.derivatives[i + 1];
        self.value(x)
    }
}

fn hermite(t: f64) -> (f64, f64, f64, f64) {
    let t2 = t * t;
    let t3 = t2 * t;
    (
        2.0 * t3 - 3.0 * t2 + 1.0,
        t3 - 2.0 * t2 + t,
        -2.0 * t3 + 3.0 * t2,
        t3 - t2,
    )
}

fn hermite_derivative(t: f64) -> (f64, f64, f64, f64) {
    let t2 = t * t;
    (
        6.0 * t2 - 6.0 * t,
        3.0 * t2 - 4.0 * t + 1.0,
        -6.0 * t2 + 6.0 * t,
        3.0 * t2 - 2.0 * t,
    )
}

/// Solves the tridiagonal system with sub-diagonal `lower[i]` (coupling row
/// `i` to `i-1`, `lower[0]` unused), diagonal `diag` and super-diagonal
/// `upper[i]` (coupling `i` to `i+1`) by the Thomas algorithm.
pub fn solve_tridiagonal(
    lower: &[f64],
    diag: &[f64],
    upper: &[f64],
    rhs: &[f64],
) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let scale = diag.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let singular = |pivot: f64| pivot.abs() <= 1e-14 * scale || !pivot.is_finite();
    if singular(diag[0]) {
        return Err(Error::SingularSystem(0));
    }
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let pivot = diag[i] - lower[i] * c[i - 1];
        if singular(pivot) {
            return Err(Error::SingularSystem(i));
        }
        c[i] = if i + 1 < n { upper[i] / pivot } else { 0.0 };
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / pivot;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    Ok(x)
}

/// Reference solution with the boundary condition the problem's exact field
/// refers to (see [`ReferenceBc::for_problem`]).
pub fn solve_reference_1d(problem: &EllipticProblem, n_grid: usize) -> Result<ReferenceSolution1D> {
    solve_reference_1d_with(problem, ReferenceBc::for_problem(problem), n_grid)
}

/// Second-order central differences for `-u'' + wu = f` on `n_grid`
/// intervals. The Robin rows use the one-sided stencil
/// `∂u/∂n ≈ (3u_0 - 4u_1 + u_2)/(2h)` with `u_2` eliminated through the first
/// interior equation, which keeps the system tridiagonal.
pub fn solve_reference_1d_with(
    problem: &EllipticProblem,
    bc: ReferenceBc,
    n_grid: usize,
) -> Result<ReferenceSolution1D> {
    let (a, b) = problem.domain().interval().ok_or_else(|| {
        Error::Precondition("the finite-difference reference solver is one-dimensional".into())
    })?;
    if n_grid < MIN_GRID {
        return Err(Error::InvalidArgument(format!(
            "n_grid = {n_grid} is below the minimum {MIN_GRID}"
        )));
    }
    let n = n_grid;
    let h = (b - a) / n as f64;
    let xs: Vec<f64> = (0..=n).map(|i| a + i as f64 * h).collect();
    let w: Vec<f64> = xs.iter().map(|&x| problem.w().eval(&[x])).collect();
    let f: Vec<f64> = xs.iter().map(|&x| problem.f().eval(&[x])).collect();
    let h2 = h * h;

    let mut lower = vec![0.0; n + 1];
    let mut diag = vec![0.0; n + 1];
    let mut upper = vec![0.0; n + 1];
    let mut rhs = vec![0.0; n + 1];
    for i in 1..n {
        lower[i] = -1.0;
        diag[i] = 2.0 + w[i] * h2;
        upper[i] = -1.0;
        rhs[i] = f[i] * h2;
    }
    match bc {
        ReferenceBc::Dirichlet => {
            diag[0] = 1.0;
            diag[n] = 1.0;
        }
        ReferenceBc::Robin { alpha, beta } => {
            let g0 = problem.g().eval(&[a]);
            let gn = problem.g().eval(&[b]);
            diag[0] = alpha + beta / h;
            upper[0] = beta / (2.0 * h) * (w[1] * h2 - 2.0);
            rhs[0] = g0 + beta * f[1] * h / 2.0;
            diag[n] = alpha + beta / h;
            lower[n] = beta / (2.0 * h) * (w[n - 1] * h2 - 2.0);
            rhs[n] = gn + beta * f[n - 1] * h / 2.0;
        }
    }
    let values = solve_tridiagonal(&lower, &diag, &upper, &rhs)?;

    let mut derivatives = vec![0.0; n + 1];
    for i in 1..n {
        derivatives[i] = (values[i + 1] - values[i - 1]) / (2.0 * h);
    }
    derivatives[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * h);
    derivatives[n] = (3.0 * values[n] - 4.0 * values[n - 1] + values[n - 2]) / (2.0 * h);
    Ok(ReferenceSolution1D {
        a,
        b,
        values,
        derivatives,
        bc,
    })
}

/// `‖u_R(β) − u_D‖` for one penalty parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyGap {
    pub beta: f64,
    pub l2: f64,
    pub h1_seminorm: f64,
    pub h1: f64,
}

/// Penalty gaps with the least-squares power law `gap ≈ C β^slope` and the
/// smallest `C` with `gap ≤ C β` for every row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltyStudy {
    pub rows: Vec<PenaltyGap>,
    pub slope: f64,
    pub log_constant: f64,
    pub linear_constant: f64,
}

/// H¹ distance between the Robin solutions with `α = 1, g = 0` and penalty
/// `β` and the homogeneous Dirichlet solution, for the `w` and `f` of
/// `problem`. Integrals use the trapezoid rule on the solver grid.
pub fn penalty_gap_1d(
    problem: &EllipticProblem,
    betas: &[f64],
    n_grid: usize,
) -> Result<PenaltyStudy> {
    if !problem.g().is_zero() {
        return Err(Error::Precondition("the penalty study needs g ≡ 0".into()));
    }
    let dirichlet = solve_reference_1d_with(problem, ReferenceBc::Dirichlet, n_grid)?;
    let weights = trapezoid_weights(dirichlet.a, dirichlet.b, n_grid + 1);
    let mut rows = Vec::with_capacity(betas.len());
    for &beta in betas {
        if !(beta > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "β must be positive, got {beta}"
            )));
        }
        let robin =
            solve_reference_1d_with(problem, ReferenceBc::Robin { alpha: 1.0, beta }, n_grid)?;
        let l2 = kahan_sum(
            weights
                .iter()
                .zip(robin.values.iter().zip(&dirichlet.values))
                .map(|(w, (r, d))| w * (r - d) * (r - d)),
        );
        let semi = kahan_sum(
            weights
                .iter()
                .zip(robin.derivatives.iter().zip(&dirichlet.derivatives))
                .map(|(w, (r, d))| w * (r - d) * (r - d)),
        );
        rows.push(PenaltyGap {
            beta,
            l2: l2.sqrt(),
            h1_seminorm: semi.sqrt(),
            h1: (l2 + semi).sqrt(),
        });
    }
    let (slope, log_constant) = fit_power_law(
        &rows.iter().map(|r| r.beta).collect::<Vec<_>>(),
        &rows.iter().map(|r| r.h1).collect::<Vec<_>>(),
    );
    let linear_constant = rows.iter().map(|r| r.h1 / r.beta).fold(0.0, f64::max);
    Ok(PenaltyStudy {
        rows,
        slope,
        log_constant,
        linear_constant,
    })
}

/// Least-squares fit of `ln y = c + s ln x`; returns `(s, c)`, or NaNs for
/// fewer than two points.
pub fn fit_power_law(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len().min(ys.len());
    if n < 2 {
        return (f64::NAN, f64::NAN);
    }
    let lx: Vec<f64> = xs[..n].iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys[..n].iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n as f64;
    let my = ly.iter().sum::<f64>() / n as f64;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let s = sxy / sxx;
    (s, my - s * mx)
}
