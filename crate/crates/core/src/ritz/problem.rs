use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

use crate::error::{check_dim, Error, Result};
use crate::function::{Field, TrialFunction};
use crate::geometry::Domain;

/// Smallest admissible coercivity constant `c_w` in `w ≥ c_w`.
pub const MIN_C_W: f64 = 1e-6;

/// Interior points used to check `w ≥ c_w` on construction.
const W_CHECK_SAMPLES: usize = 1024;

/// `αu + β ∂u/∂n = g` on ∂Ω.
///
/// Neumann is the Robin case `α = 0, β = 1`; the penalised Dirichlet
/// condition is the Robin case `α = 1, g = 0` with small `β`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundaryCondition {
    Robin { alpha: f64, beta: f64 },
    Neumann,
    DirichletPenalty { beta: f64 },
}

impl BoundaryCondition {
    /// `(α, β)` of the equivalent Robin condition.
    pub fn robin_coefficients(&self) -> (f64, f64) {
        match *self {
            BoundaryCondition::Robin { alpha, beta } => (alpha, beta),
            BoundaryCondition::Neumann => (0.0, 1.0),
            BoundaryCondition::DirichletPenalty { beta } => (1.0, beta),
        }
    }

    pub fn is_dirichlet(&self) -> bool {
        matches!(self, BoundaryCondition::DirichletPenalty { .. })
    }

    fn validate(&self) -> Result<()> {
        let (alpha, beta) = self.robin_coefficients();
        if !alpha.is_finite() {
            return Err(Error::InvalidProblem(format!(
                "α must be finite, got {alpha}"
            )));
        }
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::InvalidProblem(format!(
                "β must be positive and finite, got {beta}"
            )));
        }
        Ok(())
    }
}

/// `-Δu + w u = f` in Ω with a Robin-type boundary condition.
#[derive(Clone)]
pub struct EllipticProblem {
    name: String,
    domain: Domain,
    w: Field,
    c_w: f64,
    f: Field,
    g: Field,
    bc: BoundaryCondition,
    exact: Option<Arc<dyn TrialFunction>>,
}

impl fmt::Debug for EllipticProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EllipticProblem")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("w", &self.w)
            .field("c_w", &self.c_w)
            .field("f", &self.f)
            .field("g", &self.g)
            .field("bc", &self.bc)
            .field("exact", &self.exact.is_some())
            .finish()
    }
}

impl EllipticProblem {
    /// Validates `c_w ≥ MIN_C_W`, `w ≥ c_w` on sampled interior points,
    /// `β > 0`, and `g ≡ 0` for the penalised Dirichlet condition.
    pub fn new(
        domain: Domain,
        w: Field,
        c_w: f64,
        f: Field,
        g: Field,
        bc: BoundaryCondition,
    ) -> Result<Self> {
        bc.validate()?;
        if !(c_w >= MIN_C_W) {
            return Err(Error::InvalidProblem(format!(
                "coercivity constant c_w = {c_w} is below {MIN_C_W}"
            )));
        }
        match w.as_constant() {
            Some(c) if c < c_w => {
                return Err(Error::InvalidProblem(format!(
                    "w ≡ {c} violates w ≥ c_w = {c_w}"
                )));
            }
            Some(_) => {}
            None => {
                let pts = domain.sample_interior(W_CHECK_SAMPLES, 0x5eed)?;
                if let Some(p) = pts.iter().find(|p| !(w.eval(p) >= c_w)) {
                    return Err(Error::InvalidProblem(format!(
                        "w({p:?}) = {} violates w ≥ c_w = {c_w}",
                        w.eval(p)
                    )));
                }
            }
        }
        if bc.is_dirichlet() && !g.is_zero() {
            return Err(Error::InvalidProblem(
                "penalised Dirichlet condition requires g ≡ 0".into(),
            ));
        }
        Ok(EllipticProblem {
            name: String::from("custom"),
            domain,
            w,
            c_w,
            f,
            g,
            bc,
            exact: None,
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_exact(mut self, exact: Arc<dyn TrialFunction>) -> Result<Self> {
        check_dim(self.domain.dim(), exact.dim())?;
        self.exact = Some(exact);
        Ok(self)
    }

    /// Same `w`, `f` and domain with a different boundary condition and data.
    /// The attached exact solution is dropped.
    pub fn with_boundary(&self, bc: BoundaryCondition, g: Field) -> Result<Self> {
        let p = EllipticProblem::new(
            self.domain.clone(),
            self.w.clone(),
            self.c_w,
            self.f.clone(),
            g,
            bc,
        )?;
        Ok(p.with_name(self.name.clone()))
    }

    /// Same penalised Dirichlet problem with penalty `beta`. The attached
    /// exact solution (the Dirichlet limit) is kept.
    pub fn with_penalty(&self, beta: f64) -> Result<Self> {
        if !self.bc.is_dirichlet() {
            return Err(Error::InvalidProblem(
                "only penalised Dirichlet problems have a penalty parameter".into(),
            ));
        }
        let bc = BoundaryCondition::DirichletPenalty { beta };
        bc.validate()?;
        let mut p = self.clone();
        p.bc = bc;
        Ok(p)
    }

    /// Copy with `f` and `g` multiplied by the given factors (exact solution dropped).
    pub fn with_scaled_data(&self, f_factor: f64, g_factor: f64) -> Self {
        let mut p = self.clone();
        p.f = self.f.scaled(f_factor);
        p.g = self.g.scaled(g_factor);
        p.exact = None;
        p
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn w(&self) -> &Field {
        &self.w
    }

    pub fn c_w(&self) -> f64 {
        self.c_w
    }

    pub fn f(&self) -> &Field {
        &self.f
    }

    pub fn g(&self) -> &Field {
        &self.g
    }

    pub fn bc(&self) -> BoundaryCondition {
        self.bc
    }

    pub fn alpha(&self) -> f64 {
        self.bc.robin_coefficients().0
    }

    pub fn beta(&self) -> f64 {
        self.bc.robin_coefficients().1
    }

    pub fn exact(&self) -> Option<&Arc<dyn TrialFunction>> {
        self.exact.as_ref()
    }
}
