use serde::{Deserialize, Serialize};

use super::BoundValue;
use crate::error::{Error, Result};
use crate::network::{Activation, NetworkArch};
use crate::ritz::BoundaryCondition;

/// The unnamed constants of the hyper-parameter prescriptions. All default to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlanConstants {
    pub c_depth: f64,
    pub c_width: f64,
    pub c_weight: f64,
    pub c_samples: f64,
    /// The `C` in the sample-count exponent `C d ln(d+1) / (1-μ)`.
    pub c_samples_exponent: f64,
    /// `β = c_coe · ε` for the penalised Dirichlet problem.
    pub c_coe: f64,
}

impl Default for PlanConstants {
    fn default() -> Self {
        PlanConstants {
            c_depth: 1.0,
            c_width: 1.0,
            c_weight: 1.0,
            c_samples: 1.0,
            c_samples_exponent: 1.0,
            c_coe: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperParamRequest {
    pub eps: f64,
    pub d: usize,
    pub mu: f64,
    #[serde(default)]
    pub constants: PlanConstants,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    Robin,
    DirichletPenalty,
}

impl From<&BoundaryCondition> for BoundaryKind {
    fn from(bc: &BoundaryCondition) -> Self {
        if bc.is_dirichlet() {
            BoundaryKind::DirichletPenalty
        } else {
            BoundaryKind::Robin
        }
    }
}

/// Depth, parameter count, weight bound and sample counts for a target accuracy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HyperParamPlan {
    pub eps: f64,
    pub d: usize,
    pub mu: f64,
    pub kind: BoundaryKind,
    pub depth: usize,
    pub weight_count: BoundValue,
    #[serde(rename = "B_theta")]
    pub weight_bound: BoundValue,
    /// `N = M`.
    pub samples: BoundValue,
    pub beta: Option<f64>,
    pub constants: PlanConstants,
    pub warnings: Vec<String>,
}

fn as_count(v: &BoundValue) -> Option<usize> {
    v.value.filter(|x| *x <= 2f64.powi(53)).map(|x| x as usize)
}

impl HyperParamPlan {
    pub fn weight_count_usize(&self) -> Option<usize> {
        as_count(&self.weight_count)
    }

    pub fn samples_usize(&self) -> Option<usize> {
        as_count(&self.samples)
    }
}

struct Exponents {
    width: f64,
    weight: f64,
    samples: f64,
}

fn exponents(d: usize, mu: f64, kind: BoundaryKind, c_exp: f64) -> Exponents {
    let d = d as f64;
    let one_mu = 1.0 - mu;
    let samples = c_exp * d * (d + 1.0).ln() / one_mu;
    match kind {
        BoundaryKind::Robin => Exponents {
            width: d / one_mu,
            weight: (9.0 * d + 8.0) / (2.0 * one_mu),
            samples,
        },
        BoundaryKind::DirichletPenalty => Exponents {
            width: 5.0 * d / (2.0 * one_mu),
            weight: (45.0 * d + 40.0) / (4.0 * one_mu),
            samples,
        },
    }
}

fn validate(req: &HyperParamRequest) -> Result<()> {
    if !(req.eps > 0.0 && req.eps.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "ε must be positive, got {}",
            req.eps
        )));
    }
    if !(req.mu > 0.0 && req.mu < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "μ must lie in (0, 1), got {}",
            req.mu
        )));
    }
    if req.d == 0 {
        return Err(Error::InvalidArgument("d must be at least 1".into()));
    }
    let c = &req.constants;
    for (name, v) in [
        ("c_depth", c.c_depth),
        ("c_width", c.c_width),
        ("c_weight", c.c_weight),
        ("c_samples", c.c_samples),
        ("c_samples_exponent", c.c_samples_exponent),
        ("c_coe", c.c_coe),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "{name} must be positive, got {v}"
            )));
        }
    }
    Ok(())
}

/// `C ε^{-p}` rounded up to an integer when representable.
fn scaled_power(c: f64, eps: f64, p: f64, ceil: bool) -> BoundValue {
    let direct = c * eps.powf(-p);
    let v = BoundValue::new(direct, || c.log10() - p * eps.log10());
    match v.value {
        Some(x) if ceil => BoundValue::from_f64(x.ceil()),
        _ => v,
    }
}

/// Prescriptions of the convergence theorems:
///
/// ```text
///   D = max(2, ⌈C_depth ln(d+1)⌉)
///   𝔫 = ⌈C_width ε^{-a}⌉,  B = C_weight ε^{-b},  N = M = ⌈C_samples ε^{-C d ln(d+1)/(1-μ)}⌉
/// ```
///
/// with `a = d/(1-μ)`, `b = (9d+8)/(2-2μ)` for Robin and `a = 5d/(2(1-μ))`,
/// `b = (45d+40)/(4(1-μ))`, `β = C_coe ε` for the penalised Dirichlet case.
/// `ε ≥ 1` yields a warning since the prescriptions are asymptotic.
pub fn plan_hyperparams(req: &HyperParamRequest, kind: BoundaryKind) -> Result<HyperParamPlan> {
    validate(req)?;
    let c = req.constants;
    let e = exponents(req.d, req.mu, kind, c.c_samples_exponent);
    let depth = ((c.c_depth * ((req.d + 1) as f64).ln()).ceil() as usize).max(2);
    let mut warnings = Vec::new();
    if req.eps >= 1.0 {
        warnings.push(format!(
            "ε = {} ≥ 1: the prescriptions are asymptotic as ε → 0 and carry no guarantee here",
            req.eps
        ));
    }
    Ok(HyperParamPlan {
        eps: req.eps,
        d: req.d,
        mu: req.mu,
        kind,
        depth,
        weight_count: scaled_power(c.c_width, req.eps, e.width, true),
        weight_bound: scaled_power(c.c_weight, req.eps, e.weight, false),
        samples: scaled_power(c.c_samples, req.eps, e.samples, true),
        beta: (kind == BoundaryKind::DirichletPenalty).then_some(c.c_coe * req.eps),
        constants: c,
        warnings,
    })
}

/// Plans for each `ε` with the same exponents but `C_width` (and `C_samples`
/// when `max_samples` is given) chosen so the smallest `ε` yields exactly
/// `max_params` parameters (`max_samples` samples).
pub fn scaled_constant_plans(
    eps_list: &[f64],
    d: usize,
    mu: f64,
    kind: BoundaryKind,
    base: PlanConstants,
    max_params: usize,
    max_samples: Option<usize>,
) -> Result<Vec<HyperParamPlan>> {
    let Some(eps_min) = eps_list.iter().copied().reduce(f64::min) else {
        return Ok(Vec::new());
    };
    let e = exponents(d, mu, kind, base.c_samples_exponent);
    let mut constants = base;
    constants.c_width = fit_constant(max_params, eps_min, e.width);
    if let Some(ms) = max_samples {
        constants.c_samples = fit_constant(ms, eps_min, e.samples);
    }
    eps_list
        .iter()
        .map(|&eps| {
            let mut plan = plan_hyperparams(
                &HyperParamRequest {
                    eps,
                    d,
                    mu,
                    constants,
                },
                kind,
            )?;
            plan.warnings.push(format!(
                "scaled constants: c_width = {:.6e}, c_samples = {:.6e}",
                constants.c_width, constants.c_samples
            ));
            Ok(plan)
        })
        .collect()
}

/// Largest `c` (up to rounding) with `⌈c ε^{-p}⌉ = target`.
fn fit_constant(target: usize, eps: f64, p: f64) -> f64 {
    let mut c = target as f64 * eps.powf(p);
    while c > 0.0 && (c * eps.powf(-p)).ceil() > target as f64 {
        c *= 1.0 - 4.0 * f64::EPSILON;
    }
    c
}

/// Uniform-width network of the plan's depth with the largest width whose
/// parameter count does not exceed the plan's `𝔫` (at least width 1).
pub fn arch_for_plan(plan: &HyperParamPlan, activation: Activation) -> Result<NetworkArch> {
    let target = plan.weight_count_usize().ok_or_else(|| {
        Error::InvalidArgument(format!(
            "planned parameter count {} is too large to instantiate",
            plan.weight_count
        ))
    })?;
    let bound = plan.weight_bound.value.ok_or_else(|| {
        Error::InvalidArgument(format!(
            "planned weight bound {} overflows",
            plan.weight_bound
        ))
    })?;
    if bound < 1.0 {
        return Err(Error::InvalidArgument(format!(
            "planned weight bound {bound} is below 1; raise c_weight"
        )));
    }
    let count = |w: usize| {
        let (d, l) = (plan.d, plan.depth);
        d * w + w + (l - 2) * (w * w + w) + w + 1
    };
    let mut width = 1;
    while count(width + 1) <= target {
        width += 1;
    }
    NetworkArch::uniform(plan.d, plan.depth, width, activation, bound)
}
