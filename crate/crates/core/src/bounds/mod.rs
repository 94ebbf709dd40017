//! Closed-form bounds on the statistical error of the Ritz loss.
//!
//! For a network class with depth `D`, `𝔫` parameters, hidden widths
//! `n_1 … n_{D-1}` (product `Π`) and weight bound `B`, the five integrand
//! classes `ℱ_1 … ℱ_5` (`|∇u|²`, `wu²`, `fu`, `u²`, `gu` up to data factors)
//! have sup-norm bounds `B_i` and θ-Lipschitz constants `L_i`:
//!
//! ```text
//!   B_1 = d Π² B^{2D}            L_1 = 2d √𝔫 (D+1) B^{3D} Π³
//!   B_3 = B_5 = (n_{D-1}+1) B    L_2 = L_4 = 2√𝔫 B^D (n_{D-1}+1) Π
//!   B_2 = B_4 = B_3²             L_3 = L_5 = √𝔫 B^{D-1} Π
//! ```
//!
//! Covering numbers of the parameter box transfer to each class through
//! `L_i`, and Dudley chaining turns them into Rademacher bounds.

mod plan;
mod value;

pub mod oracle;

pub use plan::{
    arch_for_plan, plan_hyperparams, scaled_constant_plans, BoundaryKind, HyperParamPlan,
    HyperParamRequest, PlanConstants,
};
pub use value::BoundValue;

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::network::NetworkArch;
use crate::quadrature::composite_gauss_legendre;

/// Sup-norm bounds `B_1 … B_5`, θ-Lipschitz constants `L_1 … L_5`, and the
/// θ-Lipschitz constants of `u` and of `∂u/∂x_p`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassConstants {
    pub b: [BoundValue; 5],
    pub l: [BoundValue; 5],
    pub value_lipschitz: BoundValue,
    pub derivative_lipschitz: BoundValue,
}

struct Shape {
    d: f64,
    depth: i32,
    n_params: f64,
    prod: f64,
    last: f64,
    bound: f64,
}

impl Shape {
    fn of(arch: &NetworkArch) -> Self {
        Shape {
            d: arch.input_dim() as f64,
            depth: arch.depth() as i32,
            n_params: arch.param_count() as f64,
            prod: arch.hidden_width_product(),
            last: arch.last_hidden_width() as f64,
            bound: arch.weight_bound(),
        }
    }
}

pub fn class_constants(arch: &NetworkArch) -> ClassConstants {
    let s = Shape::of(arch);
    let dd = s.depth;
    let lg = f64::log10;
    let sq = s.n_params.sqrt();

    let b1 = BoundValue::new(s.d * s.prod * s.prod * s.bound.powi(2 * dd), || {
        lg(s.d) + 2.0 * lg(s.prod) + 2.0 * dd as f64 * lg(s.bound)
    });
    let b3 = BoundValue::new((s.last + 1.0) * s.bound, || lg(s.last + 1.0) + lg(s.bound));
    let b2 = BoundValue::new(b3.get() * b3.get(), || 2.0 * b3.log10);

    let l1 = BoundValue::new(
        2.0 * s.d * sq * (dd + 1) as f64 * s.bound.powi(3 * dd) * s.prod.powi(3),
        || {
            lg(2.0 * s.d)
                + 0.5 * lg(s.n_params)
                + lg((dd + 1) as f64)
                + 3.0 * dd as f64 * lg(s.bound)
                + 3.0 * lg(s.prod)
        },
    );
    let l2 = BoundValue::new(
        2.0 * sq * s.bound.powi(dd) * (s.last + 1.0) * s.prod,
        || lg(2.0) + 0.5 * lg(s.n_params) + dd as f64 * lg(s.bound) + lg(s.last + 1.0) + lg(s.prod),
    );
    let l3 = BoundValue::new(sq * s.bound.powi(dd - 1) * s.prod, || {
        0.5 * lg(s.n_params) + (dd - 1) as f64 * lg(s.bound) + lg(s.prod)
    });
    let dl = BoundValue::new(
        sq * (dd + 1) as f64 * s.bound.powi(2 * dd) * s.prod * s.prod,
        || {
            0.5 * lg(s.n_params)
                + lg((dd + 1) as f64)
                + 2.0 * dd as f64 * lg(s.bound)
                + 2.0 * lg(s.prod)
        },
    );
    ClassConstants {
        b: [b1, b2, b3, b2, b3],
        l: [l1, l2, l3, l2, l3],
        value_lipschitz: l3,
        derivative_lipschitz: dl,
    }
}

fn check_class(i: usize) -> Result<usize> {
    if (1..=5).contains(&i) {
        Ok(i - 1)
    } else {
        Err(Error::InvalidArgument(format!(
            "class index must be in 1..=5, got {i}"
        )))
    }
}

/// `(2B√n/ε)^n`, the covering-number bound of `[-B, B]^n` in the Euclidean norm.
pub fn covering_bound_euclidean(eps: f64, radius: f64, n: usize) -> Result<BoundValue> {
    if !(eps > 0.0) || !(radius > 0.0) || n == 0 {
        return Err(Error::InvalidArgument(format!(
            "covering bound needs ε > 0, B > 0, n ≥ 1 (got {eps}, {radius}, {n})"
        )));
    }
    let base = 2.0 * radius * (n as f64).sqrt() / eps;
    let direct = i32::try_from(n).map_or(f64::INFINITY, |k| base.powi(k));
    Ok(BoundValue::new(direct, || n as f64 * base.log10()))
}

/// Natural log of the covering-number bound of class `i` at scale `ε`:
/// `max(0, 𝔫 ln(2 L_i B √𝔫 / ε))`.
pub fn covering_bound_class(i: usize, arch: &NetworkArch, eps: f64) -> Result<f64> {
    let k = check_class(i)?;
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "ε must be positive, got {eps}"
        )));
    }
    let c = class_constants(arch);
    let n = arch.param_count() as f64;
    let ln_arg = (2.0f64).ln() + c.l[k].ln() + arch.weight_bound().ln() + 0.5 * n.ln() - eps.ln();
    Ok((n * ln_arg).max(0.0))
}

/// Massart's bound `(D/N) √(2 ln |A|)` with `D = max ‖a‖₂` for a finite set
/// `A ⊂ ℝ^N`.
pub fn massart_bound(set: &[Vec<f64>]) -> Result<f64> {
    let first = set
        .first()
        .ok_or_else(|| Error::InvalidArgument("Massart's bound needs a non-empty set".into()))?;
    let n = first.len();
    if n == 0 || set.iter().any(|a| a.len() != n) {
        return Err(Error::InvalidArgument(
            "set members must share a positive length".into(),
        ));
    }
    let radius = set
        .iter()
        .map(|a| a.iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    Ok(radius / n as f64 * (2.0 * (set.len() as f64).ln()).sqrt())
}

/// Chaining bound for class `i` with `δ = 1/√N`:
/// `4/√N + (6 √𝔫 B_i / √N) √(ln(2 L_i B √𝔫 √N))`.
///
/// Fails when `1/√N ≥ B_i / 2`, i.e. when `N` is too small for the class.
pub fn chaining_rademacher_bound(
    i: usize,
    arch: &NetworkArch,
    n_samples: usize,
) -> Result<BoundValue> {
    let k = check_class(i)?;
    if n_samples == 0 {
        return Err(Error::InvalidArgument("N must be at least 1".into()));
    }
    let c = class_constants(arch);
    let (bi, li) = (c.b[k], c.l[k]);
    let nn = n_samples as f64;
    let sqrt_n = nn.sqrt();
    let delta = 1.0 / sqrt_n;
    if delta.log10() >= bi.log10 - 2f64.log10() {
        return Err(Error::Precondition(format!(
            "δ = 1/√N = {delta} is not below B_{i}/2 = {}; N = {n_samples} is too small for this class",
            BoundValue::from_log10(bi.log10 - 2f64.log10())
        )));
    }
    let np = arch.param_count() as f64;
    let bound = arch.weight_bound();
    let ln_arg = match li.value {
        Some(l) if (2.0 * l * bound * np.sqrt() * sqrt_n).is_finite() => {
            (2.0 * l * bound * np.sqrt() * sqrt_n).ln()
        }
        _ => 2f64.ln() + li.ln() + bound.ln() + 0.5 * np.ln() + 0.5 * nn.ln(),
    };
    let first = 4.0 / sqrt_n;
    let direct = first + 6.0 * np.sqrt() * bi.get() / sqrt_n * ln_arg.sqrt();
    Ok(BoundValue::new(direct, || {
        let second =
            6f64.log10() + 0.5 * np.log10() + bi.log10 - 0.5 * nn.log10() + 0.5 * ln_arg.log10();
        log10_add(first.log10(), second)
    }))
}

fn log10_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (1.0 + 10f64.powf(lo - hi)).log10()
}

/// The chaining bound with `δ` optimised numerically.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainingOptimum {
    pub delta: f64,
    pub bound: f64,
}

/// `inf_δ 4δ + (12/√N) ∫_δ^{B_i/2} √(ln 𝒞(ε, ℱ_i)) dε` with the class
/// covering bound inside the integral, minimised over `δ ∈ (0, B_i/2)` by
/// golden-section search in `ln δ`. Needs `B_i`, `L_i` representable in `f64`.
pub fn chaining_rademacher_optimized(
    i: usize,
    arch: &NetworkArch,
    n_samples: usize,
) -> Result<ChainingOptimum> {
    let k = check_class(i)?;
    if n_samples == 0 {
        return Err(Error::InvalidArgument("N must be at least 1".into()));
    }
    let c = class_constants(arch);
    let (Some(bi), Some(li)) = (c.b[k].value, c.l[k].value) else {
        return Err(Error::Precondition(format!(
            "class {i} constants exceed the floating-point range"
        )));
    };
    let np = arch.param_count() as f64;
    let ln_k = (2.0 * li * arch.weight_bound() * np.sqrt()).ln();
    let upper = 0.5 * bi;
    let sqrt_n = (n_samples as f64).sqrt();
    // ∫_δ^{upper} √(𝔫 ln(K/ε)) dε with ε = K e^{-t²}: 2√𝔫 K ∫ t² e^{-t²} dt.
    let objective = |ln_delta: f64| -> f64 {
        let t_hi = (ln_k - ln_delta).max(0.0).sqrt();
        let t_lo = (ln_k - upper.ln()).max(0.0).sqrt();
        let integral = if t_hi > t_lo {
            composite_gauss_legendre(t_lo, t_hi, 200)
                .into_iter()
                .map(|(t, w)| w * 2.0 * np.sqrt() * t * t * (ln_k - t * t).exp())
                .sum::<f64>()
        } else {
            0.0
        };
        4.0 * ln_delta.exp() + 12.0 / sqrt_n * integral
    };
    let hi = upper.ln();
    let lo = hi - 60.0;
    let ln_delta = golden_section(objective, lo, hi, 1e-10);
    Ok(ChainingOptimum {
        delta: ln_delta.exp(),
        bound: objective(ln_delta),
    })
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// `(C/β) · d √D 𝔫^{2D} B^{2D} / √N · √(ln(d D 𝔫 B N))`, requiring `N = M`.
pub fn statistical_error_bound(
    arch: &NetworkArch,
    n: usize,
    m: usize,
    beta: f64,
    c_aggregate: f64,
) -> Result<BoundValue> {
    if n != m {
        return Err(Error::Precondition(format!(
            "the statistical-error bound assumes N = M (got N = {n}, M = {m})"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("N must be at least 1".into()));
    }
    if !(beta > 0.0) || !(c_aggregate >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need β > 0 and C ≥ 0 (got β = {beta}, C = {c_aggregate})"
        )));
    }
    let s = Shape::of(arch);
    let nn = n as f64;
    let dd = s.depth as f64;
    let ln_arg = (s.d.ln() + dd.ln() + s.n_params.ln() + s.bound.ln() + nn.ln()).max(0.0);
    let direct = c_aggregate / beta
        * (s.d * dd.sqrt() * s.n_params.powi(2 * s.depth) * s.bound.powi(2 * s.depth) / nn.sqrt())
        * ln_arg.sqrt();
    Ok(BoundValue::new(direct, || {
        c_aggregate.log10() - beta.log10()
            + s.d.log10()
            + 0.5 * dd.log10()
            + 2.0 * dd * (s.n_params.log10() + s.bound.log10())
            - 0.5 * nn.log10()
            + 0.5 * ln_arg.log10()
    }))
}

/// `C · β`, the bound on `‖u_R − u_D‖_{H¹}` for the penalised Dirichlet problem.
pub fn penalty_gap_bound(beta: f64, c_coe: f64) -> Result<f64> {
    if !(beta >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "β must be nonnegative, got {beta}"
        )));
    }
    Ok(c_coe * beta)
}

/// Bounds for one integrand class.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassBound {
    pub class: usize,
    #[serde(rename = "B")]
    pub b: BoundValue,
    #[serde(rename = "L")]
    pub l: BoundValue,
    /// `ln 𝒞(1/√N, ℱ_i, ‖·‖_∞)` bound.
    pub ln_covering_at_delta: f64,
    pub rademacher: Option<BoundValue>,
    pub rademacher_note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundInputs {
    pub d: usize,
    pub depth: usize,
    pub widths: Vec<usize>,
    pub n_params: usize,
    #[serde(rename = "B_theta")]
    pub weight_bound: f64,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub alpha: f64,
    pub beta: f64,
    pub c_aggregate: f64,
}

/// Every bound for one architecture and sample size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub inputs: BoundInputs,
    pub classes: Vec<ClassBound>,
    pub value_lipschitz: BoundValue,
    pub derivative_lipschitz: BoundValue,
    pub statistical_bound: BoundValue,
}

pub fn bound_report(
    arch: &NetworkArch,
    n: usize,
    m: usize,
    alpha: f64,
    beta: f64,
    c_aggregate: f64,
) -> Result<BoundReport> {
    let statistical_bound = statistical_error_bound(arch, n, m, beta, c_aggregate)?;
    let c = class_constants(arch);
    let delta = 1.0 / (n as f64).sqrt();
    let mut classes = Vec::with_capacity(5);
    for i in 1..=5 {
        let (rademacher, rademacher_note) = match chaining_rademacher_bound(i, arch, n) {
            Ok(v) => (Some(v), None),
            Err(e) => (None, Some(e.to_string())),
        };
        classes.push(ClassBound {
            class: i,
            b: c.b[i - 1],
            l: c.l[i - 1],
            ln_covering_at_delta: covering_bound_class(i, arch, delta)?,
            rademacher,
            rademacher_note,
        });
    }
    Ok(BoundReport {
        inputs: BoundInputs {
            d: arch.input_dim(),
            depth: arch.depth(),
            widths: arch.widths().to_vec(),
            n_params: arch.param_count(),
            weight_bound: arch.weight_bound(),
            n,
            m,
            alpha,
            beta,
            c_aggregate,
        },
        classes,
        value_lipschitz: c.value_lipschitz,
        derivative_lipschitz: c.derivative_lipschitz,
        statistical_bound,
    })
}

impl BoundReport {
    /// Plain-text table of the per-class quantities.
    pub fn to_table(&self) -> String {
        let i = &self.inputs;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "widths {:?}  depth {}  params {}  B_theta {}  N {}  M {}  alpha {}  beta {}  C {}",
            i.widths, i.depth, i.n_params, i.weight_bound, i.n, i.m, i.alpha, i.beta, i.c_aggregate
        );
        let _ = writeln!(
            out,
            "{:<6} {:>16} {:>16} {:>18} {:>16}",
            "class", "B_i", "L_i", "ln cover(1/sqrtN)", "Rademacher"
        );
        for c in &self.classes {
            let rad = c
                .rademacher
                .map_or_else(|| "n/a".to_string(), |r| r.to_string());
            let _ = writeln!(
                out,
                "{:<6} {:>16} {:>16} {:>18.6e} {:>16}",
                c.class,
                c.b.to_string(),
                c.l.to_string(),
                c.ln_covering_at_delta,
                rad
            );
        }
        let _ = writeln!(
            out,
            "value Lipschitz in theta       {}",
            self.value_lipschitz
        );
        let _ = writeln!(
            out,
            "derivative Lipschitz in theta  {}",
            self.derivative_lipschitz
        );
        let _ = writeln!(
            out,
            "statistical error bound        {}",
            self.statistical_bound
        );
        out
    }
}
