use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::function::TrialFunction;
use crate::geometry::{PointSet, SampleBatch};
use crate::network::{Network, NetworkArch, NetworkParams};
use crate::quadrature::composite_gauss_legendre;
use crate::rng::derive_seed;
use crate::summation::{kahan_sum, KahanSum};

use super::EllipticProblem;

/// The five terms of `ℒ` (or `ℒ̂`) and their sum.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    pub l4: f64,
    pub l5: f64,
    pub total: f64,
}

impl LossBreakdown {
    /// Builds the breakdown with `total` computed by compensated summation.
    pub fn from_terms(terms: [f64; 5]) -> Self {
        let [l1, l2, l3, l4, l5] = terms;
        LossBreakdown {
            l1,
            l2,
            l3,
            l4,
            l5,
            total: kahan_sum(terms),
        }
    }

    pub fn terms(&self) -> [f64; 5] {
        [self.l1, self.l2, self.l3, self.l4, self.l5]
    }

    pub fn is_finite(&self) -> bool {
        self.terms().iter().all(|t| t.is_finite()) && self.total.is_finite()
    }

    /// CSV header fragment matching [`LossBreakdown::csv_fields`].
    pub const CSV_HEADER: [&'static str; 6] = ["l1", "l2", "l3", "l4", "l5", "total"];

    pub fn csv_fields(&self) -> [f64; 6] {
        [self.l1, self.l2, self.l3, self.l4, self.l5, self.total]
    }
}

/// A sample batch with `w`, `f` and `g` evaluated once at its points, plus
/// the per-point weights `|Ω|/N` and `|∂Ω|/(βM)`.
#[derive(Debug, Clone)]
pub struct PreparedBatch<'a> {
    batch: &'a SampleBatch,
    pub w: Vec<f64>,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    interior_weight: f64,
    boundary_weight: f64,
    alpha: f64,
}

impl<'a> PreparedBatch<'a> {
    pub fn new(problem: &EllipticProblem, batch: &'a SampleBatch) -> Result<Self> {
        if batch.n() == 0 {
            return Err(Error::EmptyBatch("interior"));
        }
        if batch.m() == 0 {
            return Err(Error::EmptyBatch("boundary"));
        }
        check_dim(problem.dim(), batch.dim())?;
        check_dim(problem.dim(), batch.boundary.dim())?;
        let eval = |field: &crate::function::Field, pts: &PointSet| -> Vec<f64> {
            match field.as_constant() {
                Some(c) => vec![c; pts.len()],
                None => pts.iter().map(|p| field.eval(p)).collect(),
            }
        };
        let (omega, gamma) = problem.domain().measures();
        Ok(PreparedBatch {
            batch,
            w: eval(problem.w(), &batch.interior),
            f: eval(problem.f(), &batch.interior),
            g: eval(problem.g(), &batch.boundary),
            interior_weight: omega / batch.n() as f64,
            boundary_weight: gamma / (problem.beta() * batch.m() as f64),
            alpha: problem.alpha(),
        })
    }

    pub fn batch(&self) -> &SampleBatch {
        self.batch
    }

    pub fn dim(&self) -> usize {
        self.batch.dim()
    }

    pub fn interior_points(&self) -> std::slice::ChunksExact<'a, f64> {
        self.batch.interior.iter()
    }

    pub fn boundary_points(&self) -> std::slice::ChunksExact<'a, f64> {
        self.batch.boundary.iter()
    }

    /// `|Ω| / N`.
    pub fn interior_weight(&self) -> f64 {
        self.interior_weight
    }

    /// `|∂Ω| / (β M)`.
    pub fn boundary_weight(&self) -> f64 {
        self.boundary_weight
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// Compensated running sums of the five loss integrands.
#[derive(Debug, Clone)]
pub struct LossAccumulator {
    sums: [KahanSum; 5],
    interior_weight: f64,
    boundary_weight: f64,
    alpha: f64,
}

impl LossAccumulator {
    pub fn new(batch: &PreparedBatch<'_>) -> Self {
        Self::with_weights(batch.interior_weight, batch.boundary_weight, batch.alpha)
    }

    pub fn with_weights(interior_weight: f64, boundary_weight: f64, alpha: f64) -> Self {
        LossAccumulator {
            sums: [KahanSum::new(); 5],
            interior_weight,
            boundary_weight,
            alpha,
        }
    }

    #[inline]
    pub fn add_interior(&mut self, u: f64, grad: &[f64], w: f64, f: f64) {
        let g2: f64 = grad.iter().map(|g| g * g).sum();
        self.sums[0].add(g2);
        self.sums[1].add(w * u * u);
        self.sums[2].add(f * u);
    }

    #[inline]
    pub fn add_boundary(&mut self, u: f64, g: f64) {
        self.sums[3].add(u * u);
        self.sums[4].add(g * u);
    }

    pub fn finish(&self) -> LossBreakdown {
        let s = self.sums.map(|k| k.value());
        let ci = self.interior_weight;
        let cb = self.boundary_weight;
        LossBreakdown::from_terms([
            0.5 * ci * s[0],
            0.5 * ci * s[1],
            -ci * s[2],
            0.5 * self.alpha * cb * s[3],
            -cb * s[4],
        ])
    }
}

/// `ℒ̂(u_θ)` on `batch`.
pub fn empirical_loss(
    arch: &NetworkArch,
    params: &NetworkParams,
    batch: &SampleBatch,
    problem: &EllipticProblem,
) -> Result<LossBreakdown> {
    check_dim(arch.input_dim(), problem.dim())?;
    let net = Network::new(arch, params)?;
    empirical_loss_fn(&net, batch, problem)
}

/// `ℒ̂(u)` on `batch` for any trial function.
pub fn empirical_loss_fn(
    u: &dyn TrialFunction,
    batch: &SampleBatch,
    problem: &EllipticProblem,
) -> Result<LossBreakdown> {
    let prepared = PreparedBatch::new(problem, batch)?;
    empirical_loss_prepared(u, &prepared)
}

pub fn empirical_loss_prepared(
    u: &dyn TrialFunction,
    batch: &PreparedBatch<'_>,
) -> Result<LossBreakdown> {
    check_dim(batch.dim(), u.dim())?;
    let mut acc = LossAccumulator::new(batch);
    let mut grad = vec![0.0; batch.dim()];
    for (i, x) in batch.interior_points().enumerate() {
        let v = u.value_and_gradient(x, &mut grad);
        acc.add_interior(v, &grad, batch.w[i], batch.f[i]);
    }
    for (j, y) in batch.boundary_points().enumerate() {
        acc.add_boundary(u.value(y), batch.g[j]);
    }
    Ok(acc.finish())
}

/// How `ℒ` is integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegrationRule {
    /// Fresh uniform samples; `n_quad` interior and `n_quad` boundary points.
    #[default]
    MonteCarlo,
    /// Composite 5-point Gauss–Legendre with `n_quad / 5` panels on an
    /// interval; the boundary integral is the exact two-point sum. Only for `d = 1`.
    GaussLegendre1d,
}

/// Estimate of `ℒ` with per-term standard errors (all zero for quadrature).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossEstimate {
    pub loss: LossBreakdown,
    pub stderr: LossBreakdown,
}

/// Smallest admissible `n_quad` for [`continuous_loss_estimate`].
pub const MIN_QUAD_POINTS: usize = 1000;

/// `ℒ(u)` estimated independently of any training batch.
///
/// The Monte-Carlo path draws from seeds derived from `seed`, so passing the
/// training seed does not reproduce the training points.
pub fn continuous_loss_estimate(
    u: &dyn TrialFunction,
    problem: &EllipticProblem,
    n_quad: usize,
    seed: u64,
    rule: IntegrationRule,
) -> Result<LossEstimate> {
    if n_quad < MIN_QUAD_POINTS {
        return Err(Error::InvalidArgument(format!(
            "n_quad = {n_quad} is below the minimum {MIN_QUAD_POINTS}"
        )));
    }
    check_dim(problem.dim(), u.dim())?;
    match rule {
        IntegrationRule::MonteCarlo => monte_carlo(u, problem, n_quad, seed),
        IntegrationRule::GaussLegendre1d => gauss_legendre_1d(u, problem, n_quad),
    }
}

/// [`continuous_loss_estimate`] for a network.
pub fn continuous_loss_estimate_net(
    arch: &NetworkArch,
    params: &NetworkParams,
    problem: &EllipticProblem,
    n_quad: usize,
    seed: u64,
    rule: IntegrationRule,
) -> Result<LossEstimate> {
    let net = Network::new(arch, params)?;
    continuous_loss_estimate(&net, problem, n_quad, seed, rule)
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = kahan_sum(values.iter().copied()) / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = kahan_sum(values.iter().map(|v| (v - mean) * (v - mean))) / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn monte_carlo(
    u: &dyn TrialFunction,
    problem: &EllipticProblem,
    n: usize,
    seed: u64,
) -> Result<LossEstimate> {
    let d = problem.dim();
    let fresh = derive_seed(seed, 0x10ad);
    let batch = SampleBatch::draw(problem.domain(), n, n, fresh)?;
    let (omega, gamma) = problem.domain().measures();
    let (alpha, beta) = (problem.alpha(), problem.beta());
    // Per-point integrands scaled so that the plain mean estimates each term.
    let mut cols: [Vec<f64>; 5] = Default::default();
    let mut interior_total = Vec::with_capacity(n);
    let mut boundary_total = Vec::with_capacity(n);
    let mut grad = vec![0.0; d];
    for x in batch.interior.iter() {
        let v = u.value_and_gradient(x, &mut grad);
        let g2: f64 = grad.iter().map(|g| g * g).sum();
        let t1 = 0.5 * omega * g2;
        let t2 = 0.5 * omega * problem.w().eval(x) * v * v;
        let t3 = -omega * problem.f().eval(x) * v;
        cols[0].push(t1);
        cols[1].push(t2);
        cols[2].push(t3);
        interior_total.push(t1 + t2 + t3);
    }
    for y in batch.boundary.iter() {
        let v = u.value(y);
        let t4 = 0.5 * alpha * gamma / beta * v * v;
        let t5 = -gamma / beta * problem.g().eval(y) * v;
        cols[3].push(t4);
        cols[4].push(t5);
        boundary_total.push(t4 + t5);
    }
    let mut means = [0.0; 5];
    let mut errs = [0.0; 5];
    for k in 0..5 {
        (means[k], errs[k]) = mean_and_stderr(&cols[k]);
    }
    let (_, ei) = mean_and_stderr(&interior_total);
    let (_, eb) = mean_and_stderr(&boundary_total);
    let loss = LossBreakdown::from_terms(means);
    let stderr = LossBreakdown {
        l1: errs[0],
        l2: errs[1],
        l3: errs[2],
        l4: errs[3],
        l5: errs[4],
        total: ei.hypot(eb),
    };
    Ok(LossEstimate { loss, stderr })
}

fn gauss_legendre_1d(
    u: &dyn TrialFunction,
    problem: &EllipticProblem,
    n_quad: usize,
) -> Result<LossEstimate> {
    let (a, b) = problem.domain().interval().ok_or_else(|| {
        Error::InvalidArgument("Gauss–Legendre integration needs a one-dimensional interval".into())
    })?;
    let nodes = composite_gauss_legendre(a, b, n_quad / 5);
    let mut s = [KahanSum::new(), KahanSum::new(), KahanSum::new()];
    let mut grad = [0.0];
    for &(x, wq) in &nodes {
        let p = [x];
        let v = u.value_and_gradient(&p, &mut grad);
        s[0].add(wq * grad[0] * grad[0]);
        s[1].add(wq * problem.w().eval(&p) * v * v);
        s[2].add(wq * problem.f().eval(&p) * v);
    }
    let (alpha, beta) = (problem.alpha(), problem.beta());
    let (ua, ub) = (u.value(&[a]), u.value(&[b]));
    let (ga, gb) = (problem.g().eval(&[a]), problem.g().eval(&[b]));
    let loss = LossBreakdown::from_terms([
        0.5 * s[0].value(),
        0.5 * s[1].value(),
        -s[2].value(),
        0.5 * alpha / beta * (ua * ua + ub * ub),
        -(ga * ua + gb * ub) / beta,
    ]);
    Ok(LossEstimate {
        loss,
        stderr: LossBreakdown::default(),
    })
}

/// Distribution of `|ℒ(u) − ℒ̂(u)|` over independent estimates of `ℒ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapEstimate {
    pub empirical: LossBreakdown,
    /// Mean of the `ℒ` estimates over trials.
    pub continuous_mean: f64,
    pub per_trial: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

/// Measures `|ℒ(u) − ℒ̂(u)|` at a fixed `u`, where `ℒ̂` uses `train_batch`
/// and trial `t` estimates `ℒ` with seed `seed + t`.
pub fn generalization_gap(
    u: &dyn TrialFunction,
    problem: &EllipticProblem,
    train_batch: &SampleBatch,
    n_fresh: usize,
    trials: usize,
    seed: u64,
    rule: IntegrationRule,
) -> Result<GapEstimate> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let empirical = empirical_loss_fn(u, train_batch, problem)?;
    let continuous = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let est = continuous_loss_estimate(u, problem, n_fresh, seed.wrapping_add(t), rule)?;
            Ok(est.loss.total)
        })
        .collect::<Result<Vec<f64>>>()?;
    let per_trial: Vec<f64> = continuous
        .iter()
        .map(|c| (c - empirical.total).abs())
        .collect();
    let continuous_mean = kahan_sum(continuous.iter().copied()) / continuous.len() as f64;
    let n = per_trial.len() as f64;
    let mean = kahan_sum(per_trial.iter().copied()) / n;
    let std = if per_trial.len() > 1 {
        (kahan_sum(per_trial.iter().map(|g| (g - mean) * (g - mean))) / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(GapEstimate {
        empirical,
        continuous_mean,
        per_trial,
        mean,
        std,
    })
}

/// [`generalization_gap`] for a network.
#[allow(clippy::too_many_arguments)]
pub fn generalization_gap_net(
    arch: &NetworkArch,
    params: &NetworkParams,
    problem: &EllipticProblem,
    train_batch: &SampleBatch,
    n_fresh: usize,
    trials: usize,
    seed: u64,
    rule: IntegrationRule,
) -> Result<GapEstimate> {
    let net = Network::new(arch, params)?;
    generalization_gap(&net, problem, train_batch, n_fresh, trials, seed, rule)
}
