use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc;

use serde::{Deserialize, Serialize};

use super::error::{h1_error, reference_solution, ErrorRule};
use crate::bounds::{arch_for_plan, statistical_error_bound, BoundValue, HyperParamPlan};
use crate::error::{Error, Result};
use crate::geometry::SampleBatch;
use crate::network::{Activation, Network};
use crate::ritz::{generalization_gap, EllipticProblem, IntegrationRule};
use crate::train::{train, TrainConfig};

pub const SWEEP_HEADER: [&str; 14] = [
    "plan_id",
    "eps",
    "seed",
    "depth",
    "width_total",
    "B_theta",
    "N",
    "M",
    "beta",
    "h1_error",
    "h1_stderr",
    "gap",
    "stat_bound",
    "status",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSettings {
    #[serde(default = "default_activation")]
    pub activation: Activation,
    pub train: TrainConfig,
    #[serde(default = "default_n_quad")]
    pub n_quad: usize,
    #[serde(default)]
    pub error_rule: ErrorRule,
    #[serde(default = "default_gap_trials")]
    pub gap_trials: usize,
    #[serde(default = "default_n_fresh")]
    pub n_fresh: usize,
    #[serde(default)]
    pub gap_rule: IntegrationRule,
    #[serde(default = "default_c")]
    pub c_aggregate: f64,
}

fn default_activation() -> Activation {
    Activation::Tanh
}
fn default_n_quad() -> usize {
    4096
}
fn default_gap_trials() -> usize {
    3
}
fn default_n_fresh() -> usize {
    20_000
}
fn default_c() -> f64 {
    1.0
}

/// One `(plan, seed)` cell. Failed cells carry NaNs and a `failed: …` status.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub plan_id: usize,
    pub eps: f64,
    pub seed: u64,
    pub depth: usize,
    /// Sum of the hidden-layer widths.
    pub width_total: usize,
    #[serde(rename = "B_theta")]
    pub weight_bound: f64,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub beta: f64,
    pub h1_error: f64,
    pub h1_stderr: f64,
    pub gap: f64,
    pub stat_bound: BoundValue,
    pub status: String,
}

impl SweepRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    /// Fields in [`SWEEP_HEADER`] order.
    pub fn csv_record(&self) -> Vec<String> {
        vec![
            self.plan_id.to_string(),
            self.eps.to_string(),
            self.seed.to_string(),
            self.depth.to_string(),
            self.width_total.to_string(),
            self.weight_bound.to_string(),
            self.n.to_string(),
            self.m.to_string(),
            self.beta.to_string(),
            self.h1_error.to_string(),
            self.h1_stderr.to_string(),
            self.gap.to_string(),
            format_bound(&self.stat_bound),
            self.status.clone(),
        ]
    }
}

/// Decimal rendering of a bound; overflowing values are written as
/// `mantissa e exponent` reconstructed from `log10`.
pub fn format_bound(v: &BoundValue) -> String {
    match v.value {
        Some(x) => x.to_string(),
        None if v.log10.is_finite() => {
            let e = v.log10.floor();
            format!("{:.15}e{}", 10f64.powf(v.log10 - e), e as i64)
        }
        None => "inf".to_string(),
    }
}

fn run_cell(
    problem: &EllipticProblem,
    plan: &HyperParamPlan,
    plan_id: usize,
    seed: u64,
    settings: &SweepSettings,
) -> SweepRow {
    let mut row = SweepRow {
        plan_id,
        eps: plan.eps,
        seed,
        depth: plan.depth,
        width_total: 0,
        weight_bound: plan.weight_bound.get(),
        n: plan.samples_usize().unwrap_or(0),
        m: plan.samples_usize().unwrap_or(0),
        beta: plan.beta.unwrap_or(problem.beta()),
        h1_error: f64::NAN,
        h1_stderr: f64::NAN,
        gap: f64::NAN,
        stat_bound: BoundValue::from_log10(f64::NAN),
        status: String::new(),
    };
    let result = catch_unwind(AssertUnwindSafe(|| -> Result<()> {
        let arch = arch_for_plan(plan, settings.activation)?;
        row.width_total = arch.widths()[1..arch.depth()].iter().sum();
        let n = plan.samples_usize().ok_or_else(|| {
            Error::InvalidArgument(format!(
                "planned sample count {} is too large",
                plan.samples
            ))
        })?;
        let problem = match plan.beta {
            Some(beta) => problem.with_penalty(beta)?,
            None => problem.clone(),
        };
        row.stat_bound =
            statistical_error_bound(&arch, n, n, problem.beta(), settings.c_aggregate)?;
        let exact = reference_solution(&problem)?;
        let batch = SampleBatch::draw(problem.domain(), n, n, seed)?;
        let out = train(&arch, &problem, &batch, &settings.train.with_seed(seed))?;
        let net = Network::new(&arch, &out.params)?;
        let err = h1_error(
            &net,
            exact.as_ref(),
            problem.domain(),
            settings.n_quad,
            seed,
            settings.error_rule,
        )?;
        row.h1_error = err.h1_error;
        row.h1_stderr = err.h1_stderr;
        let gap = generalization_gap(
            &net,
            &problem,
            &batch,
            settings.n_fresh,
            settings.gap_trials,
            seed,
            settings.gap_rule,
        )?;
        row.gap = gap.mean;
        Ok(())
    }));
    row.status = match result {
        Ok(Ok(())) => "ok".to_string(),
        Ok(Err(e)) => format!("failed: {e}"),
        Err(_) => "failed: panic".to_string(),
    };
    row
}

/// Trains and evaluates every `(plan, seed)` cell on `jobs` worker threads.
///
/// Rows reach `sink` in plan-major order as soon as all earlier cells are
/// done, so an interrupted sweep leaves a complete prefix behind. A failing
/// cell becomes a row with a `failed: …` status; only a `sink` error stops
/// the sweep.
pub fn convergence_sweep(
    problem: &EllipticProblem,
    plans: &[HyperParamPlan],
    seeds: &[u64],
    settings: &SweepSettings,
    jobs: usize,
    sink: &mut dyn FnMut(&SweepRow) -> Result<()>,
) -> Result<Vec<SweepRow>> {
    let cells: Vec<(usize, u64)> = (0..plans.len())
        .flat_map(|p| seeds.iter().map(move |&s| (p, s)))
        .collect();
    let next = AtomicUsize::new(0);
    let cancelled = AtomicBool::new(false);
    let mut rows = Vec::with_capacity(cells.len());
    std::thread::scope(|scope| -> Result<()> {
        let (tx, rx) = mpsc::channel::<(usize, SweepRow)>();
        for _ in 0..jobs.max(1).min(cells.len().max(1)) {
            let tx = tx.clone();
            let (cells, next, cancelled) = (&cells, &next, &cancelled);
            scope.spawn(move || loop {
                if cancelled.load(Ordering::Relaxed) {
                    break;
                }
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(p, seed)) = cells.get(i) else {
                    break;
                };
                let row = run_cell(problem, &plans[p], p, seed, settings);
                if tx.send((i, row)).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        let mut pending = BTreeMap::new();
        let mut emitted = 0;
        for (i, row) in rx {
            pending.insert(i, row);
            while let Some(row) = pending.remove(&emitted) {
                if let Err(e) = sink(&row) {
                    cancelled.store(true, Ordering::Relaxed);
                    return Err(e);
                }
                rows.push(row);
                emitted += 1;
            }
        }
        Ok(())
    })?;
    Ok(rows)
}

/// `C_aggregate` that makes the bound equal the measured gap of the first
/// successful row (the bound must have been computed with `C = c_used`).
pub fn calibrate_aggregate(rows: &[SweepRow], c_used: f64) -> Option<f64> {
    let first = rows.iter().find(|r| r.is_ok() && r.gap.is_finite())?;
    Some(c_used * 10f64.powf(first.gap.log10() - first.stat_bound.log10))
}
