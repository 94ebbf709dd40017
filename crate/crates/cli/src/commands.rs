use drm_core::analysis::{
    calibrate_aggregate, convergence_sweep, gap_study, h1_error, median, reference_solution,
    ErrorReport, GapRow, GapSummary, SweepRow, SweepSettings, SWEEP_HEADER,
};
use drm_core::bounds::{
    arch_for_plan, bound_report, plan_hyperparams, scaled_constant_plans, BoundaryKind,
    HyperParamPlan, HyperParamRequest,
};
use drm_core::function::Constant;
use drm_core::network::save_binary;
use drm_core::problems::penalty_gap_1d;
use drm_core::train::train;
use drm_core::{LossBreakdown, Network, SampleBatch, TrainRecord};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{require, ExperimentConfig};
use crate::error::{CliError, Result};
use crate::output::{write_bytes, OutDir};

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Aborted(format!("cannot start worker pool: {e}")))
}

fn fmt(x: f64) -> String {
    x.to_string()
}

#[derive(Debug, Serialize)]
pub struct SolveRun {
    pub seed: u64,
    pub best_step: usize,
    pub best_loss: LossBreakdown,
    pub initial_loss: LossBreakdown,
    pub error: ErrorReport,
    /// H¹ norm of the reference solution, from the same quadrature.
    pub exact_h1_norm: f64,
    pub relative_h1: f64,
}

#[derive(Debug, Serialize)]
pub struct SolveReport {
    pub problem: String,
    pub runs: Vec<SolveRun>,
    pub median_h1_error: f64,
    pub median_relative_h1: f64,
}

pub const HISTORY_HEADER: [&str; 10] = [
    "seed",
    "step",
    "l1",
    "l2",
    "l3",
    "l4",
    "l5",
    "total",
    "param_inf_norm",
    "seconds",
];

fn history_record(seed: u64, r: &TrainRecord) -> Vec<String> {
    let mut rec = vec![seed.to_string(), r.step.to_string()];
    rec.extend(r.loss.terms().iter().map(|&x| fmt(x)));
    rec.push(fmt(r.loss.total));
    rec.push(fmt(r.param_inf_norm));
    rec.push(fmt(r.seconds));
    rec
}

/// Trains one network per seed on a common batch and measures its H¹ error.
pub fn cmd_solve(cfg: &ExperimentConfig, out: &OutDir) -> Result<()> {
    let problem = cfg.problem()?;
    let arch = require(&cfg.arch, "arch")?;
    let train_cfg = require(&cfg.train, "train")?;
    let samples = require(&cfg.samples, "samples")?;
    if arch.input_dim() != problem.dim() {
        return Err(CliError::Invalid(format!(
            "arch input width {} does not match the problem dimension {}",
            arch.input_dim(),
            problem.dim()
        )));
    }
    let batch = SampleBatch::draw(problem.domain(), samples.n, samples.m, samples.seed)?;
    let exact = reference_solution(&problem)?;
    out.prepare(cfg)?;

    let a = cfg.analysis;
    let zero = Constant {
        value: 0.0,
        dim: problem.dim(),
    };
    let results: Vec<_> = pool(cfg.jobs)?.install(|| {
        cfg.seeds
            .par_iter()
            .map(|&seed| -> Result<_> {
                let outcome = train(arch, &problem, &batch, &train_cfg.with_seed(seed))?;
                let net = Network::new(arch, &outcome.params)?;
                let error = h1_error(
                    &net,
                    exact.as_ref(),
                    problem.domain(),
                    a.n_quad,
                    seed,
                    a.error_rule,
                )?;
                let norm = h1_error(
                    &zero,
                    exact.as_ref(),
                    problem.domain(),
                    a.n_quad,
                    seed,
                    a.error_rule,
                )?
                .h1_error;
                Ok((seed, outcome, error, norm))
            })
            .collect()
    });

    let mut history = out.csv("history.csv", &HISTORY_HEADER)?;
    let mut runs = Vec::new();
    let mut first_error = None;
    for r in results {
        match r {
            Ok((seed, outcome, error, norm)) => {
                for rec in &outcome.history {
                    history.write(history_record(seed, rec))?;
                }
                write_bytes(out, &format!("params_{seed}.bin"), |w| {
                    save_binary(w, arch, &outcome.params)
                })?;
                runs.push(SolveRun {
                    seed,
                    best_step: outcome.best_step,
                    best_loss: outcome.best_loss,
                    initial_loss: outcome.initial_loss,
                    error,
                    exact_h1_norm: norm,
                    relative_h1: error.relative_h1(norm),
                });
            }
            Err(e) => {
                first_error.get_or_insert(e);
            }
        }
    }
    history.finish()?;
    let report = SolveReport {
        problem: problem.name().to_string(),
        median_h1_error: median(&runs.iter().map(|r| r.error.h1_error).collect::<Vec<_>>()),
        median_relative_h1: median(&runs.iter().map(|r| r.relative_h1).collect::<Vec<_>>()),
        runs,
    };
    out.write_json("error_report.json", &report)?;
    for r in &report.runs {
        println!(
            "seed {:>4}  best loss {:.6e}  H1 error {:.6e}  relative {:.4}",
            r.seed, r.best_loss.total, r.error.h1_error, r.relative_h1
        );
    }
    println!("median relative H1 error {:.4}", report.median_relative_h1);
    match first_error {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn plan_lines(plan: &HyperParamPlan) -> String {
    let mut s = format!(
        "plan for eps = {} (d = {}, mu = {}, {:?})\n",
        plan.eps, plan.d, plan.mu, plan.kind
    );
    s += &format!("  depth D = {}\n", plan.depth);
    s += &format!("  parameter count n = {}\n", plan.weight_count);
    s += &format!("  weight bound B_theta = {}\n", plan.weight_bound);
    s += &format!("  samples N = M = {}\n", plan.samples);
    if let Some(beta) = plan.beta {
        s += &format!(
            "  beta = C_coe * eps = {} * {} = {}\n",
            plan.constants.c_coe, plan.eps, beta
        );
    }
    for w in &plan.warnings {
        s += &format!("  warning: {w}\n");
    }
    s
}

/// Class constants, covering numbers, Rademacher and statistical bounds for an
/// explicit architecture or one derived from a hyper-parameter plan.
pub fn cmd_bounds(cfg: &ExperimentConfig, out: &OutDir) -> Result<()> {
    let problem = cfg.problem.as_ref().map(|p| p.build()).transpose()?;
    let settings = cfg.bounds.unwrap_or(crate::config::BoundsConfig {
        n: None,
        m: None,
        alpha: None,
        beta: None,
        c_aggregate: 1.0,
    });
    let (arch, plan) = match (&cfg.arch, &cfg.plan) {
        (Some(arch), None) => (arch.clone(), None),
        (None, Some(p)) => {
            let d = p
                .d
                .or(problem.as_ref().map(|q| q.dim()))
                .ok_or_else(|| CliError::Invalid("plan.d is required without a problem".into()))?;
            let kind = p
                .boundary
                .or(problem.as_ref().map(|q| BoundaryKind::from(&q.bc())))
                .unwrap_or(BoundaryKind::Robin);
            let plan = plan_hyperparams(
                &HyperParamRequest {
                    eps: p.eps,
                    d,
                    mu: p.mu,
                    constants: p.constants,
                },
                kind,
            )?;
            (arch_for_plan(&plan, p.activation)?, Some(plan))
        }
        _ => {
            return Err(CliError::Invalid(
                "bounds needs exactly one of `arch` and `plan`".into(),
            ))
        }
    };
    let planned = plan.as_ref().and_then(|p| p.samples_usize());
    let fallback = cfg.samples.map(|s| (s.n, s.m));
    let n = settings
        .n
        .or(planned)
        .or(fallback.map(|s| s.0))
        .ok_or_else(|| CliError::Invalid("bounds.N is required".into()))?;
    let m = settings
        .m
        .or(planned)
        .or(fallback.map(|s| s.1))
        .ok_or_else(|| CliError::Invalid("bounds.M is required".into()))?;
    let alpha = settings
        .alpha
        .or(problem.as_ref().map(|q| q.alpha()))
        .unwrap_or(1.0);
    let beta = settings
        .beta
        .or(plan.as_ref().and_then(|p| p.beta))
        .or(problem.as_ref().map(|q| q.beta()))
        .unwrap_or(1.0);
    let report = bound_report(&arch, n, m, alpha, beta, settings.c_aggregate)?;
    out.prepare(cfg)?;

    let mut table = String::new();
    if let Some(plan) = &plan {
        table += &plan_lines(plan);
        out.write_json("plan.json", plan)?;
    }
    table += &report.to_table();
    out.write_json("bound_report.json", &report)?;
    out.write_text("bound_table.txt", &table)?;
    print!("{table}");
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct PlanSummary {
    pub plan_id: usize,
    pub eps: f64,
    pub ok_rows: usize,
    pub median_h1_error: f64,
    pub median_gap: f64,
}

#[derive(Debug, Serialize)]
pub struct SweepSummary {
    pub plans: Vec<PlanSummary>,
    pub median_h1_strictly_decreasing: bool,
    /// `C_aggregate` matching the bound to the gap of the first successful row.
    pub calibrated_c: Option<f64>,
    /// Whether the calibrated bound dominates every measured gap.
    pub calibrated_bound_dominates: Option<bool>,
}

pub fn sweep_summary(plans: &[HyperParamPlan], rows: &[SweepRow], c_used: f64) -> SweepSummary {
    let per_plan: Vec<PlanSummary> = plans
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let ok: Vec<&SweepRow> = rows
                .iter()
                .filter(|r| r.plan_id == i && r.is_ok())
                .collect();
            PlanSummary {
                plan_id: i,
                eps: p.eps,
                ok_rows: ok.len(),
                median_h1_error: median(&ok.iter().map(|r| r.h1_error).collect::<Vec<_>>()),
                median_gap: median(&ok.iter().map(|r| r.gap).collect::<Vec<_>>()),
            }
        })
        .collect();
    let decreasing = per_plan
        .windows(2)
        .all(|w| w[1].median_h1_error < w[0].median_h1_error);
    let calibrated_c = calibrate_aggregate(rows, c_used);
    let dominates = calibrated_c.map(|c| {
        let shift = (c / c_used).log10();
        rows.iter()
            .filter(|r| r.is_ok())
            .all(|r| r.gap.log10() <= r.stat_bound.log10 + shift + 1e-12)
    });
    SweepSummary {
        plans: per_plan,
        median_h1_strictly_decreasing: decreasing,
        calibrated_c,
        calibrated_bound_dominates: dominates,
    }
}

/// Plans for every target accuracy of the sweep section.
pub fn sweep_plans(
    cfg: &ExperimentConfig,
    kind: BoundaryKind,
    d: usize,
) -> Result<Vec<HyperParamPlan>> {
    let s = require(&cfg.sweep, "sweep")?;
    if s.eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(CliError::Invalid(
            "sweep.eps must be strictly decreasing".into(),
        ));
    }
    match (s.max_params, s.max_samples) {
        (Some(p), samples) => Ok(scaled_constant_plans(
            &s.eps,
            d,
            s.mu,
            kind,
            s.constants,
            p,
            samples,
        )?),
        (None, Some(_)) => Err(CliError::Invalid(
            "sweep.max_samples needs sweep.max_params".into(),
        )),
        (None, None) => s
            .eps
            .iter()
            .map(|&eps| {
                let req = HyperParamRequest {
                    eps,
                    d,
                    mu: s.mu,
                    constants: s.constants,
                };
                Ok(plan_hyperparams(&req, kind)?)
            })
            .collect(),
    }
}

/// Trains and evaluates every (plan, seed) cell, appending one CSV row per
/// cell as soon as it and all earlier cells are done.
pub fn cmd_sweep(cfg: &ExperimentConfig, out: &OutDir) -> Result<()> {
    let problem = cfg.problem()?;
    let train_cfg = require(&cfg.train, "train")?;
    let s = require(&cfg.sweep, "sweep")?;
    let plans = sweep_plans(cfg, BoundaryKind::from(&problem.bc()), problem.dim())?;
    let settings = SweepSettings {
        activation: s.activation,
        train: train_cfg.clone(),
        n_quad: cfg.analysis.n_quad,
        error_rule: cfg.analysis.error_rule,
        gap_trials: s.gap_trials,
        n_fresh: s.n_fresh,
        gap_rule: s.gap_rule,
        c_aggregate: s.c_aggregate,
    };
    out.prepare(cfg)?;
    out.write_json("plans.json", &plans)?;

    let mut csv = out.csv("sweep.csv", &SWEEP_HEADER)?;
    let rows = convergence_sweep(
        &problem,
        &plans,
        &cfg.seeds,
        &settings,
        cfg.jobs,
        &mut |row| {
            csv.write(row.csv_record())
                .map_err(|e| drm_core::Error::Io(std::io::Error::other(e.to_string())))
        },
    )?;
    csv.finish()?;
    let summary = sweep_summary(&plans, &rows, s.c_aggregate);
    out.write_json("sweep_summary.json", &summary)?;
    for p in &summary.plans {
        println!(
            "plan {} eps {}: {} ok rows, median H1 error {:.6e}, median gap {:.6e}",
            p.plan_id, p.eps, p.ok_rows, p.median_h1_error, p.median_gap
        );
    }
    let failed = rows.iter().filter(|r| !r.is_ok()).count();
    if !rows.is_empty() && failed == rows.len() {
        return Err(CliError::Aborted(format!(
            "all {failed} sweep cells failed"
        )));
    }
    if failed > 0 {
        eprintln!(
            "{failed} of {} sweep cells failed; see the status column",
            rows.len()
        );
    }
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct GapReport {
    pub summaries: Vec<GapSummary>,
    pub median_strictly_decreasing: bool,
    /// `log10 C_aggregate` matching the bound to the largest gap at the smallest `N`.
    pub calibration_log10: f64,
    pub calibrated_bound_dominates: bool,
}

pub fn gap_report(summaries: Vec<GapSummary>) -> GapReport {
    let mut sorted = summaries.clone();
    sorted.sort_by_key(|s| s.n);
    let decreasing = sorted.windows(2).all(|w| w[1].median_gap < w[0].median_gap);
    let calibration = sorted.first().map_or(f64::NAN, |s| s.calibration_log10());
    let dominates = sorted
        .iter()
        .all(|s| s.max_gap.log10() <= calibration + s.unit_bound_log10 + 1e-12);
    GapReport {
        summaries,
        median_strictly_decreasing: decreasing,
        calibration_log10: calibration,
        calibrated_bound_dominates: dominates,
    }
}

pub const GAP_HEADER: [&str; 6] = GapRow::CSV_HEADER;

/// Generalization gap of trained networks over the training-set sizes of the
/// gap section.
pub fn cmd_gap(cfg: &ExperimentConfig, out: &OutDir) -> Result<()> {
    let problem = cfg.problem()?;
    let arch = require(&cfg.arch, "arch")?;
    let train_cfg = require(&cfg.train, "train")?;
    let settings = require(&cfg.gap, "gap")?;
    if settings.n_list.is_empty() {
        return Err(CliError::Invalid("gap.n_list must not be empty".into()));
    }
    out.prepare(cfg)?;
    let (rows, summaries) =
        pool(cfg.jobs)?.install(|| gap_study(&problem, arch, train_cfg, settings, &cfg.seeds))?;
    let mut csv = out.csv("gap.csv", &GAP_HEADER)?;
    for r in &rows {
        csv.write([
            r.n.to_string(),
            r.seed.to_string(),
            fmt(r.gap),
            fmt(r.gap_std),
            fmt(r.empirical_loss),
            fmt(r.continuous_loss),
        ])?;
    }
    csv.finish()?;
    let report = gap_report(summaries);
    out.write_json("gap_summary.json", &report)?;
    for s in &report.summaries {
        println!(
            "N {:>7}  median gap {:.6e}  max gap {:.6e}  log10 bound(C=1) {:.3}",
            s.n, s.median_gap, s.max_gap, s.unit_bound_log10
        );
    }
    println!(
        "median strictly decreasing: {}; calibrated bound dominates: {}",
        report.median_strictly_decreasing, report.calibrated_bound_dominates
    );
    Ok(())
}

pub const PENALTY_HEADER: [&str; 4] = ["beta", "l2", "h1_seminorm", "h1"];

/// `‖u_R(β) − u_D‖` from 1D finite-difference references with a power-law fit.
pub fn cmd_penalty(cfg: &ExperimentConfig, out: &OutDir) -> Result<()> {
    let problem = cfg.problem()?;
    let settings = require(&cfg.penalty, "penalty")?;
    if problem.dim() != 1 {
        return Err(CliError::Invalid(
            "the penalty study needs a one-dimensional problem".into(),
        ));
    }
    if settings.betas.len() < 2 {
        return Err(CliError::Invalid(
            "penalty.betas needs at least two values".into(),
        ));
    }
    out.prepare(cfg)?;
    let study = penalty_gap_1d(&problem, &settings.betas, settings.n_grid)?;
    let mut csv = out.csv("penalty.csv", &PENALTY_HEADER)?;
    for r in &study.rows {
        csv.write([fmt(r.beta), fmt(r.l2), fmt(r.h1_seminorm), fmt(r.h1)])?;
    }
    csv.finish()?;
    out.write_json("penalty_fit.json", &study)?;
    println!(
        "H1 gap ~ {:.4e} * beta^{:.4}; gap <= {:.4e} * beta on every row",
        study.log_constant.exp(),
        study.slope,
        study.linear_constant
    );
    Ok(())
}
