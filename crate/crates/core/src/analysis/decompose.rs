use serde::{Deserialize, Serialize};

use super::error::{h1_error, reference_solution, ErrorRule};
use crate::error::{Error, Result};
use crate::geometry::SampleBatch;
use crate::network::{init_params, InitScheme, Network, NetworkArch};
use crate::ritz::{generalization_gap, EllipticProblem, IntegrationRule};
use crate::rng::derive_seed;
use crate::train::{optimization_error_estimate, train, train_ensemble, TrainConfig};

/// Training run whose H¹ error stands in for the best approximation in the class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LargeBudget {
    pub arch: NetworkArch,
    pub train: TrainConfig,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecompositionConfig {
    pub arch: NetworkArch,
    pub train: TrainConfig,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    /// Seed of the common training batch.
    pub batch_seed: u64,
    /// Initialisation seeds of the ensemble.
    pub seeds: Vec<u64>,
    /// Untrained parameter draws added to the gap ensemble.
    #[serde(default)]
    pub random_draws: usize,
    pub n_fresh: usize,
    pub gap_trials: usize,
    #[serde(default)]
    pub gap_rule: IntegrationRule,
    pub n_quad: usize,
    #[serde(default)]
    pub error_rule: ErrorRule,
    /// `C(Ω, coe, α)` in the approximation term.
    #[serde(default = "one")]
    pub c_constant: f64,
    pub large: LargeBudget,
}

fn one() -> f64 {
    1.0
}

/// Surrogates of the three error terms, all nonnegative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub e_app_surrogate: f64,
    pub e_sta_surrogate: f64,
    pub e_opt_surrogate: f64,
    pub large_budget_h1: f64,
    pub e_opt_per_seed: Vec<f64>,
    pub gap_per_member: Vec<f64>,
    pub best_loss_per_seed: Vec<f64>,
    pub notes: Vec<String>,
}

/// Error decomposition surrogates:
///
/// * approximation: `(C/β) · h1²` with `h1` the H¹ error of a separate
///   large-budget run (independent of the ensemble's `N`);
/// * statistical: the largest mean gap `|ℒ − ℒ̂|` over the trained ensemble
///   and `random_draws` untrained draws, all on the common batch;
/// * optimisation: mean over seeds of `best ℒ̂ − min over seeds of best ℒ̂`.
pub fn decompose_errors(
    problem: &EllipticProblem,
    cfg: &DecompositionConfig,
) -> Result<DecompositionReport> {
    if cfg.seeds.is_empty() {
        return Err(Error::InvalidArgument(
            "the ensemble needs at least one seed".into(),
        ));
    }
    let exact = reference_solution(problem)?;

    let large_batch =
        SampleBatch::draw(problem.domain(), cfg.large.n, cfg.large.m, cfg.large.seed)?;
    let large = train(
        &cfg.large.arch,
        problem,
        &large_batch,
        &cfg.large.train.with_seed(cfg.large.seed),
    )?;
    let large_net = Network::new(&cfg.large.arch, &large.params)?;
    let large_h1 = h1_error(
        &large_net,
        exact.as_ref(),
        problem.domain(),
        cfg.n_quad,
        cfg.large.seed,
        cfg.error_rule,
    )?
    .h1_error;
    let e_app = cfg.c_constant / problem.beta() * large_h1 * large_h1;

    let batch = SampleBatch::draw(problem.domain(), cfg.n, cfg.m, cfg.batch_seed)?;
    let outcomes = train_ensemble(&cfg.arch, problem, &batch, &cfg.train, &cfg.seeds)
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let best_loss_per_seed: Vec<f64> = outcomes.iter().map(|o| o.best_loss.total).collect();
    let reference = best_loss_per_seed
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let e_opt_per_seed: Vec<f64> = outcomes
        .iter()
        .map(|o| optimization_error_estimate(&o.history, reference))
        .collect();
    let e_opt = e_opt_per_seed.iter().sum::<f64>() / e_opt_per_seed.len() as f64;

    let mut members: Vec<_> = outcomes.iter().map(|o| o.params.clone()).collect();
    for k in 0..cfg.random_draws {
        members.push(init_params(
            &cfg.arch,
            InitScheme::UniformScaled,
            derive_seed(cfg.batch_seed, k as u64),
        ));
    }
    let gap_per_member = members
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let net = Network::new(&cfg.arch, p)?;
            let gap = generalization_gap(
                &net,
                problem,
                &batch,
                cfg.n_fresh,
                cfg.gap_trials,
                derive_seed(cfg.batch_seed ^ 0x9a9, k as u64),
                cfg.gap_rule,
            )?;
            Ok(gap.mean)
        })
        .collect::<Result<Vec<f64>>>()?;
    let e_sta = gap_per_member.iter().copied().fold(0.0, f64::max);

    let notes = vec![
        format!(
            "approximation: (C/beta) * h1^2 with C = {}, beta = {}, h1 from a {}-step run of {:?} on N = {}",
            cfg.c_constant,
            problem.beta(),
            cfg.large.train.steps,
            cfg.large.arch.widths(),
            cfg.large.n
        ),
        format!(
            "statistical: max over {} trained and {} random members of the mean |L - L_hat| ({} trials, n_fresh = {}); a lower bound on the supremum over the class",
            outcomes.len(),
            cfg.random_draws,
            cfg.gap_trials,
            cfg.n_fresh
        ),
        "optimisation: mean over seeds of best L_hat minus the ensemble minimum, which stands in for the exact empirical minimiser".to_string(),
    ];
    Ok(DecompositionReport {
        e_app_surrogate: e_app,
        e_sta_surrogate: e_sta,
        e_opt_surrogate: e_opt,
        large_budget_h1: large_h1,
        e_opt_per_seed,
        gap_per_member,
        best_loss_per_seed,
        notes,
    })
}
