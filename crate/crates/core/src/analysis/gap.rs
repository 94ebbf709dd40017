use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::statistical_error_bound;
use crate::error::{Error, Result};
use crate::geometry::SampleBatch;
use crate::network::{Network, NetworkArch};
use crate::ritz::{generalization_gap, EllipticProblem, IntegrationRule};
use crate::train::{train, TrainConfig};

use super::median;

/// Generalization-gap experiment over training-set sizes `N = M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapSettings {
    pub n_list: Vec<usize>,
    #[serde(default = "default_n_fresh")]
    pub n_fresh: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub rule: IntegrationRule,
}

fn default_n_fresh() -> usize {
    20_000
}
fn default_trials() -> usize {
    3
}

/// One trained network: `|ℒ − ℒ̂|` at its best iterate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub n: usize,
    pub seed: u64,
    pub gap: f64,
    pub gap_std: f64,
    pub empirical_loss: f64,
    pub continuous_loss: f64,
}

impl GapRow {
    pub const CSV_HEADER: [&'static str; 6] = [
        "N",
        "seed",
        "gap",
        "gap_std",
        "empirical_loss",
        "continuous_loss",
    ];
}

/// Per-`N` aggregate with the statistical bound at `C = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapSummary {
    pub n: usize,
    pub median_gap: f64,
    pub mean_gap: f64,
    pub max_gap: f64,
    pub unit_bound_log10: f64,
}

impl GapSummary {
    /// Smallest `C` making `C · bound(N)` dominate every gap at this `N`,
    /// expressed as `log10 C`.
    pub fn calibration_log10(&self) -> f64 {
        self.max_gap.log10() - self.unit_bound_log10
    }
}

/// Trains one network per `(N, seed)` on a batch drawn with that seed and
/// measures its generalization gap. Rows come back ordered by `N`, then seed.
pub fn gap_study(
    problem: &EllipticProblem,
    arch: &NetworkArch,
    train_config: &TrainConfig,
    settings: &GapSettings,
    seeds: &[u64],
) -> Result<(Vec<GapRow>, Vec<GapSummary>)> {
    if settings.n_list.iter().any(|&n| n == 0) {
        return Err(Error::InvalidArgument(
            "sample sizes must be positive".into(),
        ));
    }
    let cells: Vec<(usize, u64)> = settings
        .n_list
        .iter()
        .flat_map(|&n| seeds.iter().map(move |&s| (n, s)))
        .collect();
    let rows = cells
        .par_iter()
        .map(|&(n, seed)| {
            let batch = SampleBatch::draw(problem.domain(), n, n, seed)?;
            let out = train(arch, problem, &batch, &train_config.with_seed(seed))?;
            let net = Network::new(arch, &out.params)?;
            let gap = generalization_gap(
                &net,
                problem,
                &batch,
                settings.n_fresh,
                settings.trials,
                seed.wrapping_mul(1_000_003).wrapping_add(n as u64),
                settings.rule,
            )?;
            Ok(GapRow {
                n,
                seed,
                gap: gap.mean,
                gap_std: gap.std,
                empirical_loss: gap.empirical.total,
                continuous_loss: gap.continuous_mean,
            })
        })
        .collect::<Result<Vec<GapRow>>>()?;
    let mut summaries = Vec::with_capacity(settings.n_list.len());
    for &n in &settings.n_list {
        let gaps: Vec<f64> = rows.iter().filter(|r| r.n == n).map(|r| r.gap).collect();
        let bound = statistical_error_bound(arch, n, n, problem.beta(), 1.0)?;
        summaries.push(GapSummary {
            n,
            median_gap: median(&gaps),
            mean_gap: gaps.iter().sum::<f64>() / gaps.len().max(1) as f64,
            max_gap: gaps.iter().copied().fold(0.0, f64::max),
            unit_bound_log10: bound.log10,
        });
    }
    Ok((rows, summaries))
}
