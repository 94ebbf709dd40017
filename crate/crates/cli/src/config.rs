use std::fs;
use std::path::{Path, PathBuf};

use drm_core::analysis::{ErrorRule, GapSettings};
use drm_core::bounds::{BoundaryKind, PlanConstants};
use drm_core::problems::{make_manufactured, named_problem, ManufacturedKind};
use drm_core::ritz::IntegrationRule;
use drm_core::{
    Activation, BoundaryCondition, Domain, DomainSpec, EllipticProblem, Field, NetworkArch,
    TrainConfig,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// One experiment file. Each subcommand reads the sections it needs and
/// rejects the file if one of them is missing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem: Option<ProblemConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arch: Option<NetworkArch>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<PlanConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train: Option<TrainConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<SampleConfig>,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<BoundsConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap: Option<GapSettings>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub penalty: Option<PenaltyConfig>,
    /// Run seeds; each run replaces `train.seed` with its own.
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_jobs")]
    pub jobs: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}
fn default_jobs() -> usize {
    1
}
fn one() -> f64 {
    1.0
}

/// Either a named problem or a manufactured solution on an explicit domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manufactured: Option<ManufacturedKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainSpec>,
    /// Constant reaction coefficient `w` for manufactured problems.
    #[serde(default = "one")]
    pub w: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<BoundaryCondition>,
}

impl ProblemConfig {
    pub fn build(&self) -> Result<EllipticProblem> {
        match (&self.name, self.manufactured) {
            (Some(name), None) => {
                if self.domain.is_some() {
                    return Err(CliError::Invalid(
                        "problem.domain applies to manufactured problems only".into(),
                    ));
                }
                if self.w != 1.0 {
                    return Err(CliError::Invalid(
                        "problem.w applies to manufactured problems only".into(),
                    ));
                }
                Ok(named_problem(name, self.boundary)?)
            }
            (None, Some(kind)) => {
                let spec = self.domain.as_ref().ok_or_else(|| {
                    CliError::Invalid("manufactured problems need problem.domain".into())
                })?;
                let domain = Domain::from_spec(spec)?;
                let bc = self.boundary.unwrap_or(BoundaryCondition::Robin {
                    alpha: 1.0,
                    beta: 1.0,
                });
                Ok(make_manufactured(
                    domain,
                    kind,
                    Field::constant(self.w),
                    self.w,
                    bc,
                )?)
            }
            _ => Err(CliError::Invalid(
                "problem needs exactly one of `name` and `manufactured`".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleConfig {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    /// Seed of the training batch, shared by all run seeds.
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    #[serde(default = "default_n_quad")]
    pub n_quad: usize,
    #[serde(default)]
    pub error_rule: ErrorRule,
}

fn default_n_quad() -> usize {
    4096
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            n_quad: default_n_quad(),
            error_rule: ErrorRule::MonteCarlo,
        }
    }
}

/// Hyper-parameter prescription request for `bounds`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanConfig {
    pub eps: f64,
    pub mu: f64,
    /// Input dimension; defaults to the problem's.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    /// Defaults to the problem's boundary condition, else Robin.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<BoundaryKind>,
    #[serde(default)]
    pub constants: PlanConstants,
    #[serde(default = "default_activation")]
    pub activation: Activation,
}

fn default_activation() -> Activation {
    Activation::Tanh
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default = "one")]
    pub c_aggregate: f64,
}

/// Plans over a list of target accuracies. With `max_params` set the plans
/// use scaled constants calibrated so the smallest `ε` has that many
/// parameters (and `max_samples` samples when given).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub eps: Vec<f64>,
    pub mu: f64,
    #[serde(default)]
    pub constants: PlanConstants,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_params: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_samples: Option<usize>,
    #[serde(default = "default_activation")]
    pub activation: Activation,
    #[serde(default = "default_gap_trials")]
    pub gap_trials: usize,
    #[serde(default = "default_n_fresh")]
    pub n_fresh: usize,
    #[serde(default)]
    pub gap_rule: IntegrationRule,
    #[serde(default = "one")]
    pub c_aggregate: f64,
}

fn default_gap_trials() -> usize {
    3
}
fn default_n_fresh() -> usize {
    20_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PenaltyConfig {
    pub betas: Vec<f64>,
    #[serde(default = "default_n_grid")]
    pub n_grid: usize,
}

fn default_n_grid() -> usize {
    2048
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| CliError::ReadConfig {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text).map_err(|source| CliError::ParseConfig {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn parse(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn validate_common(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(CliError::Invalid("seeds must not be empty".into()));
        }
        if self.jobs == 0 {
            return Err(CliError::Invalid("jobs must be at least 1".into()));
        }
        if let Some(t) = &self.train {
            t.validate()?;
        }
        if self.analysis.n_quad == 0 {
            return Err(CliError::Invalid("analysis.n_quad must be positive".into()));
        }
        Ok(())
    }

    pub fn problem(&self) -> Result<EllipticProblem> {
        require(&self.problem, "problem")?.build()
    }
}

pub fn require<'a, T>(section: &'a Option<T>, name: &str) -> Result<&'a T> {
    section
        .as_ref()
        .ok_or_else(|| CliError::Invalid(format!("missing section `{name}`")))
}
