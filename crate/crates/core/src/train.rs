//! First-order minimisation of `ℒ̂` over the bounded-weight class.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::geometry::SampleBatch;
use crate::network::{
    init_params, loss_param_gradient_prepared, project_in_place, InitScheme, NetworkArch,
    NetworkParams,
};
use crate::ritz::{EllipticProblem, LossBreakdown, PreparedBatch};
use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Optimizer {
    Sgd {
        lr: f64,
    },
    Adam {
        lr: f64,
        #[serde(default = "default_beta1")]
        beta1: f64,
        #[serde(default = "default_beta2")]
        beta2: f64,
        #[serde(default = "default_eps")]
        eps: f64,
    },
}

fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_eps() -> f64 {
    1e-8
}

impl Optimizer {
    pub fn adam(lr: f64) -> Self {
        Optimizer::Adam {
            lr,
            beta1: default_beta1(),
            beta2: default_beta2(),
            eps: default_eps(),
        }
    }

    pub fn lr(&self) -> f64 {
        match *self {
            Optimizer::Sgd { lr } | Optimizer::Adam { lr, .. } => lr,
        }
    }

    fn validate(&self) -> Result<()> {
        let lr = self.lr();
        if !(lr > 0.0 && lr.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be positive, got {lr}"
            )));
        }
        if let Optimizer::Adam {
            beta1, beta2, eps, ..
        } = *self
        {
            if !(0.0..1.0).contains(&beta1) || !(0.0..1.0).contains(&beta2) || !(eps > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "Adam needs 0 ≤ β₁, β₂ < 1 and ε > 0, got ({beta1}, {beta2}, {eps})"
                )));
            }
        }
        Ok(())
    }
}

/// Where each step's gradient comes from.
///
/// `FullBatch` minimises `ℒ̂` on the fixed training batch. `Resample` draws a
/// fresh `(n, m)` batch every step; losses are still recorded on the fixed batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BatchSource {
    #[default]
    FullBatch,
    Resample {
        n: usize,
        m: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub optimizer: Optimizer,
    pub steps: usize,
    #[serde(default)]
    pub batch_mode: BatchSource,
    #[serde(default = "default_true")]
    pub project_every_step: bool,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_log_every")]
    pub log_every: usize,
    #[serde(default)]
    pub init: InitScheme,
}

fn default_true() -> bool {
    true
}
fn default_log_every() -> usize {
    1
}

impl TrainConfig {
    pub fn new(optimizer: Optimizer, steps: usize, seed: u64) -> Self {
        TrainConfig {
            optimizer,
            steps,
            batch_mode: BatchSource::FullBatch,
            project_every_step: true,
            seed,
            log_every: 1,
            init: InitScheme::UniformScaled,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        TrainConfig {
            seed,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.optimizer.validate()?;
        if self.steps == 0 {
            return Err(Error::InvalidArgument("steps must be at least 1".into()));
        }
        if self.log_every == 0 {
            return Err(Error::InvalidArgument(
                "log_every must be at least 1".into(),
            ));
        }
        if let BatchSource::Resample { n, m } = self.batch_mode {
            if n == 0 || m == 0 {
                return Err(Error::InvalidArgument(
                    "resampled batches must be non-empty".into(),
                ));
            }
        }
        Ok(())
    }
}

/// `ℒ̂` on the training batch at the iterate reached after `step` updates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainRecord {
    pub step: usize,
    #[serde(flatten)]
    pub loss: LossBreakdown,
    pub param_inf_norm: f64,
    pub seconds: f64,
}

impl TrainRecord {
    pub const CSV_HEADER: [&'static str; 9] = [
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
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    /// Recorded iterate with the lowest `ℒ̂`.
    pub params: NetworkParams,
    pub best_step: usize,
    pub best_loss: LossBreakdown,
    pub initial_loss: LossBreakdown,
    pub final_params: NetworkParams,
    pub history: Vec<TrainRecord>,
}

/// Trains from the initialisation selected by `config.init` and `config.seed`.
pub fn train(
    arch: &NetworkArch,
    problem: &EllipticProblem,
    batch: &SampleBatch,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    let init = init_params(arch, config.init, config.seed);
    train_from(arch, problem, batch, config, init, &mut |_| {})
}

/// Trains from `init`, handing every record to `observer` as it is produced.
///
/// Iterates `θ_0 … θ_steps` are evaluated; those with `step % log_every == 0`
/// and the last one are recorded. A non-finite loss aborts with
/// [`Error::NonFiniteLoss`] after the records preceding it were observed.
pub fn train_from(
    arch: &NetworkArch,
    problem: &EllipticProblem,
    batch: &SampleBatch,
    config: &TrainConfig,
    init: NetworkParams,
    observer: &mut dyn FnMut(&TrainRecord),
) -> Result<TrainOutcome> {
    config.validate()?;
    check_dim(arch.param_count(), init.len())?;
    check_dim(arch.input_dim(), problem.dim())?;
    let prepared = PreparedBatch::new(problem, batch)?;
    let bound = arch.weight_bound();
    let mut theta = init;
    if config.project_every_step {
        project_in_place(&mut theta, bound);
    }
    let mut opt = OptimizerState::new(config.optimizer, theta.len());
    let start = Instant::now();
    let mut history = Vec::with_capacity(config.steps / config.log_every + 2);
    let mut best: Option<(usize, LossBreakdown, NetworkParams)> = None;
    let mut initial_loss = LossBreakdown::default();

    for step in 0..=config.steps {
        let recorded = step % config.log_every == 0 || step == config.steps;
        let (loss, gradient) = match config.batch_mode {
            BatchSource::FullBatch => {
                let lg = loss_param_gradient_prepared(arch, &theta, &prepared)?;
                (Some(lg.loss), Some(lg.gradient))
            }
            BatchSource::Resample { n, m } => {
                let loss = if recorded {
                    Some(loss_param_gradient_prepared(arch, &theta, &prepared)?.loss)
                } else {
                    None
                };
                let gradient = if step < config.steps {
                    let fresh = SampleBatch::draw(
                        problem.domain(),
                        n,
                        m,
                        derive_seed(config.seed, step as u64),
                    )?;
                    let p = PreparedBatch::new(problem, &fresh)?;
                    let lg = loss_param_gradient_prepared(arch, &theta, &p)?;
                    if !lg.loss.total.is_finite() {
                        return Err(Error::NonFiniteLoss {
                            step,
                            loss: lg.loss.total,
                        });
                    }
                    Some(lg.gradient)
                } else {
                    None
                };
                (loss, gradient)
            }
        };
        if let Some(loss) = loss {
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss {
                    step,
                    loss: loss.total,
                });
            }
            if step == 0 {
                initial_loss = loss;
            }
            if recorded {
                let record = TrainRecord {
                    step,
                    loss,
                    param_inf_norm: theta.inf_norm(),
                    seconds: start.elapsed().as_secs_f64(),
                };
                observer(&record);
                history.push(record);
                if best.as_ref().map_or(true, |(_, b, _)| loss.total < b.total) {
                    best = Some((step, loss, theta.clone()));
                }
            }
        }
        if step == config.steps {
            break;
        }
        let gradient = gradient.expect("gradient is computed before the last step");
        opt.step(theta.as_flat_mut(), &gradient);
        if config.project_every_step {
            project_in_place(&mut theta, bound);
        }
    }

    let (best_step, best_loss, params) = best.expect("the last step is always recorded");
    Ok(TrainOutcome {
        params,
        best_step,
        best_loss,
        initial_loss,
        final_params: theta,
        history,
    })
}

/// Independent runs with `config.seed` replaced by each entry of `seeds`.
pub fn train_ensemble(
    arch: &NetworkArch,
    problem: &EllipticProblem,
    batch: &SampleBatch,
    config: &TrainConfig,
    seeds: &[u64],
) -> Vec<Result<TrainOutcome>> {
    seeds
        .par_iter()
        .map(|&s| train(arch, problem, batch, &config.with_seed(s)))
        .collect()
}

/// `max(0, min recorded ℒ̂ − reference_loss)`.
pub fn optimization_error_estimate(history: &[TrainRecord], reference_loss: f64) -> f64 {
    let best = history
        .iter()
        .map(|r| r.loss.total)
        .fold(f64::INFINITY, f64::min);
    (best - reference_loss).max(0.0)
}

enum OptimizerState {
    Sgd {
        lr: f64,
    },
    Adam {
        lr: f64,
        beta1: f64,
        beta2: f64,
        eps: f64,
        t: i32,
        m: Vec<f64>,
        v: Vec<f64>,
    },
}

impl OptimizerState {
    fn new(opt: Optimizer, n: usize) -> Self {
        match opt {
            Optimizer::Sgd { lr } => OptimizerState::Sgd { lr },
            Optimizer::Adam {
                lr,
                beta1,
                beta2,
                eps,
            } => OptimizerState::Adam {
                lr,
                beta1,
                beta2,
                eps,
                t: 0,
                m: vec![0.0; n],
                v: vec![0.0; n],
            },
        }
    }

    fn step(&mut self, theta: &mut [f64], grad: &[f64]) {
        match self {
            OptimizerState::Sgd { lr } => {
                for (p, g) in theta.iter_mut().zip(grad) {
                    *p -= *lr * g;
                }
            }
            OptimizerState::Adam {
                lr,
                beta1,
                beta2,
                eps,
                t,
                m,
                v,
            } => {
                *t += 1;
                let c1 = 1.0 - beta1.powi(*t);
                let c2 = 1.0 - beta2.powi(*t);
                for i in 0..theta.len() {
                    let g = grad[i];
                    m[i] = *beta1 * m[i] + (1.0 - *beta1) * g;
                    v[i] = *beta2 * v[i] + (1.0 - *beta2) * g * g;
                    let mh = m[i] / c1;
                    let vh = v[i] / c2;
                    theta[i] -= *lr * mh / (vh.sqrt() + *eps);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::Field;
    use crate::geometry::Domain;
    use crate::network::Activation;
    use crate::ritz::BoundaryCondition;

    fn homogeneous() -> EllipticProblem {
        EllipticProblem::new(
            Domain::unit_hypercube(1).unwrap(),
            Field::constant(1.0),
            1.0,
            Field::zero(),
            Field::zero(),
            BoundaryCondition::Robin {
                alpha: 1.0,
                beta: 1.0,
            },
        )
        .unwrap()
    }

    #[test]
    fn zero_data_zero_init_stays_at_zero() {
        let arch = NetworkArch::new(vec![1, 4, 1], Activation::Tanh, 1.0).unwrap();
        let p = homogeneous();
        let batch = SampleBatch::draw(p.domain(), 32, 8, 0).unwrap();
        let mut cfg = TrainConfig::new(Optimizer::Sgd { lr: 0.1 }, 20, 0);
        cfg.init = InitScheme::Zero;
        let out = train(&arch, &p, &batch, &cfg).unwrap();
        assert!(out.history.iter().all(|r| r.loss.total == 0.0));
        assert!(out.final_params.as_flat().iter().all(|&t| t == 0.0));
        assert_eq!(out.history.len(), 21);
    }

    #[test]
    fn optimization_error_is_clamped() {
        let rec = |total: f64| TrainRecord {
            step: 0,
            loss: LossBreakdown {
                total,
                ..Default::default()
            },
            param_inf_norm: 0.0,
            seconds: 0.0,
        };
        assert_eq!(optimization_error_estimate(&[rec(1.0)], 1.0), 0.0);
        assert_eq!(optimization_error_estimate(&[rec(0.5)], 1.0), 0.0);
        assert_eq!(optimization_error_estimate(&[rec(2.0), rec(1.5)], 1.0), 0.5);
    }

    #[test]
    fn blow_up_is_reported() {
        let arch = NetworkArch::new(vec![1, 4, 1], Activation::Tanh, 1e300).unwrap();
        let p = EllipticProblem::new(
            Domain::unit_hypercube(1).unwrap(),
            Field::constant(1.0),
            1.0,
            Field::constant(1.0),
            Field::constant(1.0),
            BoundaryCondition::Robin {
                alpha: 1.0,
                beta: 1.0,
            },
        )
        .unwrap();
        let batch = SampleBatch::draw(p.domain(), 16, 4, 0).unwrap();
        let cfg = TrainConfig::new(Optimizer::Sgd { lr: 1e200 }, 50, 0);
        let err = train(&arch, &p, &batch, &cfg).unwrap_err();
        assert!(matches!(err, Error::NonFiniteLoss { .. }), "{err}");
    }

    #[test]
    fn config_validation_and_json() {
        let cfg = TrainConfig::new(Optimizer::adam(1e-3), 0, 0);
        assert!(cfg.validate().is_err());
        let cfg: TrainConfig =
            serde_json::from_str(r#"{"optimizer":{"kind":"adam","lr":0.01},"steps":10}"#).unwrap();
        assert_eq!(cfg.optimizer, Optimizer::adam(0.01));
        assert!(cfg.project_every_step);
        assert!(serde_json::from_str::<TrainConfig>(
            r#"{"optimizer":{"kind":"sgd","lr":0.1},"steps":1,"bogus":1}"#
        )
        .is_err());
        let neg = TrainConfig::new(Optimizer::Sgd { lr: -1.0 }, 5, 0);
        assert!(neg.validate().is_err());
    }

    #[test]
    fn log_every_records_last_step() {
        let arch = NetworkArch::new(vec![1, 3, 1], Activation::Tanh, 2.0).unwrap();
        let p = homogeneous().with_scaled_data(1.0, 1.0);
        let batch = SampleBatch::draw(p.domain(), 16, 4, 1).unwrap();
        let mut cfg = TrainConfig::new(Optimizer::adam(0.01), 7, 3);
        cfg.log_every = 3;
        let out = train(&arch, &p, &batch, &cfg).unwrap();
        let steps: Vec<_> = out.history.iter().map(|r| r.step).collect();
        assert_eq!(steps, vec![0, 3, 6, 7]);
    }
}
