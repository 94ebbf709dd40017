//! Bounded-weight multilayer perceptrons `𝒩_ρ(D, 𝔫_D, B_θ)`.
//!
//! ```text
//!   f_0(x) = x
//!   f_ℓ(x) = ρ(A_ℓ f_{ℓ-1} + b_ℓ)     ℓ = 1, …, D-1
//!   f(x)   = A_D f_{D-1} + b_D        (scalar output)
//! ```
//!
//! Input gradients are carried through the recursion as forward-mode tangents
//! (one per input coordinate); parameter gradients of the loss are obtained by
//! a reverse sweep over that forward-mode computation, so they include the
//! dependence of `∇ₓu` on θ. See [`tape`].

mod io;
mod tape;

pub use io::{load_binary, load_json, save_binary, save_json, ParamsFile};
pub use tape::Tape;

use rand::Rng as _;
use serde::{Deserialize, Serialize};
use std::cell::RefCell;

use crate::error::{check_dim, Error, Result};
use crate::function::TrialFunction;
use crate::geometry::SampleBatch;
use crate::ritz::{EllipticProblem, LossBreakdown, PreparedBatch};
use crate::rng::{self, stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Logistic,
    Tanh,
}

impl Activation {
    /// `(ρ(z), ρ'(z), ρ''(z))` in closed form.
    #[inline]
    pub fn eval(self, z: f64) -> (f64, f64, f64) {
        match self {
            Activation::Tanh => {
                let t = z.tanh();
                let d1 = 1.0 - t * t;
                (t, d1, -2.0 * t * d1)
            }
            Activation::Logistic => {
                let s = if z >= 0.0 {
                    1.0 / (1.0 + (-z).exp())
                } else {
                    let e = z.exp();
                    e / (1.0 + e)
                };
                let d1 = s * (1.0 - s);
                (s, d1, d1 * (1.0 - 2.0 * s))
            }
        }
    }

    #[inline]
    pub fn value(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Logistic => self.eval(z).0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Logistic => "logistic",
            Activation::Tanh => "tanh",
        }
    }
}

/// Depth, widths `n_0 … n_D` (with `n_0 = d`, `n_D = 1`), activation and the
/// weight bound `B_θ ≥ 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ArchHeader", into = "ArchHeader")]
pub struct NetworkArch {
    widths: Vec<usize>,
    activation: Activation,
    weight_bound: f64,
}

/// On-disk header `{depth, widths, activation, B_theta}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArchHeader {
    depth: usize,
    widths: Vec<usize>,
    activation: Activation,
    #[serde(rename = "B_theta")]
    b_theta: f64,
}

impl TryFrom<ArchHeader> for NetworkArch {
    type Error = Error;

    fn try_from(h: ArchHeader) -> Result<Self> {
        if h.widths.len() != h.depth + 1 {
            return Err(Error::InvalidArch(format!(
                "depth {} needs {} widths, got {}",
                h.depth,
                h.depth + 1,
                h.widths.len()
            )));
        }
        NetworkArch::new(h.widths, h.activation, h.b_theta)
    }
}

impl From<NetworkArch> for ArchHeader {
    fn from(a: NetworkArch) -> Self {
        ArchHeader {
            depth: a.depth(),
            widths: a.widths,
            activation: a.activation,
            b_theta: a.weight_bound,
        }
    }
}

impl NetworkArch {
    pub fn new(widths: Vec<usize>, activation: Activation, weight_bound: f64) -> Result<Self> {
        if widths.len() < 3 {
            return Err(Error::InvalidArch(format!(
                "depth must be at least 2 (got widths {widths:?})"
            )));
        }
        if widths.iter().any(|&w| w == 0) {
            return Err(Error::InvalidArch(format!("zero width in {widths:?}")));
        }
        if *widths.last().unwrap() != 1 {
            return Err(Error::InvalidArch("output width must be 1".into()));
        }
        if !(weight_bound >= 1.0) || weight_bound.is_nan() {
            return Err(Error::InvalidArch(format!(
                "weight bound must be ≥ 1, got {weight_bound}"
            )));
        }
        Ok(NetworkArch {
            widths,
            activation,
            weight_bound,
        })
    }

    /// `d → width → … → width → 1` with `depth - 1` hidden layers.
    pub fn uniform(
        input_dim: usize,
        depth: usize,
        width: usize,
        activation: Activation,
        weight_bound: f64,
    ) -> Result<Self> {
        if depth < 2 {
            return Err(Error::InvalidArch("depth must be at least 2".into()));
        }
        let mut widths = vec![input_dim];
        widths.extend(std::iter::repeat(width).take(depth - 1));
        widths.push(1);
        NetworkArch::new(widths, activation, weight_bound)
    }

    pub fn depth(&self) -> usize {
        self.widths.len() - 1
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn weight_bound(&self) -> f64 {
        self.weight_bound
    }

    pub fn with_weight_bound(&self, weight_bound: f64) -> Result<Self> {
        NetworkArch::new(self.widths.clone(), self.activation, weight_bound)
    }

    /// `Σ_ℓ (n_ℓ n_{ℓ-1} + n_ℓ)`. Reported as `𝔫_D`: trained weights are never
    /// exactly zero, so the nonzero count equals the total count.
    pub fn param_count(&self) -> usize {
        self.widths.windows(2).map(|w| w[1] * w[0] + w[1]).sum()
    }

    /// `Π_{i=1}^{D-1} n_i` (product of hidden widths).
    pub fn hidden_width_product(&self) -> f64 {
        self.widths[1..self.depth()]
            .iter()
            .map(|&n| n as f64)
            .product()
    }

    /// Width of the last hidden layer, `n_{D-1}`.
    pub fn last_hidden_width(&self) -> usize {
        self.widths[self.depth() - 1]
    }

    /// Offsets of `(A_ℓ, b_ℓ)` in the flat parameter vector, ℓ = 1…D.
    pub(crate) fn layer_offsets(&self) -> impl Iterator<Item = LayerShape> + '_ {
        let mut offset = 0;
        self.widths.windows(2).map(move |w| {
            let shape = LayerShape {
                rows: w[1],
                cols: w[0],
                weights: offset,
                bias: offset + w[0] * w[1],
            };
            offset += w[0] * w[1] + w[1];
            shape
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct LayerShape {
    pub rows: usize,
    pub cols: usize,
    pub weights: usize,
    pub bias: usize,
}

/// Flat parameter vector θ, laid out layer by layer as `A_ℓ` (row-major,
/// `n_ℓ × n_{ℓ-1}`) followed by `b_ℓ`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    theta: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitScheme {
    #[default]
    UniformScaled,
    Zero,
}

impl NetworkParams {
    pub fn from_flat(arch: &NetworkArch, theta: Vec<f64>) -> Result<Self> {
        check_dim(arch.param_count(), theta.len())?;
        Ok(NetworkParams { theta })
    }

    pub fn zeros(arch: &NetworkArch) -> Self {
        NetworkParams {
            theta: vec![0.0; arch.param_count()],
        }
    }

    /// Builds θ from per-layer `(A_ℓ row-major, b_ℓ)` pairs.
    pub fn from_layers(arch: &NetworkArch, layers: &[(Vec<f64>, Vec<f64>)]) -> Result<Self> {
        check_dim(arch.depth(), layers.len())?;
        let mut theta = Vec::with_capacity(arch.param_count());
        for (shape, (a, b)) in arch.layer_offsets().zip(layers) {
            check_dim(shape.rows * shape.cols, a.len())?;
            check_dim(shape.rows, b.len())?;
            theta.extend_from_slice(a);
            theta.extend_from_slice(b);
        }
        Ok(NetworkParams { theta })
    }

    /// `(A_ℓ, b_ℓ)` for ℓ = 1…D (1-based, as in the recursion).
    pub fn layer<'a>(&'a self, arch: &NetworkArch, layer: usize) -> (&'a [f64], &'a [f64]) {
        let s = arch
            .layer_offsets()
            .nth(layer - 1)
            .expect("layer index out of range");
        (
            &self.theta[s.weights..s.bias],
            &self.theta[s.bias..s.bias + s.rows],
        )
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.theta
    }

    pub fn as_flat_mut(&mut self) -> &mut [f64] {
        &mut self.theta
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.theta
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn inf_norm(&self) -> f64 {
        self.theta.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn l2_distance(&self, other: &NetworkParams) -> f64 {
        self.theta
            .iter()
            .zip(&other.theta)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// Initial parameters. `UniformScaled` draws every entry of layer ℓ from
/// `U(-s, s)` with `s = min(B_θ, √(6/(n_{ℓ-1}+n_ℓ)))`.
pub fn init_params(arch: &NetworkArch, scheme: InitScheme, seed: u64) -> NetworkParams {
    match scheme {
        InitScheme::Zero => NetworkParams::zeros(arch),
        InitScheme::UniformScaled => {
            let mut rng = rng::seeded(seed, stream::INIT);
            let mut theta = Vec::with_capacity(arch.param_count());
            for shape in arch.layer_offsets() {
                let s = init_scale(arch, shape.cols, shape.rows);
                for _ in 0..shape.rows * (shape.cols + 1) {
                    theta.push(rng.random_range(-s..=s));
                }
            }
            NetworkParams { theta }
        }
    }
}

pub fn init_scale(arch: &NetworkArch, fan_in: usize, fan_out: usize) -> f64 {
    arch.weight_bound
        .min((6.0 / (fan_in + fan_out) as f64).sqrt())
}

/// Componentwise clamp of θ to `[-B_θ, B_θ]`.
pub fn project_weights(params: &NetworkParams, bound: f64) -> NetworkParams {
    let mut out = params.clone();
    project_in_place(&mut out, bound);
    out
}

pub fn project_in_place(params: &mut NetworkParams, bound: f64) {
    for v in &mut params.theta {
        *v = v.clamp(-bound, bound);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub value: f64,
    pub input_gradient: Option<Vec<f64>>,
}

thread_local! {
    static SCRATCH: RefCell<Tape> = RefCell::new(Tape::empty());
}

fn with_tape<R>(arch: &NetworkArch, f: impl FnOnce(&mut Tape) -> R) -> R {
    SCRATCH.with(|cell| {
        let mut tape = cell.borrow_mut();
        tape.reshape(arch);
        f(&mut tape)
    })
}

fn check_inputs(arch: &NetworkArch, params: &NetworkParams, x: &[f64]) -> Result<()> {
    check_dim(arch.param_count(), params.len())?;
    check_dim(arch.input_dim(), x.len())
}

pub fn forward(arch: &NetworkArch, params: &NetworkParams, x: &[f64]) -> Result<f64> {
    check_inputs(arch, params, x)?;
    Ok(with_tape(arch, |t| {
        t.forward(arch, &params.theta, x, false)
    }))
}

pub fn forward_with_input_grad(
    arch: &NetworkArch,
    params: &NetworkParams,
    x: &[f64],
) -> Result<EvalResult> {
    check_inputs(arch, params, x)?;
    Ok(with_tape(arch, |t| {
        let value = t.forward(arch, &params.theta, x, true);
        EvalResult {
            value,
            input_gradient: Some(t.input_gradient().to_vec()),
        }
    }))
}

/// Value and θ-gradient of the empirical loss `ℒ̂` on `batch`.
#[derive(Debug, Clone, PartialEq)]
pub struct LossGradient {
    pub loss: LossBreakdown,
    pub gradient: Vec<f64>,
}

/// Exact gradient of `ℒ̂(u_θ)` with respect to every entry of θ.
pub fn loss_param_gradient(
    arch: &NetworkArch,
    params: &NetworkParams,
    batch: &SampleBatch,
    problem: &EllipticProblem,
) -> Result<LossGradient> {
    let prepared = PreparedBatch::new(problem, batch)?;
    loss_param_gradient_prepared(arch, params, &prepared)
}

/// As [`loss_param_gradient`] with the data fields already evaluated on the batch.
pub fn loss_param_gradient_prepared(
    arch: &NetworkArch,
    params: &NetworkParams,
    prepared: &PreparedBatch<'_>,
) -> Result<LossGradient> {
    check_dim(arch.param_count(), params.len())?;
    check_dim(arch.input_dim(), prepared.dim())?;
    let mut tape = Tape::new(arch);
    let mut gradient = vec![0.0; arch.param_count()];
    let loss = tape.loss_and_gradient(arch, &params.theta, prepared, &mut gradient);
    Ok(LossGradient { loss, gradient })
}

/// Borrowed `(arch, θ)` pair usable wherever a [`TrialFunction`] is expected.
#[derive(Debug, Clone, Copy)]
pub struct Network<'a> {
    pub arch: &'a NetworkArch,
    pub params: &'a NetworkParams,
}

impl<'a> Network<'a> {
    pub fn new(arch: &'a NetworkArch, params: &'a NetworkParams) -> Result<Self> {
        check_dim(arch.param_count(), params.len())?;
        Ok(Network { arch, params })
    }
}

impl TrialFunction for Network<'_> {
    fn dim(&self) -> usize {
        self.arch.input_dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        with_tape(self.arch, |t| {
            t.forward(self.arch, &self.params.theta, x, false)
        })
    }

    fn value_and_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        with_tape(self.arch, |t| {
            let v = t.forward(self.arch, &self.params.theta, x, true);
            grad.copy_from_slice(t.input_gradient());
            v
        })
    }
}
