//! Deep Ritz solver for second-order elliptic problems
//!
//! ```text
//!   -Δu + w u = f      in Ω ⊂ [0,1]^d
//!   αu + β ∂u/∂n = g   on ∂Ω      (Robin; Neumann is α = 0)
//!   u = 0              on ∂Ω      (enforced by a 1/β boundary penalty)
//! ```
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: sampleable domains and reproducible Monte-Carlo batches.
//! * [`network`]: bounded-weight MLPs with hand-written nested forward/reverse
//!   differentiation (input gradients inside parameter gradients).
//! * [`ritz`]: the energy functional, its Monte-Carlo discretisation split into
//!   five terms, and generalization-gap measurement.
//! * [`train`]: SGD / Adam with weight projection onto the bounded class.
//! * [`bounds`]: hyper-parameter prescriptions, class constants, covering
//!   numbers, Massart and chaining Rademacher bounds, plus brute-force oracles.
//! * [`problems`]: manufactured solutions and 1D finite-difference references.
//! * [`analysis`]: H¹ errors, error decomposition surrogates, convergence sweeps.

pub mod analysis;
pub mod bounds;
pub mod error;
pub mod function;
pub mod geometry;
pub mod network;
pub mod problems;
pub mod quadrature;
pub mod ritz;
pub mod rng;
pub mod summation;
pub mod train;

pub use error::{Error, Result};
pub use function::{Field, TrialFunction};
pub use geometry::{Domain, DomainSpec, PointSet, SampleBatch};
pub use network::{Activation, InitScheme, Network, NetworkArch, NetworkParams};
pub use ritz::{BoundaryCondition, EllipticProblem, LossBreakdown};
pub use train::{BatchSource, Optimizer, TrainConfig, TrainOutcome, TrainRecord};
