//! The Ritz energy
//!
//! ```text
//!   ℒ(u) = ½∫_Ω |∇u|² + w u² − ∫_Ω f u + α/(2β) ∫_∂Ω u² − 1/β ∫_∂Ω g u
//! ```
//!
//! and its Monte-Carlo discretisation `ℒ̂`, both split into the five terms
//! `l1 … l5` in the order written above.

mod loss;
mod problem;

pub use loss::{
    continuous_loss_estimate, continuous_loss_estimate_net, empirical_loss, empirical_loss_fn,
    empirical_loss_prepared, generalization_gap, generalization_gap_net, GapEstimate,
    IntegrationRule, LossAccumulator, LossBreakdown, LossEstimate, PreparedBatch, MIN_QUAD_POINTS,
};
pub use problem::{BoundaryCondition, EllipticProblem, MIN_C_W};
