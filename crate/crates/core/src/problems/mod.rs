//! Manufactured problems with known solutions and one-dimensional
//! finite-difference reference solvers.

mod manufactured;
mod reference;

pub use manufactured::{
    make_manufactured, named_problem, ManufacturedKind, ManufacturedSolution, BUMP_CENTER,
    BUMP_WIDTH, DEFAULT_DIRICHLET_BETA, NAMED_PROBLEMS,
};
pub use reference::{
    fit_power_law, penalty_gap_1d, solve_reference_1d, solve_reference_1d_with, solve_tridiagonal,
    PenaltyGap, PenaltyStudy, ReferenceBc, ReferenceSolution1D, MIN_GRID,
};
