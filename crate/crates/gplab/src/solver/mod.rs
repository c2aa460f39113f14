//! Frozen-coefficient Picard solver for the regularized Dirichlet problems,
//! with a diagonally preconditioned BiCGStab inner solver and
//! epsilon-continuation.

mod assemble;
mod picard;
mod sparse;

pub use assemble::{assemble_frozen, DiscretizationMode, FrozenSystem, ZeroOrder};
pub use picard::{
    continuation_solve, harmonic_extension, solve_degenerate, solve_singular, BoundaryData,
    BoundaryProvenance, ComparisonCheck, EpsilonStage, SolveDiagnostics, SolveReport, SolverConfig,
};
pub use sparse::{bicgstab, CsrMatrix};
