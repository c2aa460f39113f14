//! Finite-difference laboratory for the degenerate/singular equation
//! `-|Du|^gamma (Delta u + (p-2) Delta_inf^N u) = f` on uniform Cartesian
//! grids in dimension 1..=3.
//!
//! The crate provides the discrete calculus ([`field`]), the regularized
//! operator family and Pucci envelopes ([`operator`]), Cordes-condition
//! diagnostics ([`cordes`]), a frozen-coefficient Picard solver with
//! epsilon-continuation ([`solver`]), exact radial/manufactured solutions
//! ([`oracle`]), and empirical regularity estimators ([`regularity`]).

pub mod cordes;
pub mod error;
pub mod field;
pub mod operator;
pub mod oracle;
pub mod regularity;
pub mod solver;

pub use error::{Error, Result};

/// Crate version embedded in every serialized report.
pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");
