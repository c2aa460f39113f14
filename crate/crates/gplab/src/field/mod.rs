//! Uniform Cartesian grids, domain masks, node-indexed fields, and the
//! second-order discrete calculus everything else is built on.

mod calculus;
mod data;
mod grid;
mod io;
mod mask;

pub use calculus::{
    directional_second_difference, discrete_norms, gradient_central, hessian_central, oscillation,
    Norms, Region,
};
pub(crate) use calculus::{gradient_at as gradient_at_node, hessian_at as hessian_at_node};
pub use data::{ScalarField, SymMat, SymMatrixField, VectorField};
pub use grid::GridSpec;
pub use io::{read_field, write_field, FieldData, FieldFile};
pub use mask::{DomainMask, NodeTag};
