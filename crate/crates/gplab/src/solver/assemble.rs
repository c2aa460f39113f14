use super::sparse::CsrMatrix;
use crate::error::{Error, Result};
use crate::field::{DomainMask, SymMatrixField};
use serde::{Deserialize, Serialize};

/// How the mixed second-derivative terms of `-tr(A D^2 u)` are discretized.
///
/// `Central` uses the 4-point cross stencil for every off-diagonal term.
/// `Aligned` rewrites each cross term over the diagonal stencil direction of
/// matching sign, `2 a_ij u_ij = 2|a_ij| u_dd - |a_ij| (u_ii + u_jj)` with
/// `d = e_i + sign(a_ij) e_j`, so off-diagonal matrix entries are nonpositive
/// (an M-matrix) whenever `a_ii >= sum_j |a_ij|` at every node — which holds
/// for the coefficient family `A(eta)` in the admissible p-range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiscretizationMode {
    Central,
    Aligned,
}

/// Zero-order coefficient: constant `lambda` or one value per node.
#[derive(Debug, Clone)]
pub enum ZeroOrder {
    Const(f64),
    PerNode(Vec<f64>),
}

impl ZeroOrder {
    fn at(&self, node: usize) -> f64 {
        match self {
            ZeroOrder::Const(l) => *l,
            ZeroOrder::PerNode(v) => v[node],
        }
    }
}

/// Assembled linear system `-tr(A D^2 .) + lambda .` over interior unknowns,
/// with Dirichlet couplings split out for right-hand-side elimination.
#[derive(Debug, Clone)]
pub struct FrozenSystem {
    pub matrix: CsrMatrix,
    /// Equation index -> node index.
    pub interior: Vec<usize>,
    /// Node index -> equation index (usize::MAX for non-interior).
    pub eq_of_node: Vec<usize>,
    /// `(equation, boundary node, stencil weight)` couplings; the right-hand
    /// side receives `-weight * bc[node]`.
    pub boundary_terms: Vec<(usize, usize, f64)>,
}

impl FrozenSystem {
    /// Full right-hand side: interior source values with Dirichlet data
    /// eliminated in.
    pub fn rhs(&self, source_at_node: impl Fn(usize) -> f64, bc: &[f64]) -> Vec<f64> {
        let mut b: Vec<f64> = self.interior.iter().map(|&node| source_at_node(node)).collect();
        for &(eq, node, w) in &self.boundary_terms {
            b[eq] -= w * bc[node];
        }
        b
    }

    /// Scatter an equation-ordered vector back onto the grid, filling
    /// boundary nodes from `bc`.
    pub fn scatter(&self, x: &[f64], bc: &[f64], mask: &DomainMask) -> crate::field::ScalarField {
        let mut out = crate::field::ScalarField::zeros(mask.grid().clone());
        for (eq, &node) in self.interior.iter().enumerate() {
            out.set(node, x[eq]);
        }
        for node in mask.boundary_nodes() {
            out.set(node, bc[node]);
        }
        out
    }

    pub fn is_m_matrix_offdiag(&self) -> bool {
        self.matrix.offdiagonals_nonpositive(1e-13)
    }
}

/// Assembles `-sum_ij a_ij D_i D_j + lambda` over the interior nodes of the
/// mask, one row per interior node, Dirichlet rows eliminated.
pub fn assemble_frozen(
    coeffs: &SymMatrixField,
    lambda: f64,
    mask: &DomainMask,
    mode: DiscretizationMode,
) -> Result<FrozenSystem> {
    assemble_frozen_zero_order(coeffs, &ZeroOrder::Const(lambda), mask, mode)
}

pub(crate) fn assemble_frozen_zero_order(
    coeffs: &SymMatrixField,
    zero_order: &ZeroOrder,
    mask: &DomainMask,
    mode: DiscretizationMode,
) -> Result<FrozenSystem> {
    let grid = mask.grid();
    let dim = grid.dim();
    let h2 = grid.h() * grid.h();
    let interior: Vec<usize> = mask.interior_nodes().collect();
    let mut eq_of_node = vec![usize::MAX; grid.num_nodes()];
    for (eq, &node) in interior.iter().enumerate() {
        eq_of_node[node] = eq;
    }

    let mut triplets = Vec::with_capacity(interior.len() * (2 * dim + 1) * 2);
    let mut boundary_terms = Vec::new();
    // (offset, weight) pairs of the current row
    let mut stencil: Vec<([i64; 3], f64)> = Vec::with_capacity(16);

    for (eq, &node) in interior.iter().enumerate() {
        let a = coeffs.get(node);
        if !a.is_positive_definite() {
            return Err(Error::NotPositiveDefinite { node: Some(node) });
        }
        stencil.clear();
        let mut center = zero_order.at(node);
        match mode {
            DiscretizationMode::Central => {
                for i in 0..dim {
                    axis_term(&mut stencil, &mut center, i, a.get(i, i), h2);
                }
                for i in 0..dim {
                    for j in (i + 1)..dim {
                        // -2 a_ij (u_pp - u_pm - u_mp + u_mm) / (4 h^2)
                        let w = a.get(i, j) / (2.0 * h2);
                        stencil.push((corner(i, j, 1, 1), -w));
                        stencil.push((corner(i, j, -1, -1), -w));
                        stencil.push((corner(i, j, 1, -1), w));
                        stencil.push((corner(i, j, -1, 1), w));
                    }
                }
            }
            DiscretizationMode::Aligned => {
                // diagonal rewrite of the cross terms; axis coefficients
                // a_ii - sum_{j != i} |a_ij|
                for i in 0..dim {
                    let mut c = a.get(i, i);
                    for j in 0..dim {
                        if j != i {
                            c -= a.get(i, j).abs();
                        }
                    }
                    axis_term(&mut stencil, &mut center, i, c, h2);
                }
                for i in 0..dim {
                    for j in (i + 1)..dim {
                        let aij = a.get(i, j);
                        if aij == 0.0 {
                            continue;
                        }
                        // -2|a_ij| u_dd with u_dd = (u_+d - 2u + u_-d)/(2h^2)
                        let w = aij.abs() / h2;
                        let s = if aij > 0.0 { 1 } else { -1 };
                        stencil.push((corner(i, j, 1, s), -w));
                        stencil.push((corner(i, j, -1, -s), -w));
                        center += 2.0 * w;
                    }
                }
            }
        }
        triplets.push((eq, eq, center));
        for &(off, w) in &stencil {
            if w == 0.0 {
                continue;
            }
            let nbr = grid.offset(node, off).ok_or_else(|| Error::StencilExitsMask {
                node,
                detail: format!("offset {off:?} leaves the grid"),
            })?;
            let nbr_eq = eq_of_node[nbr];
            if nbr_eq != usize::MAX {
                triplets.push((eq, nbr_eq, w));
            } else if !mask.is_exterior(nbr) {
                boundary_terms.push((eq, nbr, w));
            } else {
                return Err(Error::StencilExitsMask {
                    node,
                    detail: format!("offset {off:?} hits an exterior node"),
                });
            }
        }
    }

    Ok(FrozenSystem {
        matrix: CsrMatrix::from_triplets(interior.len(), triplets),
        interior,
        eq_of_node,
        boundary_terms,
    })
}

/// `-c u_ii` three-point term.
fn axis_term(stencil: &mut Vec<([i64; 3], f64)>, center: &mut f64, axis: usize, c: f64, h2: f64) {
    let w = -c / h2;
    let mut plus = [0i64; 3];
    plus[axis] = 1;
    let mut minus = [0i64; 3];
    minus[axis] = -1;
    stencil.push((plus, w));
    stencil.push((minus, w));
    *center += 2.0 * c / h2;
}

fn corner(i: usize, j: usize, si: i64, sj: i64) -> [i64; 3] {
    let mut o = [0i64; 3];
    o[i] = si;
    o[j] = sj;
    o
}
