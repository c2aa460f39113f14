use super::data::{ScalarField, SymMat, SymMatrixField, VectorField};
use super::mask::DomainMask;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Subdomain selector for norms and sweeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Region {
    All,
    Ball { center: [f64; 3], radius: f64 },
    Box { lo: [f64; 3], hi: [f64; 3] },
}

impl Region {
    pub fn contains(&self, x: &[f64; 3], dim: usize) -> bool {
        match self {
            Region::All => true,
            Region::Ball { center, radius } => {
                let mut s = 0.0;
                for a in 0..dim {
                    s += (x[a] - center[a]) * (x[a] - center[a]);
                }
                s.sqrt() <= *radius
            }
            Region::Box { lo, hi } => (0..dim).all(|a| x[a] >= lo[a] && x[a] <= hi[a]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    pub sup: f64,
    pub l2: f64,
    pub h2_seminorm: f64,
}

#[inline]
fn axis_offset(axis: usize, step: i64) -> [i64; 3] {
    let mut o = [0i64; 3];
    o[axis] = step;
    o
}

fn usable(mask: &DomainMask, idx: usize, off: [i64; 3]) -> Option<usize> {
    mask.grid().offset(idx, off).filter(|&j| !mask.is_exterior(j))
}

/// First derivative along one axis: central where possible, one-sided
/// second-order otherwise.
fn deriv_axis(u: &ScalarField, mask: &DomainMask, idx: usize, axis: usize) -> Result<f64> {
    let h = u.grid().h();
    let plus = usable(mask, idx, axis_offset(axis, 1));
    let minus = usable(mask, idx, axis_offset(axis, -1));
    match (plus, minus) {
        (Some(p), Some(m)) => Ok((u.get(p) - u.get(m)) / (2.0 * h)),
        (Some(p), None) => {
            let p2 = usable(mask, idx, axis_offset(axis, 2)).ok_or(Error::InsufficientNeighbors {
                node: idx,
                op: "one-sided gradient",
            })?;
            Ok((-3.0 * u.get(idx) + 4.0 * u.get(p) - u.get(p2)) / (2.0 * h))
        }
        (None, Some(m)) => {
            let m2 = usable(mask, idx, axis_offset(axis, -2)).ok_or(Error::InsufficientNeighbors {
                node: idx,
                op: "one-sided gradient",
            })?;
            Ok((3.0 * u.get(idx) - 4.0 * u.get(m) + u.get(m2)) / (2.0 * h))
        }
        (None, None) => Err(Error::InsufficientNeighbors { node: idx, op: "gradient" }),
    }
}

/// Central-difference gradient at a single node.
pub(crate) fn gradient_at(u: &ScalarField, mask: &DomainMask, idx: usize) -> Result<[f64; 3]> {
    let mut g = [0.0; 3];
    for a in 0..u.grid().dim() {
        g[a] = deriv_axis(u, mask, idx, a)?;
    }
    Ok(g)
}

/// Central-difference Hessian at a single node: 3-point second differences on
/// the diagonal, 4-point cross stencils off the diagonal.
pub(crate) fn hessian_at(u: &ScalarField, mask: &DomainMask, idx: usize) -> Result<SymMat> {
    let dim = u.grid().dim();
    let h = u.grid().h();
    let h2 = h * h;
    let mut m = SymMat::zeros(dim);
    for a in 0..dim {
        let p = usable(mask, idx, axis_offset(a, 1));
        let q = usable(mask, idx, axis_offset(a, -1));
        match (p, q) {
            (Some(p), Some(q)) => m.set(a, a, (u.get(p) - 2.0 * u.get(idx) + u.get(q)) / h2),
            _ => return Err(Error::InsufficientNeighbors { node: idx, op: "hessian diagonal" }),
        }
    }
    for a in 0..dim {
        for b in (a + 1)..dim {
            let mut off = [0i64; 3];
            let corner = |sa: i64, sb: i64, off: &mut [i64; 3]| {
                *off = [0; 3];
                off[a] = sa;
                off[b] = sb;
                *off
            };
            let pp = usable(mask, idx, corner(1, 1, &mut off));
            let pm = usable(mask, idx, corner(1, -1, &mut off));
            let mp = usable(mask, idx, corner(-1, 1, &mut off));
            let mm = usable(mask, idx, corner(-1, -1, &mut off));
            match (pp, pm, mp, mm) {
                (Some(pp), Some(pm), Some(mp), Some(mm)) => {
                    let v = (u.get(pp) - u.get(pm) - u.get(mp) + u.get(mm)) / (4.0 * h2);
                    m.set(a, b, v);
                }
                _ => {
                    return Err(Error::InsufficientNeighbors { node: idx, op: "hessian cross" })
                }
            }
        }
    }
    Ok(m)
}

/// Second-order gradient of `u` at every interior node; non-interior nodes
/// hold zeros and must not be read.
pub fn gradient_central(u: &ScalarField, mask: &DomainMask) -> Result<VectorField> {
    let mut out = VectorField::zeros(u.grid().clone());
    for idx in mask.interior_nodes() {
        let g = gradient_at(u, mask, idx)?;
        out.set(idx, &g);
    }
    Ok(out)
}

/// Second-order Hessian of `u` at every interior node.
pub fn hessian_central(u: &ScalarField, mask: &DomainMask) -> Result<SymMatrixField> {
    let mut out = SymMatrixField::zeros(u.grid().clone());
    for idx in mask.interior_nodes() {
        let m = hessian_at(u, mask, idx)?;
        out.set(idx, &m);
    }
    Ok(out)
}

/// Three-point second difference of `u` at `node` along the grid direction
/// `e` (integer offsets) with step `m` nodes: `(u(x+d) - 2u(x) + u(x-d)) / |d|^2`.
pub fn directional_second_difference(
    u: &ScalarField,
    mask: &DomainMask,
    node: usize,
    e: [i64; 3],
    m: usize,
) -> Result<f64> {
    let step = [e[0] * m as i64, e[1] * m as i64, e[2] * m as i64];
    let plus = usable(mask, node, step).ok_or_else(|| Error::StencilExitsMask {
        node,
        detail: format!("direction {e:?} step {m}"),
    })?;
    let neg = [-step[0], -step[1], -step[2]];
    let minus = usable(mask, node, neg).ok_or_else(|| Error::StencilExitsMask {
        node,
        detail: format!("direction {:?} step {m}", [-e[0], -e[1], -e[2]]),
    })?;
    let h = u.grid().h();
    let e2 = (e[0] * e[0] + e[1] * e[1] + e[2] * e[2]) as f64;
    let d2 = (m as f64 * h) * (m as f64 * h) * e2;
    Ok((u.get(plus) - 2.0 * u.get(node) + u.get(minus)) / d2)
}

/// Max minus min of `u` over non-exterior nodes within Euclidean distance
/// `radius` of `center`; also returns the node count used.
pub fn oscillation(
    u: &ScalarField,
    mask: &DomainMask,
    center: [f64; 3],
    radius: f64,
) -> Result<(f64, usize)> {
    let region = Region::Ball { center, radius };
    let dim = u.grid().dim();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut count = 0;
    for idx in u.grid().nodes() {
        if mask.is_exterior(idx) || !region.contains(&u.grid().point(idx), dim) {
            continue;
        }
        let v = u.get(idx);
        lo = lo.min(v);
        hi = hi.max(v);
        count += 1;
    }
    if count < 4 {
        return Err(Error::TooFewBallNodes { center, radius, count, need: 4 });
    }
    Ok((hi - lo, count))
}

/// Sup, L2, and H2-seminorm of `u` over the part of `region` covered by the
/// mask; the quadrature weight is `h^dim` per node and the H2 part sums the
/// squared Frobenius norm of the central-difference Hessian over interior
/// nodes.
pub fn discrete_norms(u: &ScalarField, mask: &DomainMask, region: &Region) -> Result<Norms> {
    let grid = u.grid();
    let dim = grid.dim();
    let w = grid.h().powi(dim as i32);
    let mut sup = 0.0f64;
    let mut l2 = 0.0;
    let mut h2 = 0.0;
    for idx in grid.nodes() {
        if mask.is_exterior(idx) || !region.contains(&grid.point(idx), dim) {
            continue;
        }
        let v = u.get(idx);
        sup = sup.max(v.abs());
        l2 += w * v * v;
        if mask.is_interior(idx) {
            h2 += w * hessian_at(u, mask, idx)?.frobenius_sq();
        }
    }
    Ok(Norms { sup, l2: l2.sqrt(), h2_seminorm: h2.sqrt() })
}
