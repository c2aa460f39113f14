use super::grid::GridSpec;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeTag {
    Interior,
    Boundary,
    Exterior,
}

/// Per-node classification of a computational domain carved out of the grid.
///
/// Construction guarantees the stencil invariant: every interior node's full
/// one-step neighborhood (infinity-norm radius 1, diagonals included) is
/// interior or boundary, never exterior.
#[derive(Debug, Clone)]
pub struct DomainMask {
    grid: GridSpec,
    tags: Vec<NodeTag>,
}

impl DomainMask {
    /// Mask from an inside/outside predicate on physical coordinates.
    ///
    /// Inside nodes that touch an outside node (or the grid edge) become
    /// boundary nodes; the rest of the inside is interior.
    pub fn from_predicate(grid: GridSpec, inside: impl Fn(&[f64; 3]) -> bool) -> Self {
        let n = grid.num_nodes();
        let mut is_in = vec![false; n];
        for idx in 0..n {
            is_in[idx] = inside(&grid.point(idx));
        }
        let mut tags = vec![NodeTag::Exterior; n];
        let dim = grid.dim();
        for idx in 0..n {
            if !is_in[idx] {
                continue;
            }
            let mut boundary = grid.on_box_face(idx);
            if !boundary {
                'nbrs: for off in neighborhood_offsets(dim) {
                    match grid.offset(idx, off) {
                        Some(j) if is_in[j] => {}
                        _ => {
                            boundary = true;
                            break 'nbrs;
                        }
                    }
                }
            }
            tags[idx] = if boundary { NodeTag::Boundary } else { NodeTag::Interior };
        }
        Self { grid, tags }
    }

    /// The full bounding box: faces are boundary, everything else interior.
    pub fn solid_box(grid: GridSpec) -> Self {
        Self::from_predicate(grid, |_| true)
    }

    pub fn disk(grid: GridSpec, center: [f64; 3], radius: f64) -> Self {
        Self::from_predicate(grid, |x| dist(x, &center) <= radius)
    }

    pub fn annulus(grid: GridSpec, center: [f64; 3], r_in: f64, r_out: f64) -> Self {
        Self::from_predicate(grid, |x| {
            let d = dist(x, &center);
            d >= r_in && d <= r_out
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    pub fn tag(&self, idx: usize) -> NodeTag {
        self.tags[idx]
    }

    #[inline]
    pub fn is_interior(&self, idx: usize) -> bool {
        self.tags[idx] == NodeTag::Interior
    }

    #[inline]
    pub fn is_exterior(&self, idx: usize) -> bool {
        self.tags[idx] == NodeTag::Exterior
    }

    pub fn interior_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.tags.len()).filter(|&i| self.tags[i] == NodeTag::Interior)
    }

    pub fn boundary_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.tags.len()).filter(|&i| self.tags[i] == NodeTag::Boundary)
    }

    pub fn num_interior(&self) -> usize {
        self.interior_nodes().count()
    }

    /// Checks the stencil invariant; used by tests.
    pub fn validate(&self) -> bool {
        let dim = self.grid.dim();
        self.interior_nodes().all(|idx| {
            neighborhood_offsets(dim).into_iter().all(|off| match self.grid.offset(idx, off) {
                Some(j) => !self.is_exterior(j),
                None => false,
            })
        })
    }
}

fn dist(x: &[f64; 3], c: &[f64; 3]) -> f64 {
    let mut s = 0.0;
    for a in 0..3 {
        s += (x[a] - c[a]) * (x[a] - c[a]);
    }
    s.sqrt()
}

/// All nonzero offsets with infinity norm 1 in `dim` dimensions.
pub(crate) fn neighborhood_offsets(dim: usize) -> Vec<[i64; 3]> {
    let range = |used: bool| if used { vec![-1i64, 0, 1] } else { vec![0i64] };
    let mut out = Vec::new();
    for i in range(dim >= 1) {
        for j in range(dim >= 2) {
            for k in range(dim >= 3) {
                if i != 0 || j != 0 || k != 0 {
                    out.push([i, j, k]);
                }
            }
        }
    }
    out
}
