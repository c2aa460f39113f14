use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// A uniform, isotropic Cartesian grid in dimension `1..=3`.
///
/// Unused axes carry `counts = 1` and `lo = hi = 0`. The spacing `h` is the
/// same on every used axis and satisfies `hi - lo = (counts - 1) * h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    dim: usize,
    lo: [f64; 3],
    hi: [f64; 3],
    counts: [usize; 3],
    h: f64,
}

impl GridSpec {
    pub fn new(dim: usize, lo: &[f64], hi: &[f64], counts: &[usize]) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dim {dim} not in 1..=3")));
        }
        if lo.len() != dim || hi.len() != dim || counts.len() != dim {
            return Err(Error::InvalidGrid("lo/hi/counts length must equal dim".into()));
        }
        let mut l = [0.0; 3];
        let mut u = [0.0; 3];
        let mut c = [1usize; 3];
        let mut h = None;
        for a in 0..dim {
            if counts[a] < 3 {
                return Err(Error::InvalidGrid(format!("axis {a}: counts {} < 3", counts[a])));
            }
            if !(hi[a] > lo[a]) {
                return Err(Error::InvalidGrid(format!("axis {a}: hi <= lo")));
            }
            let ha = (hi[a] - lo[a]) / (counts[a] - 1) as f64;
            match h {
                None => h = Some(ha),
                Some(h0) => {
                    if (ha - h0).abs() > 1e-12 * h0.abs() {
                        return Err(Error::InvalidGrid(format!(
                            "anisotropic spacing: axis {a} h = {ha}, axis 0 h = {h0}"
                        )));
                    }
                }
            }
            l[a] = lo[a];
            u[a] = hi[a];
            c[a] = counts[a];
        }
        Ok(Self { dim, lo: l, hi: u, counts: c, h: h.unwrap() })
    }

    /// Square/cubic grid over `[lo, hi]^dim` with `count` nodes per axis.
    pub fn cube(dim: usize, lo: f64, hi: f64, count: usize) -> Result<Self> {
        Self::new(dim, &vec![lo; dim], &vec![hi; dim], &vec![count; dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn lo(&self) -> &[f64; 3] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64; 3] {
        &self.hi
    }

    pub fn counts(&self) -> &[usize; 3] {
        &self.counts
    }

    pub fn num_nodes(&self) -> usize {
        self.counts[0] * self.counts[1] * self.counts[2]
    }

    /// Row-major linear index of a multi-index.
    #[inline]
    pub fn index(&self, ijk: [usize; 3]) -> usize {
        (ijk[0] * self.counts[1] + ijk[1]) * self.counts[2] + ijk[2]
    }

    /// Multi-index of a linear index.
    #[inline]
    pub fn multi_index(&self, idx: usize) -> [usize; 3] {
        let k = idx % self.counts[2];
        let rest = idx / self.counts[2];
        let j = rest % self.counts[1];
        let i = rest / self.counts[1];
        [i, j, k]
    }

    /// Physical coordinates of a node.
    #[inline]
    pub fn point(&self, idx: usize) -> [f64; 3] {
        let m = self.multi_index(idx);
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = self.lo[a] + m[a] as f64 * self.h;
        }
        x
    }

    /// Neighbor at multi-index offset `off`, or `None` if it leaves the grid.
    #[inline]
    pub fn offset(&self, idx: usize, off: [i64; 3]) -> Option<usize> {
        let m = self.multi_index(idx);
        let mut out = [0usize; 3];
        for a in 0..3 {
            let v = m[a] as i64 + off[a];
            if v < 0 || v >= self.counts[a] as i64 {
                return None;
            }
            out[a] = v as usize;
        }
        Some(self.index(out))
    }

    /// True when the multi-index lies on a face of the bounding box.
    #[inline]
    pub fn on_box_face(&self, idx: usize) -> bool {
        let m = self.multi_index(idx);
        (0..self.dim).any(|a| m[a] == 0 || m[a] == self.counts[a] - 1)
    }

    pub fn nodes(&self) -> impl Iterator<Item = usize> {
        0..self.num_nodes()
    }
}
