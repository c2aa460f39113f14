use super::grid::GridSpec;
use crate::error::{Error, Result};
use nalgebra::DMatrix;

/// Small dense symmetric matrix, upper triangle stored row-major.
///
/// Component order: n=1 -> (00); n=2 -> (00,01,11); n=3 -> (00,01,02,11,12,22).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymMat {
    n: usize,
    a: [f64; 6],
}

impl SymMat {
    pub fn zeros(n: usize) -> Self {
        Self { n, a: [0.0; 6] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_upper(n: usize, upper: &[f64]) -> Self {
        assert_eq!(upper.len(), Self::len(n));
        let mut a = [0.0; 6];
        a[..upper.len()].copy_from_slice(upper);
        Self { n, a }
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    /// Number of stored components for dimension `n`.
    pub const fn len(n: usize) -> usize {
        n * (n + 1) / 2
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn pos(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        // row-major upper triangle offset
        i * self.n - i * (i + 1) / 2 + j
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[self.pos(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let p = self.pos(i, j);
        self.a[p] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let p = self.pos(i, j);
        self.a[p] += v;
    }

    pub fn upper(&self) -> &[f64] {
        &self.a[..Self::len(self.n)]
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// Squared Frobenius norm, counting off-diagonal entries twice.
    pub fn frobenius_sq(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                s += self.get(i, j) * self.get(i, j);
            }
        }
        s
    }

    /// Quadratic form `v^T A v` over the first `n` components of `v`.
    pub fn quad_form(&self, v: &[f64; 3]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                s += v[i] * self.get(i, j) * v[j];
            }
        }
        s
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self
            .to_dmatrix()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ev
    }

    /// Sylvester's criterion on leading principal minors; cheap enough to run
    /// per node during assembly.
    pub fn is_positive_definite(&self) -> bool {
        match self.n {
            1 => self.get(0, 0) > 0.0,
            2 => self.get(0, 0) > 0.0 && self.det2(0, 1) > 0.0,
            3 => self.get(0, 0) > 0.0 && self.det2(0, 1) > 0.0 && self.det3() > 0.0,
            _ => false,
        }
    }

    fn det2(&self, i: usize, j: usize) -> f64 {
        self.get(i, i) * self.get(j, j) - self.get(i, j) * self.get(j, i)
    }

    fn det3(&self) -> f64 {
        let a = |i: usize, j: usize| self.get(i, j);
        a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1))
            - a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0))
            + a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0))
    }
}

macro_rules! field_common {
    ($name:ident) => {
        impl $name {
            pub fn grid(&self) -> &GridSpec {
                &self.grid
            }

            pub fn values(&self) -> &[f64] {
                &self.values
            }

            pub fn values_mut(&mut self) -> &mut [f64] {
                &mut self.values
            }
        }
    };
}

/// One real value per node.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
}
field_common!(ScalarField);

impl ScalarField {
    pub fn zeros(grid: GridSpec) -> Self {
        let n = grid.num_nodes();
        Self { grid, values: vec![0.0; n] }
    }

    pub fn constant(grid: GridSpec, c: f64) -> Self {
        let n = grid.num_nodes();
        Self { grid, values: vec![c; n] }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(&[f64; 3]) -> f64) -> Self {
        let values = (0..grid.num_nodes()).map(|i| f(&grid.point(i))).collect();
        Self { grid, values }
    }

    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.num_nodes() {
            return Err(Error::InvalidGrid(format!(
                "value count {} != node count {}",
                values.len(),
                grid.num_nodes()
            )));
        }
        Ok(Self { grid, values })
    }

    #[inline]
    pub fn get(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    #[inline]
    pub fn set(&mut self, idx: usize, v: f64) {
        self.values[idx] = v;
    }

    /// Sup norm over all stored nodes.
    pub fn sup(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// One `dim`-vector per node, components contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: GridSpec,
    values: Vec<f64>,
}
field_common!(VectorField);

impl VectorField {
    pub fn zeros(grid: GridSpec) -> Self {
        let n = grid.num_nodes() * grid.dim();
        Self { grid, values: vec![0.0; n] }
    }

    #[inline]
    pub fn get(&self, idx: usize) -> [f64; 3] {
        let d = self.grid.dim();
        let mut v = [0.0; 3];
        v[..d].copy_from_slice(&self.values[idx * d..idx * d + d]);
        v
    }

    #[inline]
    pub fn set(&mut self, idx: usize, v: &[f64; 3]) {
        let d = self.grid.dim();
        self.values[idx * d..idx * d + d].copy_from_slice(&v[..d]);
    }

    pub fn component(&self, idx: usize, axis: usize) -> f64 {
        self.values[idx * self.grid.dim() + axis]
    }
}

/// One symmetric `dim x dim` matrix per node, upper triangle contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrixField {
    grid: GridSpec,
    values: Vec<f64>,
}
field_common!(SymMatrixField);

impl SymMatrixField {
    pub fn zeros(grid: GridSpec) -> Self {
        let n = grid.num_nodes() * SymMat::len(grid.dim());
        Self { grid, values: vec![0.0; n] }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(&[f64; 3]) -> SymMat) -> Self {
        let mut out = Self::zeros(grid);
        for idx in 0..out.grid.num_nodes() {
            let m = f(&out.grid.point(idx));
            out.set(idx, &m);
        }
        out
    }

    #[inline]
    pub fn get(&self, idx: usize) -> SymMat {
        let k = SymMat::len(self.grid.dim());
        SymMat::from_upper(self.grid.dim(), &self.values[idx * k..idx * k + k])
    }

    #[inline]
    pub fn set(&mut self, idx: usize, m: &SymMat) {
        let k = SymMat::len(self.grid.dim());
        self.values[idx * k..idx * k + k].copy_from_slice(m.upper());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmat_roundtrip_exact() {
        let m = SymMat::from_upper(3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(m.get(0, 1), 2.0);
        assert_eq!(m.get(1, 0), 2.0);
        assert_eq!(m.get(2, 1), 5.0);
        let g = GridSpec::cube(3, 0.0, 1.0, 3).unwrap();
        let mut f = SymMatrixField::zeros(g);
        f.set(7, &m);
        assert_eq!(f.get(7), m);
    }

    #[test]
    fn symmat_trace_frobenius() {
        let m = SymMat::diag(&[3.0, 1.0, 1.0]);
        assert_eq!(m.trace(), 5.0);
        assert_eq!(m.frobenius_sq(), 11.0);
        let ev = m.eigenvalues();
        assert_eq!(ev, vec![1.0, 1.0, 3.0]);
    }

    #[test]
    fn scalar_field_from_fn() {
        let g = GridSpec::cube(2, 0.0, 1.0, 5).unwrap();
        let u = ScalarField::from_fn(g, |x| x[0] + 2.0 * x[1]);
        assert_eq!(u.get(u.grid().index([4, 4, 0])), 3.0);
    }
}
