pub mod convergence;
pub mod cordes;
pub mod oracle;
pub mod regularity;
pub mod solve;

use gplab::field::{DomainMask, ScalarField};

/// Sup error over non-exterior nodes.
pub fn sup_err(a: &ScalarField, b: &ScalarField, mask: &DomainMask) -> f64 {
    let mut m = 0.0f64;
    for idx in a.grid().nodes() {
        if !mask.is_exterior(idx) {
            m = m.max((a.get(idx) - b.get(idx)).abs());
        }
    }
    m
}

/// Discrete L2 error with weight h^dim over non-exterior nodes.
pub fn l2_err(a: &ScalarField, b: &ScalarField, mask: &DomainMask) -> f64 {
    let grid = a.grid();
    let w = grid.h().powi(grid.dim() as i32);
    let mut s = 0.0;
    for idx in grid.nodes() {
        if !mask.is_exterior(idx) {
            let d = a.get(idx) - b.get(idx);
            s += w * d * d;
        }
    }
    s.sqrt()
}

/// Least-squares slope of y against x.
pub fn fitted_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}
