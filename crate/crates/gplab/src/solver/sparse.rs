use crate::error::{Error, Result};

/// Compressed sparse row matrix.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from (row, col, value) triplets; duplicate entries are summed.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut rows = Vec::with_capacity(triplets.len());
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            if rows.last() == Some(&r) && col_idx.last() == Some(&c) {
                *vals.last_mut().unwrap() += v;
            } else {
                rows.push(r);
                col_idx.push(c);
                vals.push(v);
            }
        }
        let mut row_ptr = vec![0usize; n + 1];
        for &r in &rows {
            row_ptr[r + 1] += 1;
        }
        for r in 0..n {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self { n, row_ptr, col_idx, vals }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for r in 0..self.n {
            let mut s = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += self.vals[k] * x[self.col_idx[k]];
            }
            y[r] = s;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                if self.col_idx[k] == r {
                    d[r] += self.vals[k];
                }
            }
        }
        d
    }

    /// True when every off-diagonal entry is `<= tol`.
    pub fn offdiagonals_nonpositive(&self, tol: f64) -> bool {
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                if self.col_idx[k] != r && self.vals[k] > tol {
                    return false;
                }
            }
        }
        true
    }

    pub fn rows(&self) -> impl Iterator<Item = (usize, &[usize], &[f64])> {
        (0..self.n).map(move |r| {
            let lo = self.row_ptr[r];
            let hi = self.row_ptr[r + 1];
            (r, &self.col_idx[lo..hi], &self.vals[lo..hi])
        })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Stabilized bi-conjugate gradients with Jacobi (diagonal) preconditioning.
///
/// Returns `(x, iterations, residual_history)` once the relative residual in
/// the 2-norm drops below `tol`. Deterministic for identical inputs.
pub fn bicgstab(
    a: &CsrMatrix,
    b: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, usize, Vec<f64>)> {
    let n = a.n();
    assert_eq!(b.len(), n);
    let bnorm = norm(b).max(f64::MIN_POSITIVE);
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d.abs() > 0.0 { 1.0 / d } else { 1.0 })
        .collect();

    let mut x = match x0 {
        Some(x0) => x0.to_vec(),
        None => vec![0.0; n],
    };
    let mut r = vec![0.0; n];
    a.matvec(&x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let r_hat = r.clone();
    let mut history = vec![norm(&r) / bnorm];
    if history[0] <= tol {
        return Ok((x, 0, history));
    }

    let mut rho = 1.0;
    let mut alpha = 1.0;
    let mut omega = 1.0;
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut p_hat = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut s_hat = vec![0.0; n];
    let mut t = vec![0.0; n];

    for it in 1..=max_iter {
        let rho1 = dot(&r_hat, &r);
        if rho1.abs() < 1e-300 {
            return Err(Error::LinearSolveFailed {
                kind: "broke down (rho ~ 0)",
                iters: it,
                residual: *history.last().unwrap(),
            });
        }
        let beta = (rho1 / rho) * (alpha / omega);
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        for i in 0..n {
            p_hat[i] = inv_diag[i] * p[i];
        }
        a.matvec(&p_hat, &mut v);
        alpha = rho1 / dot(&r_hat, &v);
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if norm(&s) / bnorm <= tol {
            for i in 0..n {
                x[i] += alpha * p_hat[i];
            }
            history.push(norm(&s) / bnorm);
            return Ok((x, it, history));
        }
        for i in 0..n {
            s_hat[i] = inv_diag[i] * s[i];
        }
        a.matvec(&s_hat, &mut t);
        let tt = dot(&t, &t);
        if tt == 0.0 {
            return Err(Error::LinearSolveFailed {
                kind: "broke down (t = 0)",
                iters: it,
                residual: *history.last().unwrap(),
            });
        }
        omega = dot(&t, &s) / tt;
        for i in 0..n {
            x[i] += alpha * p_hat[i] + omega * s_hat[i];
            r[i] = s[i] - omega * t[i];
        }
        let rel = norm(&r) / bnorm;
        history.push(rel);
        if rel <= tol {
            return Ok((x, it, history));
        }
        if omega.abs() < 1e-300 {
            return Err(Error::LinearSolveFailed {
                kind: "broke down (omega ~ 0)",
                iters: it,
                residual: rel,
            });
        }
        rho = rho1;
    }
    Err(Error::LinearSolveFailed {
        kind: "hit max iterations",
        iters: max_iter,
        residual: *history.last().unwrap(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn triplets_merge_and_matvec() {
        let a = CsrMatrix::from_triplets(
            3,
            vec![(0, 0, 1.0), (0, 0, 1.0), (0, 2, 3.0), (1, 1, 2.0), (2, 0, -1.0), (2, 2, 4.0)],
        );
        assert_eq!(a.nnz(), 5);
        let mut y = vec![0.0; 3];
        a.matvec(&[1.0, 2.0, 3.0], &mut y);
        assert_eq!(y, vec![11.0, 4.0, 11.0]);
        assert_eq!(a.diagonal(), vec![2.0, 2.0, 4.0]);
    }

    #[test]
    fn identity_system_returns_rhs() {
        let n = 10;
        let a = CsrMatrix::from_triplets(n, (0..n).map(|i| (i, i, 1.0)).collect());
        let b: Vec<f64> = (0..n).map(|i| i as f64 - 3.5).collect();
        let (x, iters, _) = bicgstab(&a, &b, None, 1e-14, 100).unwrap();
        for i in 0..n {
            assert!((x[i] - b[i]).abs() < 1e-12);
        }
        assert!(iters <= 2);
    }

    #[test]
    fn random_diagonally_dominant_system() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let n = 100;
        let mut trip = Vec::new();
        for i in 0..n {
            let mut offsum = 0.0;
            for _ in 0..4 {
                let j = rng.gen_range(0..n);
                if j == i {
                    continue;
                }
                let v: f64 = rng.gen_range(-1.0..1.0);
                offsum += v.abs();
                trip.push((i, j, v));
            }
            trip.push((i, i, offsum + rng.gen_range(1.0..2.0)));
        }
        let a = CsrMatrix::from_triplets(n, trip);
        let xstar: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut b = vec![0.0; n];
        a.matvec(&xstar, &mut b);
        let (x, _, hist) = bicgstab(&a, &b, None, 1e-12, 1000).unwrap();
        for i in 0..n {
            assert!((x[i] - xstar[i]).abs() < 1e-9);
        }
        assert!(*hist.last().unwrap() <= 1e-12);
        // residual history ends below where it started
        assert!(hist.last().unwrap() < hist.first().unwrap());
    }

    #[test]
    fn max_iter_reports_history() {
        // 1-d Dirichlet Laplacian: needs many more than one iteration
        let n = 50;
        let mut trip = Vec::new();
        for i in 0..n {
            trip.push((i, i, 2.0));
            if i > 0 {
                trip.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                trip.push((i, i + 1, -1.0));
            }
        }
        let a = CsrMatrix::from_triplets(n, trip);
        match bicgstab(&a, &vec![1.0; n], None, 1e-14, 1) {
            Err(crate::error::Error::LinearSolveFailed { iters, residual, .. }) => {
                assert_eq!(iters, 1);
                assert!(residual > 1e-14);
            }
            other => panic!("expected failure, got {other:?}"),
        }
    }
}
