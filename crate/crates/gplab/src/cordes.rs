//! Cordes-condition diagnostics: per-matrix margins, field reports, and the
//! admissible p-range of the coefficient family `A(eta)`.

use crate::error::{Error, Result};
use crate::field::{DomainMask, SymMat, SymMatrixField};
use serde::{Deserialize, Serialize};

/// Outcome of checking the Cordes condition over a coefficient field.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CordesReport {
    pub satisfied: bool,
    /// Minimal per-node margin, capped at 1. In `(0, 1]` iff `satisfied`.
    pub delta: f64,
    /// Minimal pre-cap margin, for diagnostics.
    pub delta_raw: f64,
    /// Node attaining the minimal margin (lowest index on ties).
    pub worst_node: usize,
    /// Measured eigenvalue range over the field.
    pub lambda1: f64,
    pub lambda2: f64,
}

/// Pre-cap Cordes margin `delta = (tr A)^2 / |A|_F^2 - (n - 1)`.
///
/// The condition `sum a_ij^2 <= (sum a_ii)^2 / (n - 1 + delta)` holds with
/// some margin iff this is positive.
pub fn cordes_delta_raw(a: &SymMat) -> Result<f64> {
    if !a.is_positive_definite() {
        return Err(Error::NotPositiveDefinite { node: None });
    }
    let tr = a.trace();
    Ok(tr * tr / a.frobenius_sq() - (a.dim() as f64 - 1.0))
}

/// Largest admissible Cordes `delta`, capped at 1 (the identity attains 1).
pub fn cordes_delta_matrix(a: &SymMat) -> Result<f64> {
    Ok(cordes_delta_raw(a)?.min(1.0))
}

/// Per-interior-node capped margins, in node order.
pub fn per_node_deltas(coeffs: &SymMatrixField, mask: &DomainMask) -> Result<Vec<(usize, f64)>> {
    mask.interior_nodes()
        .map(|idx| {
            cordes_delta_matrix(&coeffs.get(idx))
                .map(|d| (idx, d))
                .map_err(|_| Error::NotPositiveDefinite { node: Some(idx) })
        })
        .collect()
}

/// Minimal Cordes margin over the interior nodes of a coefficient field.
pub fn cordes_field(coeffs: &SymMatrixField, mask: &DomainMask) -> Result<CordesReport> {
    let mut worst: Option<(usize, f64, f64)> = None;
    let mut lambda1 = f64::INFINITY;
    let mut lambda2 = f64::NEG_INFINITY;
    for idx in mask.interior_nodes() {
        let a = coeffs.get(idx);
        let raw =
            cordes_delta_raw(&a).map_err(|_| Error::NotPositiveDefinite { node: Some(idx) })?;
        let ev = a.eigenvalues();
        lambda1 = lambda1.min(ev[0]);
        lambda2 = lambda2.max(*ev.last().unwrap());
        let capped = raw.min(1.0);
        let replace = match worst {
            None => true,
            Some((_, d, _)) => capped < d,
        };
        if replace {
            worst = Some((idx, capped, raw));
        }
    }
    let (worst_node, delta, delta_raw) =
        worst.ok_or_else(|| Error::InvalidGrid("mask has no interior nodes".into()))?;
    Ok(CordesReport { satisfied: delta > 0.0, delta, delta_raw, worst_node, lambda1, lambda2 })
}

/// Supremum of `p` for which the family `{A(eta)}` satisfies the Cordes
/// condition with a uniform positive margin: `3 + 2/(n-2)` for `n >= 3`.
pub fn max_p_for_cordes(n: usize) -> Result<f64> {
    if n <= 2 {
        return Err(Error::CordesDimensionTooSmall(n));
    }
    Ok(3.0 + 2.0 / (n as f64 - 2.0))
}

/// Pre-cap margin of `A = I + (p-2) s e (x) e` in closed form.
pub fn delta_closed_form(n: usize, p: f64, s: f64) -> f64 {
    let nf = n as f64;
    let t = 1.0 + (p - 2.0) * s;
    let tr = nf - 1.0 + t;
    tr * tr / (nf - 1.0 + t * t) - (nf - 1.0)
}

/// Empirical supremum of admissible `p > 2`, found by bisection over the
/// worst margin across `s in [0, 1]` (an `epsilon > 0` only keeps `s` below
/// 1, so the threshold is epsilon-independent; the full range is scanned
/// regardless).
pub fn empirical_p_threshold(n: usize, _epsilon: f64, tol: f64) -> Result<f64> {
    if n <= 2 {
        return Err(Error::CordesDimensionTooSmall(n));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParam("bisection tolerance must be > 0".into()));
    }
    let admissible = |p: f64| -> bool {
        const SCAN: usize = 200;
        (0..=SCAN).all(|k| {
            let s = k as f64 / SCAN as f64;
            1.0 + (p - 2.0) * s > 0.0 && delta_closed_form(n, p, s) > 0.0
        })
    };
    let mut lo = 2.0;
    let mut hi = 4.0;
    while admissible(hi) {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::InvalidParam(format!("no upper Cordes threshold found for n={n}")));
        }
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if admissible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{DomainMask, GridSpec};
    use crate::operator::coefficient_matrix;

    #[test]
    fn delta_spot_values() {
        for n in 1..=3 {
            assert_eq!(cordes_delta_matrix(&SymMat::identity(n)).unwrap(), 1.0);
            assert_eq!(cordes_delta_raw(&SymMat::identity(n)).unwrap(), 1.0);
        }
        let d = cordes_delta_matrix(&SymMat::diag(&[3.0, 1.0, 1.0])).unwrap();
        assert!((d - 3.0 / 11.0).abs() < 1e-14);
        let d = cordes_delta_raw(&SymMat::diag(&[5.0, 1.0, 1.0])).unwrap();
        assert!((d - (49.0 / 27.0 - 2.0)).abs() < 1e-14);
        assert!(d < 0.0);
        assert!(cordes_delta_matrix(&SymMat::diag(&[1.0, -0.5])).is_err());
    }

    #[test]
    fn field_report_identity_and_mixed() {
        let g = GridSpec::cube(3, 0.0, 1.0, 5).unwrap();
        let mask = DomainMask::solid_box(g.clone());
        let ident = SymMatrixField::from_fn(g.clone(), |_| SymMat::identity(3));
        let rep = cordes_field(&ident, &mask).unwrap();
        assert!(rep.satisfied);
        assert_eq!(rep.delta, 1.0);
        assert_eq!((rep.lambda1, rep.lambda2), (1.0, 1.0));

        // one bad node carries diag(5,1,1)
        let bad = mask.interior_nodes().nth(3).unwrap();
        let mut mixed = ident.clone();
        mixed.set(bad, &SymMat::diag(&[5.0, 1.0, 1.0]));
        let rep = cordes_field(&mixed, &mask).unwrap();
        assert!(!rep.satisfied);
        assert_eq!(rep.worst_node, bad);
    }

    #[test]
    fn field_report_from_gradient_family() {
        // A(Dv) for v = |x|^2/2, p = 2.5, eps = 0, n = 2: s = 1 at every
        // node, t = p - 1 = 1.5, so delta = (1 + t)^2 / (1 + t^2) - 1 = 12/13
        // (below the cap, hence equal to the raw value).
        let g = GridSpec::cube(2, 0.25, 1.0, 9).unwrap();
        let mask = DomainMask::solid_box(g.clone());
        let coeffs = SymMatrixField::from_fn(g.clone(), |x| {
            coefficient_matrix(&[x[0], x[1], 0.0], 2, 2.5, 0.0).unwrap()
        });
        let rep = cordes_field(&coeffs, &mask).unwrap();
        assert!(rep.satisfied);
        let expected = 6.25 / 3.25 - 1.0;
        assert!((rep.delta - expected).abs() < 1e-12, "delta {}", rep.delta);
        assert!((rep.delta_raw - expected).abs() < 1e-12, "raw {}", rep.delta_raw);
    }

    #[test]
    fn max_p_values() {
        assert_eq!(max_p_for_cordes(3).unwrap(), 5.0);
        assert_eq!(max_p_for_cordes(4).unwrap(), 4.0);
        assert!((max_p_for_cordes(6).unwrap() - 3.5).abs() < 1e-15);
        assert!(matches!(max_p_for_cordes(2), Err(Error::CordesDimensionTooSmall(2))));
    }

    #[test]
    fn closed_form_matches_matrix_route() {
        for n in 2..=3usize {
            for &p in &[1.3, 1.9, 2.0, 2.7, 3.5, 4.5] {
                for k in 0..=10 {
                    let s = k as f64 / 10.0;
                    if 1.0 + (p - 2.0) * s <= 0.0 {
                        continue;
                    }
                    let mut diag = vec![1.0; n];
                    diag[0] = 1.0 + (p - 2.0) * s;
                    let m = SymMat::diag(&diag);
                    let got = cordes_delta_raw(&m).unwrap();
                    let want = delta_closed_form(n, p, s);
                    assert!((got - want).abs() < 1e-12, "n={n} p={p} s={s}");
                }
            }
        }
    }

    #[test]
    fn monotone_in_p_distance_from_two() {
        // pre-cap delta at s = 1 is non-increasing as p moves away from 2
        for n in 2..=4usize {
            let mut prev = f64::INFINITY;
            for k in 0..=30 {
                let p = 2.0 + k as f64 * 0.1;
                let d = delta_closed_form(n, p, 1.0);
                assert!(d <= prev + 1e-13);
                prev = d;
            }
            let mut prev = f64::INFINITY;
            for k in 0..=9 {
                let p = 2.0 - k as f64 * 0.1;
                let d = delta_closed_form(n, p, 1.0);
                assert!(d <= prev + 1e-13);
                prev = d;
            }
        }
    }

    #[test]
    fn threshold_matches_closed_form() {
        for n in 3..=10 {
            let t = empirical_p_threshold(n, 0.0, 1e-10).unwrap();
            let want = max_p_for_cordes(n).unwrap();
            assert!((t - want).abs() < 1e-9, "n={n}: {t} vs {want}");
        }
        // epsilon-independence
        for &eps in &[1e-3, 0.1, 1.0] {
            let t = empirical_p_threshold(3, eps, 1e-10).unwrap();
            assert!((t - 5.0).abs() < 1e-9);
        }
    }

    #[test]
    fn rotation_invariance_of_delta() {
        use nalgebra::DMatrix;
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let n = 3;
            let mut a = SymMat::identity(n);
            for i in 0..n {
                a.add(i, i, rng.gen_range(0.0..2.0));
                for j in (i + 1)..n {
                    a.set(i, j, rng.gen_range(-0.2..0.2));
                }
            }
            if !a.is_positive_definite() {
                continue;
            }
            let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0f64));
            let q = m.qr().q();
            let rot = &q * a.to_dmatrix() * q.transpose();
            let mut b = SymMat::zeros(n);
            for i in 0..n {
                for j in i..n {
                    b.set(i, j, 0.5 * (rot[(i, j)] + rot[(j, i)]));
                }
            }
            let da = cordes_delta_raw(&a).unwrap();
            let db = cordes_delta_raw(&b).unwrap();
            assert!((da - db).abs() < 1e-10);
        }
    }
}
