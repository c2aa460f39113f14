//! Empirical regularity estimators: plane fits and improvement-of-flatness
//! sequences, gradient Hoelder-exponent fits, and interior W^{2,2}
//! diagnostics swept over grid spacing and regularization.

use crate::error::{Error, Result};
use crate::field::{discrete_norms, DomainMask, Region, ScalarField, VectorField};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Least-squares affine fit of `u` over the non-exterior nodes of a ball:
/// returns the slope vector and the sup-oscillation of `u - q . x` over the
/// same nodes.
pub fn best_plane(
    u: &ScalarField,
    mask: &DomainMask,
    center: [f64; 3],
    radius: f64,
) -> Result<([f64; 3], f64)> {
    let grid = u.grid();
    let dim = grid.dim();
    let region = Region::Ball { center, radius };
    let mut nodes = Vec::new();
    for idx in grid.nodes() {
        if !mask.is_exterior(idx) && region.contains(&grid.point(idx), dim) {
            nodes.push(idx);
        }
    }
    if nodes.len() < dim + 1 {
        return Err(Error::RankDeficientFit { center, radius });
    }
    // normal equations for [1, x - center] coefficients
    let m = dim + 1;
    let mut ata = DMatrix::<f64>::zeros(m, m);
    let mut atb = DVector::<f64>::zeros(m);
    let mut row = vec![0.0; m];
    for &idx in &nodes {
        let x = grid.point(idx);
        row[0] = 1.0;
        for a in 0..dim {
            row[a + 1] = x[a] - center[a];
        }
        for i in 0..m {
            for j in 0..m {
                ata[(i, j)] += row[i] * row[j];
            }
            atb[i] += row[i] * u.get(idx);
        }
    }
    let sol = ata
        .cholesky()
        .ok_or(Error::RankDeficientFit { center, radius })?
        .solve(&atb);
    let mut q = [0.0; 3];
    for a in 0..dim {
        q[a] = sol[a + 1];
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &idx in &nodes {
        let x = grid.point(idx);
        let mut v = u.get(idx);
        for a in 0..dim {
            v -= q[a] * x[a];
        }
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok((q, hi - lo))
}

/// Improvement-of-flatness record over the dyadic-style radii `r_k = r0 rho^k`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlatnessReport {
    pub rho: f64,
    pub radii: Vec<f64>,
    pub q_k: Vec<[f64; 3]>,
    pub osc_k: Vec<f64>,
    /// `|q_{k+1} - q_k|` per step.
    pub q_steps: Vec<f64>,
    /// Fitted exponent from `osc_k ~ r_k^{1 + alpha}`; `None` when the field
    /// is a plane to rounding (no exponent to fit).
    pub alpha_hat: Option<f64>,
    pub exact_plane: bool,
    /// True when a level had too few ball nodes and the sequence stopped
    /// early.
    pub truncated: bool,
}

/// Fits planes over `B_{r0 rho^k}(center)` for `k = 0..levels`, recording the
/// oscillation of `u - q_k . x` at each scale. A level whose ball contains
/// fewer than 8 nodes truncates the sequence with a warning flag.
pub fn flatness_sequence(
    u: &ScalarField,
    mask: &DomainMask,
    center: [f64; 3],
    r0: f64,
    rho: f64,
    levels: usize,
) -> Result<FlatnessReport> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidParam(format!("rho = {rho} must lie in (0, 1)")));
    }
    if levels < 3 {
        return Err(Error::InvalidParam(format!("levels = {levels} must be >= 3")));
    }
    let grid = u.grid();
    let dim = grid.dim();
    let mut radii = Vec::new();
    let mut q_k = Vec::new();
    let mut osc_k = Vec::new();
    let mut truncated = false;
    let mut scale = 0.0f64;
    for k in 0..=levels {
        let r = r0 * rho.powi(k as i32);
        let count = grid
            .nodes()
            .filter(|&idx| {
                !mask.is_exterior(idx)
                    && Region::Ball { center, radius: r }.contains(&grid.point(idx), dim)
            })
            .count();
        if count < 8 {
            truncated = true;
            break;
        }
        let (q, osc) = best_plane(u, mask, center, r)?;
        scale = scale.max(osc).max(q.iter().fold(0.0f64, |m, v| m.max(v.abs())) * r);
        radii.push(r);
        q_k.push(q);
        osc_k.push(osc);
    }
    if radii.len() < 2 {
        return Err(Error::TooFewBallNodes {
            center,
            radius: r0 * rho,
            count: 0,
            need: 8,
        });
    }
    let q_steps: Vec<f64> = q_k
        .windows(2)
        .map(|w| {
            let mut s = 0.0;
            for a in 0..dim {
                s += (w[1][a] - w[0][a]) * (w[1][a] - w[0][a]);
            }
            s.sqrt()
        })
        .collect();
    let exact_plane = osc_k.iter().all(|&o| o <= 1e-11 * (1.0 + scale));
    let alpha_hat = if exact_plane {
        None
    } else {
        let pts: Vec<(f64, f64)> = radii
            .iter()
            .zip(&osc_k)
            .filter(|&(_, &o)| o > 0.0)
            .map(|(&r, &o)| (r.ln(), o.ln()))
            .collect();
        if pts.len() < 2 {
            None
        } else {
            Some(least_squares_slope(&pts).0 - 1.0)
        }
    };
    Ok(FlatnessReport { rho, radii, q_k, osc_k, q_steps, alpha_hat, exact_plane, truncated })
}

/// Gradient Hoelder fit `osc(Du; B_r) ~ c r^alpha`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HolderFit {
    pub alpha_hat: f64,
    pub c_hat: f64,
    pub r_range: (f64, f64),
    /// Root-mean-square misfit of the log-log regression.
    pub residual: f64,
    /// All oscillations vanished to rounding; no exponent can be fitted and
    /// the gradient is at least Lipschitz on the sampled balls.
    pub lipschitz_or_better: bool,
}

/// Fits the gradient oscillation exponent: for each radius take the largest
/// component oscillation over all centers, then regress log-oscillation on
/// log-radius. Requires at least 4 radii spanning at least one dyadic decade.
pub fn holder_fit_gradient(
    du: &VectorField,
    mask: &DomainMask,
    centers: &[[f64; 3]],
    radii: &[f64],
) -> Result<HolderFit> {
    if radii.len() < 4 {
        return Err(Error::InvalidParam(format!("need >= 4 radii, got {}", radii.len())));
    }
    let rmin = radii.iter().cloned().fold(f64::INFINITY, f64::min);
    let rmax = radii.iter().cloned().fold(0.0f64, f64::max);
    if !(rmax >= 2.0 * rmin) {
        return Err(Error::InvalidParam(format!(
            "radii must span a dyadic decade: max {rmax} < 2 min {rmin}"
        )));
    }
    if centers.is_empty() {
        return Err(Error::InvalidParam("need at least one center".into()));
    }
    let grid = du.grid();
    let dim = grid.dim();
    let mut osc_per_radius = Vec::with_capacity(radii.len());
    let mut sup_du = 0.0f64;
    for &r in radii {
        let mut worst = 0.0f64;
        for &c in centers {
            let region = Region::Ball { center: c, radius: r };
            let mut lo = [f64::INFINITY; 3];
            let mut hi = [f64::NEG_INFINITY; 3];
            let mut count = 0usize;
            for idx in grid.nodes() {
                // gradients are stored only on interior nodes
                if !mask.is_interior(idx) || !region.contains(&grid.point(idx), dim) {
                    continue;
                }
                let g = du.get(idx);
                for a in 0..dim {
                    lo[a] = lo[a].min(g[a]);
                    hi[a] = hi[a].max(g[a]);
                    sup_du = sup_du.max(g[a].abs());
                }
                count += 1;
            }
            if count < 4 {
                return Err(Error::TooFewBallNodes { center: c, radius: r, count, need: 4 });
            }
            for a in 0..dim {
                worst = worst.max(hi[a] - lo[a]);
            }
        }
        osc_per_radius.push(worst);
    }
    if osc_per_radius.iter().all(|&o| o <= 1e-11 * (1.0 + sup_du)) {
        return Ok(HolderFit {
            alpha_hat: f64::INFINITY,
            c_hat: 0.0,
            r_range: (rmin, rmax),
            residual: 0.0,
            lipschitz_or_better: true,
        });
    }
    let pts: Vec<(f64, f64)> = radii
        .iter()
        .zip(&osc_per_radius)
        .filter(|&(_, &o)| o > 0.0)
        .map(|(&r, &o)| (r.ln(), o.ln()))
        .collect();
    let (slope, intercept, residual) = least_squares_line(&pts);
    Ok(HolderFit {
        alpha_hat: slope,
        c_hat: intercept.exp(),
        r_range: (rmin, rmax),
        residual,
        lipschitz_or_better: false,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct W22Entry {
    pub count: usize,
    pub h: f64,
    pub epsilon: f64,
    pub h2_seminorm: f64,
}

/// Interior second-derivative diagnostics over a `(h, epsilon)` sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct W22Report {
    pub entries: Vec<W22Entry>,
    pub subdomain: Region,
    /// Max over grid resolutions of max/min seminorm across epsilon.
    pub uniformity_ratio: f64,
    /// Slope of log(seminorm^2) against log(h) at the smallest epsilon;
    /// negative values signal divergence under refinement.
    pub divergence_exponent: Option<f64>,
}

/// Sweeps a problem over grid resolutions and regularization levels. The
/// `produce` closure returns the field to measure (a solver output or a
/// directly sampled family member) together with its mask; the interior
/// `H^2` seminorm is then taken over `subdomain`, which must keep a two-cell
/// distance from the mask boundary.
pub fn w22_sweep(
    mut produce: impl FnMut(usize, f64) -> Result<(ScalarField, DomainMask)>,
    counts: &[usize],
    eps_list: &[f64],
    subdomain: &Region,
) -> Result<W22Report> {
    if counts.is_empty() || eps_list.is_empty() {
        return Err(Error::InvalidParam("counts and eps_list must be non-empty".into()));
    }
    let mut entries = Vec::new();
    let mut uniformity_ratio = 0.0f64;
    for &count in counts {
        let mut per_eps = Vec::new();
        for &eps in eps_list {
            let (u, mask) = produce(count, eps)?;
            validate_subdomain(&mask, subdomain)?;
            let norms = discrete_norms(&u, &mask, subdomain)?;
            per_eps.push(norms.h2_seminorm);
            entries.push(W22Entry {
                count,
                h: u.grid().h(),
                epsilon: eps,
                h2_seminorm: norms.h2_seminorm,
            });
        }
        let hi = per_eps.iter().cloned().fold(0.0f64, f64::max);
        let lo = per_eps.iter().cloned().fold(f64::INFINITY, f64::min);
        if lo > 0.0 {
            uniformity_ratio = uniformity_ratio.max(hi / lo);
        }
    }
    let eps_min = eps_list.iter().cloned().fold(f64::INFINITY, f64::min);
    let pts: Vec<(f64, f64)> = entries
        .iter()
        .filter(|e| e.epsilon == eps_min && e.h2_seminorm > 0.0)
        .map(|e| (e.h.ln(), (e.h2_seminorm * e.h2_seminorm).ln()))
        .collect();
    let divergence_exponent =
        (pts.len() >= 2).then(|| least_squares_slope(&pts).0);
    Ok(W22Report { entries, subdomain: subdomain.clone(), uniformity_ratio, divergence_exponent })
}

/// Every node of the subdomain must sit at least two cells inside the mask:
/// its 2-step axis neighborhood may not touch exterior nodes or leave the
/// grid.
fn validate_subdomain(mask: &DomainMask, subdomain: &Region) -> Result<()> {
    let grid = mask.grid();
    let dim = grid.dim();
    for idx in grid.nodes() {
        if mask.is_exterior(idx) || !subdomain.contains(&grid.point(idx), dim) {
            continue;
        }
        for a in 0..dim {
            for step in [-2i64, -1, 1, 2] {
                let mut off = [0i64; 3];
                off[a] = step;
                match grid.offset(idx, off) {
                    Some(nbr) if !mask.is_exterior(nbr) => {}
                    _ => {
                        return Err(Error::InvalidParam(format!(
                            "subdomain not two cells interior at node {idx}"
                        )))
                    }
                }
            }
        }
    }
    Ok(())
}

/// Theorem-3-style admissibility band
/// `1 - beta - sqrt(n) |p - 2 - gamma| - beta (p - 2 - gamma)^+ > 0`.
pub fn theorem3_band_check(gamma: f64, p: f64, beta: f64, n: usize) -> bool {
    let d = p - 2.0 - gamma;
    1.0 - beta - (n as f64).sqrt() * d.abs() - beta * d.max(0.0) > 0.0
}

fn least_squares_slope(pts: &[(f64, f64)]) -> (f64, f64) {
    let (s, i, _) = least_squares_line(pts);
    (s, i)
}

/// Slope, intercept, and RMS residual of a 1-d least-squares line.
fn least_squares_line(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let mse: f64 = pts
        .iter()
        .map(|p| {
            let e = p.1 - (slope * p.0 + intercept);
            e * e
        })
        .sum::<f64>()
        / n;
    (slope, intercept, mse.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{gradient_central, GridSpec};

    #[test]
    fn best_plane_recovers_affine() {
        let g = GridSpec::cube(2, -1.0, 1.0, 65).unwrap();
        let mask = DomainMask::solid_box(g.clone());
        let u = ScalarField::from_fn(g, |x| 0.7 * x[0] - 1.2 * x[1] + 3.0);
        let (q, osc) = best_plane(&u, &mask, [0.0; 3], 0.5).unwrap();
        assert!((q[0] - 0.7).abs() < 1e-12 && (q[1] + 1.2).abs() < 1e-12);
        assert!(osc < 1e-12);
    }

    #[test]
    fn best_plane_symmetric_quadratic_gives_zero_slope() {
        let g = GridSpec::cube(2, -1.0, 1.0, 65).unwrap();
        let mask = DomainMask::solid_box(g.clone());
        let u = ScalarField::from_fn(g, |x| x[0] * x[0] + x[1] * x[1]);
        let (q, _) = best_plane(&u, &mask, [0.0; 3], 0.5).unwrap();
        assert!(q[0].abs() < 1e-12 && q[1].abs() < 1e-12);
    }

    #[test]
    fn best_plane_estimates_radial_gradient() {
        let g = GridSpec::cube(2, -1.0, 1.0, 257).unwrap();
        let mask = DomainMask::solid_box(g.clone());
        let u = ScalarField::from_fn(g, |x| (x[0] * x[0] + x[1] * x[1]).sqrt().powf(1.5));
        let (q, _) = best_plane(&u, &mask, [0.5, 0.0, 0.0], 0.25).unwrap();
        let exact = 1.5 * 0.5f64.sqrt();
        assert!((q[0] - exact).abs() < 0.1 * exact, "q = {q:?} vs {exact}");
        assert!(q[1].abs() < 0.1 * exact);
    }

    #[test]
    fn best_plane_rank_deficient_errors() {
        let g = GridSpec::cube(2, -1.0, 1.0, 9).unwrap();
        let mask = DomainMask::solid_box(g.clone());
        let u = ScalarField::zeros(g);
        match best_plane(&u, &mask, [0.0; 3], 1e-6) {
            Err(Error::RankDeficientFit { .. }) => {}
            other => panic!("expected rank-deficient error, got {other:?}"),
        }
    }

    #[test]
    fn plane_fit_idempotence() {
        let g = GridSpec::cube(2, -1.0, 1.0, 65).unwrap();
        let mask = DomainMask::solid_box(g.clone());
        let u = ScalarField::from_fn(g.clone(), |x| (2.0 * x[0]).sin() + x[1]);
        let (q, _) = best_plane(&u, &mask, [0.0; 3], 0.5).unwrap();
        let v = ScalarField::from_fn(g, |x| {
            (2.0 * x[0]).sin() + x[1] - q[0] * x[0] - q[1] * x[1]
        });
        let (q2, _) = best_plane(&v, &mask, [0.0; 3], 0.5).unwrap();
        assert!(q2[0].abs() < 1e-10 && q2[1].abs() < 1e-10);
    }

    #[test]
    fn flatness_affine_is_exact_plane() {
        let g = GridSpec::cube(2, -1.0, 1.0, 129).unwrap();
        let mask = DomainMask::solid_box(g.clone());
        let u = ScalarField::from_fn(g, |x| 1.0 - 0.3 * x[0] + 0.8 * x[1]);
        let rep = flatness_sequence(&u, &mask, [0.0; 3], 0.9, 0.5, 3).unwrap();
        assert!(rep.exact_plane);
        assert!(rep.alpha_hat.is_none());
        assert!(rep.q_steps.iter().all(|&s| s < 1e-10));
    }

    #[test]
    fn flatness_quadratic_alpha_one() {
        let g = GridSpec::cube(2, -1.0, 1.0, 257).unwrap();
        let mask = DomainMask::solid_box(g.clone());
        let u = ScalarField::from_fn(g, |x| 0.5 * (x[0] * x[0] + x[1] * x[1]));
        let rep = flatness_sequence(&u, &mask, [0.0; 3], 1.0, 0.5, 4).unwrap();
        let alpha = rep.alpha_hat.unwrap();
        assert!((alpha - 1.0).abs() <= 0.05, "alpha = {alpha}");
        assert!(!rep.truncated);
        // quadratic remainder: osc_k roughly r_k^2 / 2 after plane removal
        for (r, o) in rep.radii.iter().zip(&rep.osc_k) {
            assert!((o / (r * r)).abs() < 1.0, "osc {o} at r {r}");
        }
    }

    #[test]
    fn flatness_truncates_on_tiny_balls() {
        let g = GridSpec::cube(2, -1.0, 1.0, 33).unwrap();
        let mask = DomainMask::solid_box(g.clone());
        let u = ScalarField::from_fn(g, |x| x[0] * x[0]);
        let rep = flatness_sequence(&u, &mask, [0.0; 3], 1.0, 0.5, 8).unwrap();
        assert!(rep.truncated);
        assert!(rep.radii.len() < 9);
    }

    #[test]
    fn holder_fit_radial_power_half() {
        let g = GridSpec::cube(2, -1.0, 1.0, 513).unwrap();
        let mask = DomainMask::solid_box(g.clone());
        let u = ScalarField::from_fn(g, |x| (x[0] * x[0] + x[1] * x[1]).sqrt().powf(1.5));
        let du = gradient_central(&u, &mask).unwrap();
        let radii = [0.5, 0.25, 0.125, 0.0625, 0.03125];
        let fit = holder_fit_gradient(&du, &mask, &[[0.0; 3]], &radii).unwrap();
        assert!((fit.alpha_hat - 0.5).abs() <= 0.07, "alpha = {}", fit.alpha_hat);
        assert!(!fit.lipschitz_or_better);
    }

    #[test]
    fn holder_fit_smooth_saturates_at_one() {
        let g = GridSpec::cube(2, -1.0, 1.0, 257).unwrap();
        let mask = DomainMask::solid_box(g.clone());
        let u = ScalarField::from_fn(g, |x| 0.5 * (x[0] * x[0] + x[1] * x[1]));
        let du = gradient_central(&u, &mask).unwrap();
        let radii = [0.5, 0.25, 0.125, 0.0625];
        let fit = holder_fit_gradient(&du, &mask, &[[0.0; 3]], &radii).unwrap();
        assert!((fit.alpha_hat - 1.0).abs() <= 0.05, "alpha = {}", fit.alpha_hat);
    }

    #[test]
    fn holder_fit_constant_gradient_flagged() {
        let g = GridSpec::cube(2, -1.0, 1.0, 129).unwrap();
        let mask = DomainMask::solid_box(g.clone());
        let u = ScalarField::from_fn(g, |x| 2.0 * x[0] - x[1]);
        let du = gradient_central(&u, &mask).unwrap();
        let fit =
            holder_fit_gradient(&du, &mask, &[[0.0; 3]], &[0.5, 0.25, 0.125, 0.0625]).unwrap();
        assert!(fit.lipschitz_or_better);
        // and the preconditions are enforced
        assert!(holder_fit_gradient(&du, &mask, &[[0.0; 3]], &[0.5, 0.4, 0.3]).is_err());
        assert!(
            holder_fit_gradient(&du, &mask, &[[0.0; 3]], &[0.5, 0.45, 0.4, 0.35]).is_err()
        );
    }

    #[test]
    fn w22_direct_field_divergence_exponent() {
        let report = w22_sweep(
            |count, _eps| {
                let g = GridSpec::cube(1, -1.0, 1.0, count)?;
                let mask = DomainMask::solid_box(g.clone());
                let u = ScalarField::from_fn(g, |x| x[0].abs().powf(1.4));
                Ok((u, mask))
            },
            &[4097, 16385, 65537],
            &[1.0],
            &Region::Box { lo: [-0.5, 0.0, 0.0], hi: [0.5, 0.0, 0.0] },
        )
        .unwrap();
        let ex = report.divergence_exponent.unwrap();
        assert!((ex + 0.2).abs() <= 0.05, "exponent = {ex}");
    }

    #[test]
    fn w22_smooth_field_uniform() {
        let report = w22_sweep(
            |count, _eps| {
                let g = GridSpec::cube(2, -1.0, 1.0, count)?;
                let mask = DomainMask::solid_box(g.clone());
                let u = ScalarField::from_fn(g, |x| 1.0 + 2.0 * x[0] - x[1]);
                Ok((u, mask))
            },
            &[33, 65],
            &[1e-1, 1e-2],
            &Region::Ball { center: [0.0; 3], radius: 0.5 },
        )
        .unwrap();
        for e in &report.entries {
            assert!(e.h2_seminorm < 1e-10);
        }
    }

    #[test]
    fn w22_rejects_shallow_subdomain() {
        let res = w22_sweep(
            |count, _| {
                let g = GridSpec::cube(2, -1.0, 1.0, count)?;
                let mask = DomainMask::solid_box(g.clone());
                Ok((ScalarField::zeros(g), mask))
            },
            &[17],
            &[1.0],
            &Region::All,
        );
        assert!(res.is_err());
    }

    #[test]
    fn theorem3_band_values() {
        assert!(theorem3_band_check(0.1, 2.1, 0.5, 2));
        assert!(!theorem3_band_check(0.1, 3.0, 0.5, 2));
        assert!(!theorem3_band_check(0.1, 2.1, 1.0, 2));
        for (gamma, p) in [(0.3, 2.0), (0.0, 2.4), (1.0, 3.5)] {
            assert!(!theorem3_band_check(gamma, p, 1.0, 2));
        }
    }
}
