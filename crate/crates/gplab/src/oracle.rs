//! Exact and manufactured solutions for verification: radial power profiles,
//! affine fields, and the one-dimensional `|x1|^beta` family with its exact
//! second-derivative square integral.

use crate::error::{Error, Result};
use crate::field::{DomainMask, GridSpec, ScalarField};
use crate::operator::{apply_gamma_p, ProblemParams};
use serde::{Deserialize, Serialize};

/// Homogeneity exponent `s = (gamma + 2) / (gamma + 1)` of radial profiles.
pub fn radial_exponent(gamma: f64) -> f64 {
    (gamma + 2.0) / (gamma + 1.0)
}

/// Radial power solution `u(x) = c |x|^s`, exact away from the origin, with
/// constant right-hand side `f_const`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialOracle {
    pub c: f64,
    pub s: f64,
    pub f_const: f64,
    pub gamma: f64,
    pub p: f64,
    pub dim: usize,
}

impl RadialOracle {
    pub fn u_at(&self, x: &[f64; 3]) -> f64 {
        self.c * radius(x, self.dim).powf(self.s)
    }

    /// `|Du|(x) = c s |x|^{s-1}`.
    pub fn gradient_norm_at(&self, r: f64) -> f64 {
        self.c * self.s * r.powf(self.s - 1.0)
    }

    /// The gradient Hoelder exponent of the profile, `s - 1 = 1/(1 + gamma)`.
    pub fn gradient_exponent(&self) -> f64 {
        self.s - 1.0
    }

    pub fn field(&self, grid: &GridSpec) -> ScalarField {
        let dim = self.dim;
        let (c, s) = (self.c, self.s);
        ScalarField::from_fn(grid.clone(), |x| c * radius(x, dim).powf(s))
    }

    pub fn f_field(&self, grid: &GridSpec) -> ScalarField {
        ScalarField::constant(grid.clone(), self.f_const)
    }

    /// The profile rebuilt through the scaling `u_r(y) = r^{-s} u(r y)`; for a
    /// power profile this closes exactly onto an oracle with the same data.
    pub fn rescaled(&self, r: f64) -> Result<RadialOracle> {
        if !(r > 0.0) {
            return Err(Error::InvalidParam("rescale factor must be > 0".into()));
        }
        let amp = self.c * r.powf(-self.s) * r.powf(self.s);
        let params = ProblemParams::new(self.gamma, self.p, 1e-3, 0.0)?;
        radial_oracle(amp, &params, self.dim)
    }
}

fn radius(x: &[f64; 3], dim: usize) -> f64 {
    let mut s = 0.0;
    for a in 0..dim {
        s += x[a] * x[a];
    }
    s.sqrt()
}

/// Constructs `u = c |x|^s` and its constant right-hand side
/// `f_const = -(c s)^{gamma+1} [(s + n - 2) + (p - 2)(s - 1)]`, then verifies
/// the pair against a finite-difference application of the operator on a fine
/// annulus before returning it.
pub fn radial_oracle(c: f64, params: &ProblemParams, dim: usize) -> Result<RadialOracle> {
    if !(c > 0.0) {
        return Err(Error::InvalidParam(format!("radial amplitude c = {c} must be > 0")));
    }
    if !(1..=3).contains(&dim) {
        return Err(Error::InvalidParam(format!("dim {dim} not in 1..=3")));
    }
    let s = radial_exponent(params.gamma);
    let bracket = (s + dim as f64 - 2.0) + (params.p - 2.0) * (s - 1.0);
    let f_const = -(c * s).powf(params.gamma + 1.0) * bracket;
    let oracle = RadialOracle { c, s, f_const, gamma: params.gamma, p: params.p, dim };
    verify_radial(&oracle, params)?;
    Ok(oracle)
}

/// Independent check of `f_const`: apply the discrete operator to samples of
/// the profile on a fine annulus and compare against the claimed constant.
fn verify_radial(oracle: &RadialOracle, params: &ProblemParams) -> Result<()> {
    let count = match oracle.dim {
        3 => 49,
        _ => 129,
    };
    let grid = GridSpec::cube(oracle.dim, -1.0, 1.0, count)?;
    let mask = DomainMask::annulus(grid.clone(), [0.0; 3], 0.25, 0.95);
    let u = oracle.field(&grid);
    // a tiny epsilon keeps gamma < 0 admissible without biasing the check:
    // |Du| >= c s 0.25^{s-1} on the annulus
    let check_params = ProblemParams::new(params.gamma, params.p, 1e-12, 0.0)?;
    let applied = apply_gamma_p(&u, &check_params, &mask)?;
    let mut worst = 0.0f64;
    for node in mask.interior_nodes() {
        worst = worst.max((applied.get(node) - oracle.f_const).abs());
    }
    let rel = worst / oracle.f_const.abs().max(f64::MIN_POSITIVE);
    if rel > 1e-2 {
        return Err(Error::InvalidParam(format!(
            "radial oracle verification failed: relative deviation {rel:.3e} \
             between f_const = {} and the discrete operator on the annulus",
            oracle.f_const
        )));
    }
    Ok(())
}

/// Whether the second-derivative square integral of `|x1|^beta` over `[-1,1]`
/// exists, and its exact value when it does.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "value")]
pub enum H2Classification {
    Divergent,
    Finite(f64),
}

/// Samples `u = |x1|^beta` on a one-dimensional grid and classifies its
/// second-derivative square integral: divergent iff `beta <= 3/2`, otherwise
/// exactly `2 (beta (beta - 1))^2 / (2 beta - 3)`.
pub fn power_profile_1d(beta: f64, grid: &GridSpec) -> Result<(ScalarField, H2Classification)> {
    if grid.dim() != 1 {
        return Err(Error::InvalidGrid(format!(
            "power_profile_1d needs a 1-d grid, got dim {}",
            grid.dim()
        )));
    }
    if !(beta > 1.0) {
        return Err(Error::InvalidParam(format!("beta = {beta} must be > 1")));
    }
    let u = ScalarField::from_fn(grid.clone(), |x| x[0].abs().powf(beta));
    let class = if beta <= 1.5 {
        H2Classification::Divergent
    } else {
        H2Classification::Finite(2.0 * (beta * (beta - 1.0)).powi(2) / (2.0 * beta - 3.0))
    };
    Ok((u, class))
}

/// A manufactured problem: sampled solution, matching right-hand side, and a
/// provenance block for field-file headers.
#[derive(Debug, Clone)]
pub struct Manufactured {
    pub u: ScalarField,
    pub f: ScalarField,
    pub provenance: serde_json::Value,
}

/// Builds `(u, f)` with `f = -|Du|^gamma Delta_p^N u` computed by applying the
/// discrete operator on a 4x-refined grid and restricting to the coarse nodes.
/// `f` is zero on the coarse bounding-box faces, where the refined stencil has
/// no room; solvers only read `f` at interior nodes.
pub fn manufactured(
    u_analytic: impl Fn(&[f64; 3]) -> f64,
    params: &ProblemParams,
    grid: &GridSpec,
) -> Result<Manufactured> {
    let dim = grid.dim();
    let refine = 4usize;
    let counts: Vec<usize> = (0..dim).map(|a| refine * (grid.counts()[a] - 1) + 1).collect();
    let fine = GridSpec::new(dim, &grid.lo()[..dim], &grid.hi()[..dim], &counts)?;
    let fine_mask = DomainMask::solid_box(fine.clone());
    let u_fine = ScalarField::from_fn(fine.clone(), &u_analytic);
    let applied = apply_gamma_p(&u_fine, params, &fine_mask)?;

    let u = ScalarField::from_fn(grid.clone(), &u_analytic);
    let mut f = ScalarField::zeros(grid.clone());
    for idx in grid.nodes() {
        if grid.on_box_face(idx) {
            continue;
        }
        let m = grid.multi_index(idx);
        let fm = [m[0] * refine, m[1] * refine, m[2] * refine];
        let fine_m = [
            fm[0],
            if dim > 1 { fm[1] } else { 0 },
            if dim > 2 { fm[2] } else { 0 },
        ];
        f.set(idx, applied.get(fine.index(fine_m)));
    }
    let provenance = serde_json::json!({
        "method": "manufactured",
        "derivatives": format!("numeric, {refine}x-refined grid"),
        "gamma": params.gamma,
        "p": params.p,
        "epsilon": params.epsilon,
    });
    Ok(Manufactured { u, f, provenance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::gradient_central;

    #[test]
    fn radial_exponent_values() {
        assert_eq!(radial_exponent(0.0), 2.0);
        assert_eq!(radial_exponent(1.0), 1.5);
        assert_eq!(radial_exponent(-0.5), 3.0);
    }

    #[test]
    fn radial_f_const_spot_values() {
        // gamma=1, p=2, n=2: u = |x|^{3/2}, f = -27/8
        let params = ProblemParams::new(1.0, 2.0, 1e-3, 0.0).unwrap();
        let o = radial_oracle(1.0, &params, 2).unwrap();
        assert_eq!(o.s, 1.5);
        assert!((o.f_const + 27.0 / 8.0).abs() < 1e-13);

        // gamma=0, p=2: u = |x|^2, f = -2n
        for n in [1usize, 2, 3] {
            let params = ProblemParams::new(0.0, 2.0, 0.0, 0.0).unwrap();
            let o = radial_oracle(1.0, &params, n).unwrap();
            assert!((o.f_const + 2.0 * n as f64).abs() < 1e-13, "n={n}");
        }

        // gamma=0, p=3, n=2: bracket 2 + 1*1 = 3, f = -6
        let params = ProblemParams::new(0.0, 3.0, 0.0, 0.0).unwrap();
        let o = radial_oracle(1.0, &params, 2).unwrap();
        assert!((o.f_const + 6.0).abs() < 1e-13);

        // gamma=-0.5, p=2.5, n=2: s=3, (3)^{1/2} * [3 + 0.5*2] = 4 sqrt(3)
        let params = ProblemParams::new(-0.5, 2.5, 1e-4, 0.0).unwrap();
        let o = radial_oracle(1.0, &params, 2).unwrap();
        assert!((o.f_const + 4.0 * 3.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn oracle_residual_refines_at_order_1_5() {
        let params = ProblemParams::new(1.0, 2.5, 1e-9, 0.0).unwrap();
        let o = radial_oracle(1.0, &params, 2).unwrap();
        let mut errs = Vec::new();
        for count in [65usize, 129, 257] {
            let grid = GridSpec::cube(2, -1.0, 1.0, count).unwrap();
            let mask = DomainMask::annulus(grid.clone(), [0.0; 3], 0.25, 0.95);
            let applied = apply_gamma_p(&o.field(&grid), &params, &mask).unwrap();
            let mut e = 0.0f64;
            for node in mask.interior_nodes() {
                e = e.max((applied.get(node) - o.f_const).abs());
            }
            errs.push(e);
        }
        let order = (errs[0] / errs[2]).log2() / 2.0;
        assert!(order >= 1.5, "fitted order {order} (errors {errs:?})");
    }

    #[test]
    fn scaling_closure_preserves_oracle() {
        let params = ProblemParams::new(0.5, 2.2, 1e-6, 0.0).unwrap();
        let o = radial_oracle(1.3, &params, 2).unwrap();
        for r in [0.5, 2.0, 0.125] {
            let o2 = o.rescaled(r).unwrap();
            assert!((o2.c - o.c).abs() < 1e-12 * o.c);
            assert!((o2.f_const - o.f_const).abs() < 1e-12 * o.f_const.abs());
            // sampled identity u_r(y) = r^{-s} u(r y)
            let grid = GridSpec::cube(2, 0.25, 0.75, 9).unwrap();
            for idx in grid.nodes() {
                let y = grid.point(idx);
                let ry = [r * y[0], r * y[1], 0.0];
                let lhs = r.powf(-o.s) * o.u_at(&ry);
                assert!((lhs - o2.u_at(&y)).abs() < 1e-12 * lhs.abs());
            }
        }
    }

    #[test]
    fn gradient_exponent_matches_profile() {
        let params = ProblemParams::new(1.0, 2.0, 1e-6, 0.0).unwrap();
        let o = radial_oracle(1.0, &params, 2).unwrap();
        assert!((o.gradient_exponent() - 0.5).abs() < 1e-14);
        // numeric |Du| along a ray matches c s r^{s-1}
        let grid = GridSpec::cube(2, -1.0, 1.0, 257).unwrap();
        let mask = DomainMask::annulus(grid.clone(), [0.0; 3], 0.2, 0.95);
        let du = gradient_central(&o.field(&grid), &mask).unwrap();
        for frac in [32usize, 64, 96] {
            let node = grid.index([128 + frac, 128, 0]);
            let r = grid.point(node)[0];
            let g = du.get(node);
            let norm = (g[0] * g[0] + g[1] * g[1]).sqrt();
            assert!(
                (norm - o.gradient_norm_at(r)).abs() < 1e-3,
                "r={r}: |Du|={norm} vs {}",
                o.gradient_norm_at(r)
            );
        }
    }

    #[test]
    fn power_profile_classification() {
        let grid = GridSpec::cube(1, -1.0, 1.0, 1025).unwrap();
        let (_, c) = power_profile_1d(1.6, &grid).unwrap();
        match c {
            H2Classification::Finite(v) => assert!((v - 9.216).abs() < 1e-12),
            other => panic!("expected finite, got {other:?}"),
        }
        let (_, c) = power_profile_1d(1.5, &grid).unwrap();
        assert_eq!(c, H2Classification::Divergent);
        let (u, c) = power_profile_1d(2.0, &grid).unwrap();
        assert_eq!(c, H2Classification::Finite(8.0));
        assert_eq!(u.get(grid.index([1024, 0, 0])), 1.0);
        assert!(power_profile_1d(1.0, &grid).is_err());
    }

    #[test]
    fn manufactured_affine_gives_zero_f() {
        let params = ProblemParams::new(0.5, 2.5, 1e-3, 0.0).unwrap();
        let grid = GridSpec::cube(2, 0.0, 1.0, 17).unwrap();
        let m = manufactured(|x| 2.0 * x[0] - x[1] + 0.5, &params, &grid).unwrap();
        assert!(m.f.sup() < 1e-10);
        assert_eq!(m.u.get(grid.index([0, 0, 0])), 0.5);
    }

    #[test]
    fn manufactured_half_norm_sq_p3() {
        let params = ProblemParams::new(0.0, 3.0, 0.0, 0.0).unwrap();
        let grid = GridSpec::cube(2, 0.25, 1.0, 13).unwrap();
        let m = manufactured(|x| 0.5 * (x[0] * x[0] + x[1] * x[1]), &params, &grid).unwrap();
        for idx in grid.nodes() {
            if !grid.on_box_face(idx) {
                assert!((m.f.get(idx) + 3.0).abs() < 1e-9, "f={}", m.f.get(idx));
            }
        }
    }

    #[test]
    fn manufactured_matches_radial_oracle() {
        let params = ProblemParams::new(1.0, 2.0, 1e-9, 0.0).unwrap();
        let o = radial_oracle(1.0, &params, 2).unwrap();
        let grid = GridSpec::cube(2, 0.3, 0.9, 17).unwrap();
        let m = manufactured(|x| o.u_at(x), &params, &grid).unwrap();
        for idx in grid.nodes() {
            if !grid.on_box_face(idx) {
                assert!(
                    (m.f.get(idx) - o.f_const).abs() < 2e-4,
                    "f={} vs {}",
                    m.f.get(idx),
                    o.f_const
                );
            }
        }
    }
}
