//! The gamma-weighted normalized p-Laplace operator, its epsilon
//! regularizations, the frozen-coefficient linear operator, and the Pucci
//! extremal envelopes used by property checks.

use crate::error::{Error, Result};
use crate::field::{DomainMask, ScalarField, SymMat, SymMatrixField};
use serde::{Deserialize, Serialize};

/// Parameters of `-(|Du|^2 + eps^2)^{gamma/2} [Delta u + (p-2) Dinf u] + lambda u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    pub gamma: f64,
    pub p: f64,
    pub epsilon: f64,
    pub lambda: f64,
}

impl ProblemParams {
    pub fn new(gamma: f64, p: f64, epsilon: f64, lambda: f64) -> Result<Self> {
        if !(gamma > -1.0) {
            return Err(Error::InvalidParam(format!("gamma {gamma} must be > -1")));
        }
        if !(p > 1.0) {
            return Err(Error::InvalidParam(format!("p {p} must be > 1")));
        }
        if !(epsilon >= 0.0) {
            return Err(Error::InvalidParam(format!("epsilon {epsilon} must be >= 0")));
        }
        if !(lambda >= 0.0) {
            return Err(Error::InvalidParam(format!("lambda {lambda} must be >= 0")));
        }
        if gamma < 0.0 && epsilon == 0.0 {
            return Err(Error::SingularNeedsEpsilon);
        }
        Ok(Self { gamma, p, epsilon, lambda })
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        Self { epsilon, ..*self }
    }
}

/// Extreme eigenvalues of the coefficient family `A(eta)`:
/// `lambda1 = min(1, p-1)`, `lambda2 = max(1, p-1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipticityPair {
    pub lambda1: f64,
    pub lambda2: f64,
}

impl EllipticityPair {
    pub fn for_p(p: f64) -> Self {
        Self { lambda1: 1.0f64.min(p - 1.0), lambda2: 1.0f64.max(p - 1.0) }
    }
}

/// `A(eta) = I + (p-2) eta (x) eta / (|eta|^2 + eps^2)`.
///
/// The eta-direction eigenvalue is `1 + (p-2) s` with
/// `s = |eta|^2 / (|eta|^2 + eps^2) in [0, 1)` for `eps > 0`.
pub fn coefficient_matrix(eta: &[f64; 3], dim: usize, p: f64, epsilon: f64) -> Result<SymMat> {
    let mut eta2 = 0.0;
    for a in 0..dim {
        eta2 += eta[a] * eta[a];
    }
    let denom = eta2 + epsilon * epsilon;
    if denom == 0.0 {
        return Err(Error::ZeroDirection);
    }
    let mut m = SymMat::identity(dim);
    let c = (p - 2.0) / denom;
    for i in 0..dim {
        for j in i..dim {
            m.add(i, j, c * eta[i] * eta[j]);
        }
    }
    Ok(m)
}

/// Applies the regularized operator
/// `-(|Du|^2 + eps^2)^{gamma/2} [tr D2u + (p-2) (D2u Du . Du)/(|Du|^2 + eps^2)]`
/// at interior nodes, with central-difference derivatives.
///
/// At `eps = 0` the degenerate branch (`gamma > 0`) returns 0 at critical
/// nodes; `gamma < 0` with `eps = 0` is rejected.
pub fn apply_gamma_p(u: &ScalarField, params: &ProblemParams, mask: &DomainMask) -> Result<ScalarField> {
    if params.epsilon == 0.0 && params.gamma < 0.0 {
        return Err(Error::SingularNeedsEpsilon);
    }
    let mut out = ScalarField::zeros(u.grid().clone());
    for idx in mask.interior_nodes() {
        out.set(idx, apply_gamma_p_at(u, params, mask, idx)?);
    }
    Ok(out)
}

pub(crate) fn apply_gamma_p_at(
    u: &ScalarField,
    params: &ProblemParams,
    mask: &DomainMask,
    idx: usize,
) -> Result<f64> {
    let dim = u.grid().dim();
    let g = crate::field::gradient_at_node(u, mask, idx)?;
    let hess = crate::field::hessian_at_node(u, mask, idx)?;
    let mut g2 = 0.0;
    for a in 0..dim {
        g2 += g[a] * g[a];
    }
    let denom = g2 + params.epsilon * params.epsilon;
    if denom == 0.0 {
        // eps = 0 at a critical node
        return Ok(if params.gamma > 0.0 {
            0.0
        } else {
            // gamma = 0: the |Du|^gamma factor is 1 and the normalized
            // infinity-Laplacian term has no direction; take the s -> 0 limit
            -hess.trace()
        });
    }
    let inf_term = hess.quad_form(&g) / denom;
    Ok(-denom.powf(params.gamma / 2.0) * (hess.trace() + (params.p - 2.0) * inf_term))
}

/// `-tr(A D2 v) + lambda v` at interior nodes for a frozen coefficient field.
pub fn frozen_linear_apply(
    v: &ScalarField,
    coeffs: &SymMatrixField,
    lambda: f64,
    mask: &DomainMask,
) -> Result<ScalarField> {
    let dim = v.grid().dim();
    let mut out = ScalarField::zeros(v.grid().clone());
    for idx in mask.interior_nodes() {
        let a = coeffs.get(idx);
        let hess = crate::field::hessian_at_node(v, mask, idx)?;
        let mut tr_ah = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                tr_ah += a.get(i, j) * hess.get(i, j);
            }
        }
        out.set(idx, -tr_ah + lambda * v.get(idx));
    }
    Ok(out)
}

/// Pucci maximal operator `M+(X) = sup_{A} -tr(AX)` over symmetric `A` with
/// eigenvalues in `[lambda1, lambda2]`.
pub fn pucci_plus(x: &SymMat, lambda1: f64, lambda2: f64) -> Result<f64> {
    check_pucci_range(lambda1, lambda2)?;
    Ok(x.eigenvalues()
        .iter()
        .map(|&e| if e >= 0.0 { -lambda1 * e } else { -lambda2 * e })
        .sum())
}

/// Pucci minimal operator `M-(X) = inf_{A} -tr(AX)`.
pub fn pucci_minus(x: &SymMat, lambda1: f64, lambda2: f64) -> Result<f64> {
    check_pucci_range(lambda1, lambda2)?;
    Ok(x.eigenvalues()
        .iter()
        .map(|&e| if e >= 0.0 { -lambda2 * e } else { -lambda1 * e })
        .sum())
}

fn check_pucci_range(lambda1: f64, lambda2: f64) -> Result<()> {
    if !(0.0 < lambda1 && lambda1 <= lambda2) {
        return Err(Error::InvalidParam(format!(
            "Pucci range needs 0 < lambda1 <= lambda2, got ({lambda1}, {lambda2})"
        )));
    }
    Ok(())
}

/// Defect of the regularized equation:
/// `apply_gamma_p(u) + lambda (u - u_ref) - f` at interior nodes.
///
/// With `u_ref = None` the zero-order terms cancel and this is the defect of
/// the lambda-free equation.
pub fn residual(
    u: &ScalarField,
    f: &ScalarField,
    u_ref: Option<&ScalarField>,
    params: &ProblemParams,
    mask: &DomainMask,
) -> Result<ScalarField> {
    let mut out = apply_gamma_p(u, params, mask)?;
    for idx in mask.interior_nodes() {
        let zero_order = match u_ref {
            Some(r) => params.lambda * (u.get(idx) - r.get(idx)),
            None => 0.0,
        };
        let v = out.get(idx) + zero_order - f.get(idx);
        out.set(idx, v);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::GridSpec;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn params_validation() {
        assert!(ProblemParams::new(-1.0, 2.0, 0.1, 0.0).is_err());
        assert!(ProblemParams::new(0.5, 1.0, 0.1, 0.0).is_err());
        assert!(matches!(
            ProblemParams::new(-0.5, 2.5, 0.0, 1.0),
            Err(Error::SingularNeedsEpsilon)
        ));
        assert!(ProblemParams::new(-0.5, 2.5, 1e-4, 1.0).is_ok());
        assert!(ProblemParams::new(1.0, 2.0, 0.0, 0.0).is_ok());
    }

    #[test]
    fn coefficient_matrix_cases() {
        // p = 2: identity for any eta
        let a = coefficient_matrix(&[0.3, -2.0, 0.7], 3, 2.0, 0.5).unwrap();
        assert_eq!(a, SymMat::identity(3));
        // eta = e1, eps = 0, p = 4, n = 3 -> diag(3,1,1)
        let a = coefficient_matrix(&[1.0, 0.0, 0.0], 3, 4.0, 0.0).unwrap();
        assert_eq!(a, SymMat::diag(&[3.0, 1.0, 1.0]));
        // eta = (1,0), eps = 1, p = 4, n = 2 -> diag(2,1) (s = 1/2)
        let a = coefficient_matrix(&[1.0, 0.0, 0.0], 2, 4.0, 1.0).unwrap();
        assert_eq!(a, SymMat::diag(&[2.0, 1.0]));
        // eta = 0, eps = 0: undefined direction
        assert!(matches!(
            coefficient_matrix(&[0.0; 3], 2, 3.0, 0.0),
            Err(Error::ZeroDirection)
        ));
    }

    #[test]
    fn coefficient_eigenvalue_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let p: f64 = rng.gen_range(1.1..6.0);
            let eps: f64 = rng.gen_range(0.01..1.0);
            let eta = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let a = coefficient_matrix(&eta, 3, p, eps).unwrap();
            let ev = a.eigenvalues();
            let lo = 1.0f64.min(p - 1.0) - 1e-12;
            let hi = 1.0f64.max(p - 1.0) + 1e-12;
            assert!(ev[0] >= lo && ev[2] <= hi, "p={p} ev={ev:?}");
        }
    }

    fn random_rotation(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
        let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0f64));
        let qr = m.qr();
        let mut q = qr.q();
        if q.determinant() < 0.0 {
            for i in 0..n {
                q[(i, 0)] = -q[(i, 0)];
            }
        }
        q
    }

    #[test]
    fn coefficient_rotation_equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let p = rng.gen_range(1.2..5.0);
            let eps = rng.gen_range(0.0..0.5);
            let eta = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(0.1..1.0)];
            let r = random_rotation(&mut rng, 3);
            let reta_v = &r * nalgebra::DVector::from_row_slice(&eta);
            let reta = [reta_v[0], reta_v[1], reta_v[2]];
            let lhs = coefficient_matrix(&reta, 3, p, eps).unwrap().to_dmatrix();
            let a = coefficient_matrix(&eta, 3, p, eps).unwrap().to_dmatrix();
            let rhs = &r * a * r.transpose();
            assert!((lhs - rhs).abs().max() < 1e-12);
        }
    }

    #[test]
    fn apply_gamma_p_affine_is_zero() {
        let g = GridSpec::cube(2, 0.0, 1.0, 9).unwrap();
        let mask = DomainMask::solid_box(g.clone());
        let u = ScalarField::from_fn(g, |x| 2.0 * x[0] - 3.0 * x[1] + 0.5);
        let params = ProblemParams::new(0.7, 2.3, 0.1, 0.0).unwrap();
        let out = apply_gamma_p(&u, &params, &mask).unwrap();
        for idx in mask.interior_nodes() {
            assert!(out.get(idx).abs() < 1e-11);
        }
    }

    #[test]
    fn apply_gamma_p_half_norm_sq() {
        // u = |x|^2/2, gamma = 0, eps = 0, n = 2, p = 3 -> -(n + p - 2) = -3
        let g = GridSpec::cube(2, 0.25, 1.0, 7).unwrap();
        let mask = DomainMask::solid_box(g.clone());
        let u = ScalarField::from_fn(g, |x| 0.5 * (x[0] * x[0] + x[1] * x[1]));
        let params = ProblemParams::new(0.0, 3.0, 0.0, 0.0).unwrap();
        let out = apply_gamma_p(&u, &params, &mask).unwrap();
        for idx in mask.interior_nodes() {
            assert!((out.get(idx) + 3.0).abs() < 1e-10, "got {}", out.get(idx));
        }
    }

    #[test]
    fn apply_gamma_p_radial_three_halves() {
        // u = |x|^{3/2}, gamma = 1, p = 2, n = 2: exact value -27/8 away from 0
        let g = GridSpec::cube(2, -1.0, 1.0, 257).unwrap();
        let mask = DomainMask::annulus(g.clone(), [0.0; 3], 0.25, 1.0);
        let u = ScalarField::from_fn(g, |x| (x[0] * x[0] + x[1] * x[1]).sqrt().powf(1.5));
        let params = ProblemParams::new(1.0, 2.0, 0.0, 0.0).unwrap();
        let out = apply_gamma_p(&u, &params, &mask).unwrap();
        let mut emax = 0.0f64;
        for idx in mask.interior_nodes() {
            emax = emax.max((out.get(idx) + 27.0 / 8.0).abs());
        }
        // O(h^2) weighted truncation; h = 1/128 on the annulus
        assert!(emax < 5e-3, "emax = {emax}");
    }

    #[test]
    fn frozen_linear_apply_cases() {
        let g = GridSpec::cube(2, 0.0, 1.0, 9).unwrap();
        let mask = DomainMask::solid_box(g.clone());
        let ident = SymMatrixField::from_fn(g.clone(), |_| SymMat::identity(2));
        let u = ScalarField::from_fn(g.clone(), |x| 0.5 * (x[0] * x[0] + x[1] * x[1]));
        let out = frozen_linear_apply(&u, &ident, 0.0, &mask).unwrap();
        for idx in mask.interior_nodes() {
            assert!((out.get(idx) + 2.0).abs() < 1e-11);
        }
        let a31 = SymMatrixField::from_fn(g.clone(), |_| SymMat::diag(&[3.0, 1.0]));
        let v = ScalarField::from_fn(g.clone(), |x| 0.5 * x[0] * x[0]);
        let out = frozen_linear_apply(&v, &a31, 0.0, &mask).unwrap();
        for idx in mask.interior_nodes() {
            assert!((out.get(idx) + 3.0).abs() < 1e-11);
        }
        let two = ScalarField::constant(g, 2.0);
        let out = frozen_linear_apply(&two, &a31, 5.0, &mask).unwrap();
        for idx in mask.interior_nodes() {
            assert!((out.get(idx) - 10.0).abs() < 1e-10);
        }
    }

    #[test]
    fn pucci_spot_values() {
        let (l1, l2) = (1.0, 2.0);
        let x = SymMat::identity(2);
        assert_eq!(pucci_plus(&x, l1, l2).unwrap(), -2.0);
        assert_eq!(pucci_minus(&x, l1, l2).unwrap(), -4.0);
        let z = SymMat::zeros(2);
        assert_eq!(pucci_plus(&z, l1, l2).unwrap(), 0.0);
        assert_eq!(pucci_minus(&z, l1, l2).unwrap(), 0.0);
        let x = SymMat::diag(&[1.0, -1.0]);
        assert_eq!(pucci_plus(&x, l1, l2).unwrap(), 1.0);
        assert_eq!(pucci_minus(&x, l1, l2).unwrap(), -1.0);
        assert!(pucci_plus(&x, 0.0, 1.0).is_err());
    }

    /// Pucci sandwich: M-(X) <= -tr(AX) <= M+(X) for every admissible A.
    #[test]
    fn pucci_sandwich_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..10_000 {
            let n = rng.gen_range(2..=3usize);
            let l1 = rng.gen_range(0.1..1.0);
            let l2 = l1 + rng.gen_range(0.0..2.0);
            // random symmetric X
            let mut x = SymMat::zeros(n);
            for i in 0..n {
                for j in i..n {
                    x.set(i, j, rng.gen_range(-2.0..2.0));
                }
            }
            // random admissible A = R diag(ev) R^T
            let r = random_rotation(&mut rng, n);
            let d = DMatrix::from_fn(n, n, |i, j| {
                if i == j {
                    rng.gen_range(l1..=l2)
                } else {
                    0.0
                }
            });
            let a = &r * d * r.transpose();
            let tr_ax = -(a * x.to_dmatrix()).trace();
            let plus = pucci_plus(&x, l1, l2).unwrap();
            let minus = pucci_minus(&x, l1, l2).unwrap();
            assert!(
                minus - 1e-10 <= tr_ax && tr_ax <= plus + 1e-10,
                "violation: {minus} <= {tr_ax} <= {plus}"
            );
        }
    }

    #[test]
    fn residual_locality() {
        let g = GridSpec::cube(2, 0.0, 1.0, 17).unwrap();
        let mask = DomainMask::solid_box(g.clone());
        let u = ScalarField::from_fn(g.clone(), |x| x[0] * x[0] + 0.3 * x[1]);
        let f = ScalarField::zeros(g.clone());
        let params = ProblemParams::new(0.5, 2.5, 0.1, 0.0).unwrap();
        let base = residual(&u, &f, None, &params, &mask).unwrap();
        let mut pert = u.clone();
        let node = g.index([8, 8, 0]);
        pert.set(node, pert.get(node) + 0.1);
        let after = residual(&pert, &f, None, &params, &mask).unwrap();
        let m = g.multi_index(node);
        for idx in mask.interior_nodes() {
            let mi = g.multi_index(idx);
            let far = (0..2).any(|a| (mi[a] as i64 - m[a] as i64).abs() > 1);
            if far {
                assert_eq!(base.get(idx), after.get(idx), "residual changed outside stencil");
            }
        }
    }
}
