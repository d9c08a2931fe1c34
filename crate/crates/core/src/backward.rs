//! Residual-based error bounds for approximate solutions when `0 < p < 1`.
//!
//! The bounds only need a handful of scalars of the approximation `X̃`, so
//! they are computed from [`ResidualScalars`]. Those can come from a
//! Hermitian approximation or, through [`ResidualScalars::from_general`],
//! from the iterates of a problem whose data is not exactly Hermitian.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::funm::{general_power, min_real_eigenvalue};
use crate::linalg::{cr, spectral_norm, ComplexMatrix, HermitianMatrix, HpdMatrix};
use crate::solver::{residual, EquationSpec};

/// Scalars of an approximate solution `X̃` that the bounds depend on.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ResidualScalars {
    pub p: f64,
    /// `||R(X̃)||`
    pub residual_norm: f64,
    /// `λ_min(X̃)`
    pub lambda_min: f64,
    /// `||X̃||`
    pub x_norm: f64,
    /// `||X̃^{-1}||`
    pub x_inv_norm: f64,
    /// `||X̃^{-p/2} A||^2 ||X̃^{-1}||`
    pub coupling: f64,
    /// `||X̃^{-p/2} A X̃^{-1/2}||^2`
    pub symmetric_coupling: f64,
}

impl ResidualScalars {
    pub fn from_hpd(xt: &HpdMatrix, spec: &EquationSpec) -> Result<Self> {
        let p = spec.p();
        let r = residual(xt, spec)?;
        let half = xt.pow(-p / 2.0);
        let h = half.as_matrix() * spec.a();
        let g = &h * xt.pow(-0.5).as_matrix();
        Ok(Self {
            p,
            residual_norm: r.spectral_norm(),
            lambda_min: xt.lambda_min(),
            x_norm: xt.norm(),
            x_inv_norm: xt.inverse_norm(),
            coupling: spectral_norm(&h).powi(2) * xt.inverse_norm(),
            symmetric_coupling: spectral_norm(&g).powi(2),
        })
    }

    /// Same scalars for a general square `X̃` with `R = Q + A^* X̃^{-p} A - X̃`.
    /// Powers are principal powers, norms are spectral and `λ_min` is the
    /// smallest real part of the eigenvalues.
    pub fn from_general(
        xt: &ComplexMatrix,
        a: &ComplexMatrix,
        q: &ComplexMatrix,
        p: f64,
    ) -> Result<Self> {
        let r = q + a.adjoint() * general_power(xt, -p)? * a - xt;
        let inv = general_power(xt, -1.0)?;
        let h = general_power(xt, -p / 2.0)? * a;
        let g = &h * general_power(xt, -0.5)?;
        let x_inv_norm = spectral_norm(&inv);
        Ok(Self {
            p,
            residual_norm: spectral_norm(&r),
            lambda_min: min_real_eigenvalue(xt)?,
            x_norm: spectral_norm(xt),
            x_inv_norm,
            coupling: spectral_norm(&h).powi(2) * x_inv_norm,
            symmetric_coupling: spectral_norm(&g).powi(2),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BackwardErrorReport {
    pub residual_norm: f64,
    pub theta1: f64,
    pub theta: f64,
    /// `θ ||R||`; `+∞` when `θ` is not real.
    pub bound: f64,
    /// `ν* ||R||`; `+∞` when `ν*` is not defined.
    pub legacy_nu_bound: f64,
    pub applicable: bool,
    pub legacy_applicable: bool,
}

/// `θ_1 = (1 - c) λ_min + ||R||` and `θ = 2λ_min / (θ_1 + sqrt(θ_1² - 4λ_min||R||))`
/// with `c = ||X̃^{-p/2}A||² ||X̃^{-1}||`. Applicable when `c < 1`, `θ_1 > 0`
/// and `||R|| <= (θ_1/2) min(1, θ_1/(2λ_min))`.
pub fn theta_bound(s: &ResidualScalars) -> (f64, f64, bool) {
    let (r, lmin) = (s.residual_norm, s.lambda_min);
    let theta1 = (1.0 - s.coupling) * lmin + r;
    let disc = theta1 * theta1 - 4.0 * lmin * r;
    let theta = if theta1 > 0.0 && disc >= 0.0 {
        2.0 * lmin / (theta1 + disc.sqrt())
    } else {
        f64::INFINITY
    };
    let applicable = s.coupling < 1.0
        && theta1 > 0.0
        && r <= 0.5 * theta1 * (theta1 / (2.0 * lmin)).min(1.0);
    (theta1, theta, applicable)
}

/// `ν* = 2||X̃|| ||X̃^{-1}|| / (1 - p ||X̃^{-p/2} A X̃^{-1/2}||²)`, or `None`
/// when the denominator is not positive.
pub fn nu_star(s: &ResidualScalars) -> Option<f64> {
    let denom = 1.0 - s.p * s.symmetric_coupling;
    (denom > 0.0).then(|| 2.0 * s.x_norm * s.x_inv_norm / denom)
}

pub fn backward_error_from_scalars(s: &ResidualScalars) -> BackwardErrorReport {
    let (theta1, theta, applicable) = theta_bound(s);
    let nu = nu_star(s);
    let bound = if s.residual_norm == 0.0 && theta.is_finite() {
        0.0
    } else {
        theta * s.residual_norm
    };
    BackwardErrorReport {
        residual_norm: s.residual_norm,
        theta1,
        theta,
        bound,
        legacy_nu_bound: nu.map_or(f64::INFINITY, |v| v * s.residual_norm),
        applicable,
        legacy_applicable: nu.is_some(),
    }
}

/// Bound on `||X̃ - X||` from the residual of `X̃`.
pub fn backward_error_theta(xt: &HpdMatrix, spec: &EquationSpec) -> Result<BackwardErrorReport> {
    spec.require_regime_below_one("backward error bound")?;
    Ok(backward_error_from_scalars(&ResidualScalars::from_hpd(xt, spec)?))
}

/// `ν*` for a Hermitian approximation.
pub fn legacy_nu_star(xt: &HpdMatrix, spec: &EquationSpec) -> Result<Option<f64>> {
    spec.require_regime_below_one("backward error bound")?;
    Ok(nu_star(&ResidualScalars::from_hpd(xt, spec)?))
}

/// Both sides of
/// `||A^*((X+ΔX)^{-p} - X^{-p})A|| <= p(||ΔX|| + ν||ΔX||²) ||X^{-p/2}A||² ||X^{-1}||`,
/// which requires `X + ΔX >= (1/ν) I`.
pub fn power_difference_bound_check(
    x: &HpdMatrix,
    dx: &HermitianMatrix,
    a: &ComplexMatrix,
    p: f64,
    nu: f64,
) -> Result<(f64, f64)> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Regime(format!("requires 0 < p < 1, got p = {p}")));
    }
    let shifted = HpdMatrix::new(x.as_hermitian() + dx)
        .map_err(|_| Error::Domain("X + ΔX is not positive definite".into()))?;
    if !(nu > 0.0) || shifted.lambda_min() < (1.0 / nu) * (1.0 - 1e-12) {
        return Err(Error::Domain("X + ΔX >= (1/ν) I does not hold".into()));
    }
    let diff = shifted.pow(-p).as_matrix() - x.pow(-p).as_matrix();
    let lhs = spectral_norm(&(a.adjoint() * diff * a));
    let d = dx.spectral_norm();
    let h = spectral_norm(&(x.pow(-p / 2.0).as_matrix() * a));
    let rhs = p * (d + nu * d * d) * h * h * x.inverse_norm();
    Ok((lhs, rhs))
}

/// `X̃ + t I`, used to build approximations at a known distance.
pub fn shifted(x: &HpdMatrix, t: f64) -> Result<HpdMatrix> {
    let n = x.n();
    HpdMatrix::new(HermitianMatrix::symmetrize_unchecked(
        x.as_matrix() + ComplexMatrix::identity(n, n) * cr(t),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::testing::*;
    use crate::linalg::{to_complex, RealMatrix};
    use crate::solver::{solve, SolveOptions};
    use approx::assert_relative_eq;

    fn scalar_spec(a: f64, q: f64, p: f64) -> EquationSpec {
        EquationSpec::new(
            to_complex(&RealMatrix::from_element(1, 1, a)),
            HpdMatrix::scaled_identity(1, q),
            p,
        )
        .unwrap()
    }

    #[test]
    fn exact_solution_has_zero_bound() {
        let spec = EquationSpec::new(ComplexMatrix::zeros(2, 2), HpdMatrix::scaled_identity(2, 2.0), 0.5)
            .unwrap();
        let rep = backward_error_theta(spec.q(), &spec).unwrap();
        assert_eq!(rep.bound, 0.0);
        assert!(rep.applicable);
        let nu = legacy_nu_star(spec.q(), &spec).unwrap().unwrap();
        assert_relative_eq!(nu, 2.0, epsilon = 1e-14);
    }

    #[test]
    fn scalar_bound_certifies() {
        let spec = scalar_spec(0.3, 1.0, 0.5);
        let x = solve(&spec, SolveOptions::with_tol(1e-15)).unwrap().x;
        for t in [1e-5, -1e-5] {
            let xt = shifted(&x, t).unwrap();
            let rep = backward_error_theta(&xt, &spec).unwrap();
            assert!(rep.applicable);
            assert!(rep.bound >= t.abs() * (1.0 - 1e-9), "{} < {t}", rep.bound);
            assert!(rep.bound <= rep.legacy_nu_bound);
        }
    }

    #[test]
    fn general_scalars_match_hermitian_ones() {
        let mut r = rng(14);
        let q = random_hpd(3, 1.0, 2.0, &mut r);
        let a = random_complex(3, &mut r) * cr(0.3);
        let spec = EquationSpec::new(a.clone(), q.clone(), 0.6).unwrap();
        let xt = q.scale(1.2);
        let h = ResidualScalars::from_hpd(&xt, &spec).unwrap();
        let g = ResidualScalars::from_general(xt.as_matrix(), &a, q.as_matrix(), 0.6).unwrap();
        for (u, v) in [
            (h.residual_norm, g.residual_norm),
            (h.lambda_min, g.lambda_min),
            (h.x_norm, g.x_norm),
            (h.x_inv_norm, g.x_inv_norm),
            (h.coupling, g.coupling),
            (h.symmetric_coupling, g.symmetric_coupling),
        ] {
            assert_relative_eq!(u, v, max_relative = 1e-10);
        }
    }

    #[test]
    fn not_applicable_far_from_solution() {
        let spec = scalar_spec(0.3, 1.0, 0.5);
        let far = HpdMatrix::scaled_identity(1, 50.0);
        let rep = backward_error_theta(&far, &spec).unwrap();
        assert!(!rep.applicable);
    }

    #[test]
    fn power_difference_bound_examples() {
        let x = HpdMatrix::scaled_identity(1, 2.0);
        let a = ComplexMatrix::identity(1, 1);
        let zero = HermitianMatrix::zeros(1);
        assert_eq!(power_difference_bound_check(&x, &zero, &a, 0.5, 0.5).unwrap(), (0.0, 0.0));
        let dx = HermitianMatrix::from_real(&RealMatrix::from_element(1, 1, 0.1)).unwrap();
        let (lhs, rhs) = power_difference_bound_check(&x, &dx, &a, 0.5, 1.0 / 2.1).unwrap();
        assert_relative_eq!(lhs, (2.0f64.powf(-0.5) - 2.1f64.powf(-0.5)).abs(), max_relative = 1e-12);
        assert!(lhs <= rhs);
        assert!(power_difference_bound_check(&x, &dx, &a, 0.5, 0.1).is_err());
        assert!(matches!(
            power_difference_bound_check(&x, &dx, &a, 1.5, 1.0),
            Err(Error::Regime(_))
        ));
    }

    #[test]
    fn regime_is_enforced() {
        let spec = scalar_spec(0.3, 1.0, 2.0);
        assert!(matches!(
            backward_error_theta(spec.q(), &spec),
            Err(Error::Regime(_))
        ));
    }
}
