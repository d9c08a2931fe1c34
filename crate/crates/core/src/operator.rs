//! Dense `n^2 x n^2` representations of the linearized operator
//! `W -> W + A^* (D X^{-p})[-W] A`, the derived map
//! `Z -> L^{-1}(B^* Z + Z^* B)` with `B = X^{-p} A`, and their norms.
//!
//! Two integral forms of the same operator appear in the analysis: an
//! exponential double integral (used for `p > 1`) and a resolvent integral
//! (used for `0 < p < 1`). After diagonalizing `X` both reduce to the
//! divided-difference kernel of `t^{-p}`, which is what [`build_operator`]
//! uses. [`quadrature_oracle`] evaluates the integrals directly.

use nalgebra::DVector;
use serde::Serialize;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::induced_norm::{AscentOptions, CoordinateMap, Domain, InducedNorms};
use crate::linalg::{
    cr, kron, loewner_matrix, spectral_norm, vec, Complex64, ComplexMatrix, HpdMatrix,
};
use crate::quadrature::{GaussLegendre, HalfLineRule};

/// Which integral form the operator was derived from. The closed form is
/// the same for both.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OperatorKind {
    /// `I + (1/Γ(p)) ∫∫ (e^{-tsX}A)^T ⊗ (A^* e^{-(1-t)sX}) s^p dt ds`.
    ExponentialIntegral,
    /// `I + (sin pπ / π) ∫ ((λ+X)^{-1}A)^T ⊗ ((λ+X)^{-1}A)^* λ^{-p} dλ`.
    Resolvent,
}

/// Operators whose smallest singular value falls below this multiple of the
/// largest are treated as singular.
pub const SINGULAR_RTOL: f64 = 1e-13;

#[derive(Clone, Debug)]
pub struct OperatorAssembly {
    n: usize,
    kind: OperatorKind,
    p: f64,
    matrix: ComplexMatrix,
    b: ComplexMatrix,
}

/// Assembles `vec(W) -> vec(W + A^* U (Φ ∘ (U^* W U)) U^* A)` where
/// `X = U diag(λ) U^*` and `Φ_ij` is the divided difference of `t^{-p}` at
/// `λ_i, λ_j`.
///
/// In Kronecker form this is `I + (A^T ⊗ A^*)(conj(U) ⊗ U) diag(vec Φ) (U^T ⊗ U^*)`.
pub fn build_operator(
    x: &HpdMatrix,
    a: &ComplexMatrix,
    p: f64,
    kind: OperatorKind,
) -> Result<OperatorAssembly> {
    let n = x.n();
    if a.nrows() != n || a.ncols() != n {
        return Err(Error::Dimension(format!(
            "A is {}x{} but X is {n}x{n}",
            a.nrows(),
            a.ncols()
        )));
    }
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::Domain(format!("exponent p must be positive, got {p}")));
    }
    let u = x.eigenvectors();
    let phi = loewner_matrix(x.eigenvalues(), p);
    let phi_vec = DVector::from_iterator(n * n, phi.iter().map(|&v| cr(v)));
    let to_eigen = kron(&u.transpose(), &u.adjoint());
    let from_eigen = kron(&u.conjugate(), u);
    let outer = kron(&a.transpose(), &a.adjoint());
    let scaled = ComplexMatrix::from_diagonal(&phi_vec) * to_eigen;
    let matrix = ComplexMatrix::identity(n * n, n * n) + outer * from_eigen * scaled;
    let b = x.pow(-p).as_matrix() * a;
    Ok(OperatorAssembly {
        n,
        kind,
        p,
        matrix,
        b,
    })
}

impl OperatorAssembly {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// The `n^2 x n^2` matrix acting on `vec W`.
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// `B = X^{-p} A`.
    pub fn b(&self) -> &ComplexMatrix {
        &self.b
    }

    /// Applies the operator to a matrix.
    pub fn apply(&self, w: &ComplexMatrix) -> Result<ComplexMatrix> {
        let v = &self.matrix * vec(w);
        crate::linalg::unvec(&v, self.n)
    }

    /// Inverse of the representation, refusing numerically singular ones.
    pub fn inverse(&self) -> Result<ComplexMatrix> {
        let sv = self.matrix.singular_values();
        let (smin, smax) = (sv.min(), sv.max());
        if !(smin > SINGULAR_RTOL * smax.max(1.0)) {
            return Err(Error::SingularOperator(smin));
        }
        self.matrix
            .clone()
            .try_inverse()
            .ok_or(Error::SingularOperator(smin))
    }

    /// The inverse restricted to Hermitian matrices, in coordinates.
    pub fn inverse_map(&self) -> Result<CoordinateMap> {
        let inv = self.inverse()?;
        let n = self.n;
        CoordinateMap::from_fn(n, Domain::Hermitian, |w| apply_vec(&inv, w, n))
    }

    /// `Z -> L^{-1}(B^* Z + Z^* B)` on all complex matrices, in coordinates.
    pub fn p_map(&self) -> Result<CoordinateMap> {
        let inv = self.inverse()?;
        let n = self.n;
        let bh = self.b.adjoint();
        CoordinateMap::from_fn(n, Domain::Complex, |z| {
            let s = &bh * z;
            let s = &s + s.adjoint();
            apply_vec(&inv, &s, n)
        })
    }
}

fn apply_vec(m: &ComplexMatrix, w: &ComplexMatrix, n: usize) -> ComplexMatrix {
    let v = m * vec(w);
    ComplexMatrix::from_column_slice(n, n, v.as_slice())
}

/// `l = 1 / ||L^{-1}||` with the norm taken over Hermitian arguments, in both
/// conventions.
pub fn inv_operator_norm(assembly: &OperatorAssembly, opts: &AscentOptions) -> Result<InducedNorms> {
    let norms = assembly.inverse_map()?.norms(opts)?;
    Ok(InducedNorms {
        spectral: 1.0 / norms.spectral,
        frobenius: 1.0 / norms.frobenius,
    })
}

/// `||Z -> L^{-1}(B^* Z + Z^* B)||` in both conventions.
pub fn op_p_norm(assembly: &OperatorAssembly, opts: &AscentOptions) -> Result<InducedNorms> {
    if assembly.b.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
        return Ok(InducedNorms {
            spectral: 0.0,
            frobenius: 0.0,
        });
    }
    assembly.p_map()?.norms(opts)
}

/// `||K||` for the perturbation part `K = V - I`, induced by the spectral
/// norm on Hermitian matrices.
pub fn perturbation_part_norm(assembly: &OperatorAssembly, opts: &AscentOptions) -> Result<f64> {
    let k = &assembly.matrix - ComplexMatrix::identity(assembly.n * assembly.n, assembly.n * assembly.n);
    let n = assembly.n;
    CoordinateMap::from_fn(n, Domain::Hermitian, |w| apply_vec(&k, w, n))?.spectral_induced(opts)
}

/// Direct numerical evaluation of the integral form of the operator.
///
/// Fixed rules: 64 Gauss-Legendre nodes in `t` times 256 half-line nodes in
/// `s` for the exponential form, 512 half-line nodes for the resolvent form.
/// Meant for small `n` as a check on [`build_operator`].
pub fn quadrature_oracle(
    x: &HpdMatrix,
    a: &ComplexMatrix,
    p: f64,
    kind: OperatorKind,
) -> Result<ComplexMatrix> {
    let n = x.n();
    if a.nrows() != n || a.ncols() != n {
        return Err(Error::Dimension(format!("A must be {n}x{n}")));
    }
    if !(p > 0.0) {
        return Err(Error::Domain(format!("exponent p must be positive, got {p}")));
    }
    let eig = x.eigen();
    let ah = a.adjoint();
    let mut acc = ComplexMatrix::zeros(n * n, n * n);
    match kind {
        OperatorKind::ExponentialIntegral => {
            let t_rule = GaussLegendre::new(64);
            let s_rule = HalfLineRule::new(256, 1.0 / x.lambda_min(), p + 1.0);
            let c = 1.0 / gamma(p);
            for (s, ws) in s_rule.nodes() {
                for (t, wt) in t_rule.nodes() {
                    let left = eig.map(|l| (-t * s * l).exp()) * a;
                    let right = &ah * eig.map(|l| (-(1.0 - t) * s * l).exp());
                    acc += kron(&left.transpose(), &right) * cr(c * ws * wt);
                }
            }
        }
        OperatorKind::Resolvent => {
            if !(p < 1.0) {
                return Err(Error::Regime(format!(
                    "resolvent integral converges only for 0 < p < 1, got p = {p}"
                )));
            }
            let rule = HalfLineRule::new(512, x.lambda_min(), 1.0 - p);
            let c = (p * std::f64::consts::PI).sin() / std::f64::consts::PI;
            for (lam, w) in rule.nodes() {
                let m = eig.map(|l| 1.0 / (lam + l)) * a;
                acc += kron(&m.transpose(), &m.adjoint()) * cr(c * w);
            }
        }
    }
    Ok(ComplexMatrix::identity(n * n, n * n) + acc)
}

/// Largest entrywise deviation `|a - b| / max(|b|, floor)`.
pub fn max_relative_deviation(a: &ComplexMatrix, b: &ComplexMatrix, floor: f64) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm() / y.norm().max(floor))
        .fold(0.0, f64::max)
}

/// `p ||A||^2 / λ_min^{p+1}`, the contraction factor bounding `||K||`.
pub fn contraction_factor(a: &ComplexMatrix, lambda_min: f64, p: f64) -> f64 {
    p * spectral_norm(a).powi(2) / lambda_min.powf(p + 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::testing::*;
    use crate::linalg::{neg_power_derivative, to_complex, HermitianMatrix, RealMatrix};
    use approx::assert_relative_eq;

    fn scalar(x: f64, a: f64) -> (HpdMatrix, ComplexMatrix) {
        (
            HpdMatrix::scaled_identity(1, x),
            to_complex(&RealMatrix::from_element(1, 1, a)),
        )
    }

    #[test]
    fn zero_coefficient_gives_identity() {
        let mut r = rng(1);
        let x = random_hpd(3, 1.0, 2.0, &mut r);
        let op = build_operator(&x, &ComplexMatrix::zeros(3, 3), 2.0, OperatorKind::ExponentialIntegral)
            .unwrap();
        assert!((op.matrix() - ComplexMatrix::identity(9, 9)).norm() == 0.0);
        let l = inv_operator_norm(&op, &AscentOptions::default()).unwrap();
        assert_relative_eq!(l.spectral, 1.0, epsilon = 1e-14);
        assert_relative_eq!(l.frobenius, 1.0, epsilon = 1e-14);
        assert_eq!(op_p_norm(&op, &AscentOptions::default()).unwrap().spectral, 0.0);
        let q = quadrature_oracle(&x, &ComplexMatrix::zeros(3, 3), 2.0, OperatorKind::ExponentialIntegral)
            .unwrap();
        assert!((q - ComplexMatrix::identity(9, 9)).norm() == 0.0);
    }

    #[test]
    fn scalar_operator_and_norms() {
        let (x, a, p) = (1.7, 0.6, 0.4);
        let (xm, am) = scalar(x, a);
        let op = build_operator(&xm, &am, p, OperatorKind::Resolvent).unwrap();
        let expected = 1.0 + a * a * p * x.powf(-p - 1.0);
        assert_relative_eq!(op.matrix()[(0, 0)].re, expected, epsilon = 1e-14);
        let l = inv_operator_norm(&op, &AscentOptions::default()).unwrap();
        assert_relative_eq!(l.spectral, expected, max_relative = 1e-14);
        assert_relative_eq!(l.frobenius, expected, max_relative = 1e-14);
        let b = x.powf(-p) * a;
        let pn = op_p_norm(&op, &AscentOptions::default()).unwrap();
        assert_relative_eq!(pn.spectral, 2.0 * b / expected, max_relative = 1e-12);
        assert_relative_eq!(pn.frobenius, 2.0 * b / expected, max_relative = 1e-12);
        for kind in [OperatorKind::Resolvent, OperatorKind::ExponentialIntegral] {
            let q = quadrature_oracle(&xm, &am, p, kind).unwrap();
            assert_relative_eq!(q[(0, 0)].re, expected, max_relative = 1e-10);
        }
    }

    #[test]
    fn diagonal_resolvent_example() {
        let x = HpdMatrix::from_real(&RealMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0])))
            .unwrap();
        let a = ComplexMatrix::identity(2, 2);
        let op = build_operator(&x, &a, 0.5, OperatorKind::Resolvent).unwrap();
        // vec index of (0,1) is 2, of (1,0) is 1
        assert_relative_eq!(op.matrix()[(2, 2)].re, 1.0 + 1.0 / 6.0, epsilon = 1e-14);
        assert_relative_eq!(op.matrix()[(1, 1)].re, 1.0 + 1.0 / 6.0, epsilon = 1e-14);
        let q = quadrature_oracle(&x, &a, 0.5, OperatorKind::Resolvent).unwrap();
        assert_relative_eq!(q[(2, 2)].re, 1.0 + 1.0 / 6.0, max_relative = 1e-10);
    }

    #[test]
    fn closed_form_matches_quadrature() {
        let mut r = rng(77);
        for (n, p, kind) in [
            (2, 0.6, OperatorKind::Resolvent),
            (3, 2.5, OperatorKind::ExponentialIntegral),
        ] {
            let x = random_hpd(n, 0.8, 2.5, &mut r);
            let a = random_complex(n, &mut r);
            let op = build_operator(&x, &a, p, kind).unwrap();
            let q = quadrature_oracle(&x, &a, p, kind).unwrap();
            let floor = 1e-6 * op.matrix().iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(max_relative_deviation(&q, op.matrix(), floor) <= 1e-8);
        }
    }

    #[test]
    fn matches_frechet_derivative_and_preserves_hermitian() {
        let mut r = rng(12);
        let x = random_hpd(3, 0.5, 2.0, &mut r);
        let a = random_complex(3, &mut r);
        let op = build_operator(&x, &a, 1.3, OperatorKind::ExponentialIntegral).unwrap();
        let w = random_hermitian(3, &mut r);
        let got = op.apply(w.as_matrix()).unwrap();
        let d = neg_power_derivative(&x, &w, 1.3);
        let want = w.as_matrix() - a.adjoint() * d.as_matrix() * &a;
        assert!((&got - &want).norm() <= 1e-12 * want.norm());
        assert!((&got - got.adjoint()).norm() <= 1e-10);
    }

    #[test]
    fn perturbation_part_is_positive_and_contractive() {
        let mut r = rng(4);
        let q = random_hpd(3, 1.5, 2.5, &mut r);
        let mut a = random_complex(3, &mut r);
        a *= cr(0.5 / spectral_norm(&a));
        let spec = crate::solver::EquationSpec::new(a.clone(), q.clone(), 2.0).unwrap();
        let x = crate::solver::solve(&spec, crate::solver::SolveOptions::with_tol(1e-13))
            .unwrap()
            .x;
        let op = build_operator(&x, &a, 2.0, OperatorKind::ExponentialIntegral).unwrap();
        let c = random_complex(3, &mut r);
        let psd = HermitianMatrix::symmetrize(&c * c.adjoint()).unwrap();
        let k = op.apply(psd.as_matrix()).unwrap() - psd.as_matrix();
        let kn = HermitianMatrix::symmetrize(k).unwrap().norms().unwrap();
        assert!(kn.lambda_min >= -1e-10 * psd.spectral_norm());
        let norm_k = perturbation_part_norm(&op, &AscentOptions::default()).unwrap();
        assert!(norm_k <= contraction_factor(&a, q.lambda_min(), 2.0) + 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        let x = HpdMatrix::identity(2);
        assert!(build_operator(&x, &ComplexMatrix::zeros(3, 3), 1.0, OperatorKind::Resolvent).is_err());
        assert!(build_operator(&x, &ComplexMatrix::zeros(2, 2), -1.0, OperatorKind::Resolvent).is_err());
        assert!(matches!(
            quadrature_oracle(&x, &ComplexMatrix::zeros(2, 2), 1.5, OperatorKind::Resolvent),
            Err(Error::Regime(_))
        ));
    }
}
