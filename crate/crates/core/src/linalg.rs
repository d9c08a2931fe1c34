//! Dense complex matrix primitives.
//!
//! Everything downstream is expressed through three matrix types:
//! [`ComplexMatrix`] for general square data, [`HermitianMatrix`] for
//! self-adjoint data, and [`HpdMatrix`] for positive definite operands,
//! which carries its eigendecomposition so spectral functions are cheap.
//!
//! `vec` stacks columns, so `vec(A X B) = (B^T ⊗ A) vec(X)`.

use std::ops::{Add, Mul, Sub};

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub type Complex64 = Complex<f64>;
pub type ComplexMatrix = DMatrix<Complex64>;
pub type RealMatrix = DMatrix<f64>;

/// Relative asymmetry accepted by [`HermitianMatrix::new`] before rejecting input.
pub const HERMITIAN_INPUT_TOL: f64 = 1e-10;

/// Relative gap below which two eigenvalues are treated as equal by the
/// divided-difference kernel.
pub const CONFLUENT_RTOL: f64 = 1e-8;

const EIGEN_MAX_SWEEPS: usize = 10_000;

#[inline]
pub(crate) fn cr(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Rejects non-square or non-finite input.
pub fn check_square_finite(m: &ComplexMatrix, what: &str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension(format!(
            "{what} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.nrows() == 0 {
        return Err(Error::Dimension(format!("{what} is empty")));
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(())
}

pub fn to_complex(m: &RealMatrix) -> ComplexMatrix {
    m.map(cr)
}

pub fn real_part(m: &ComplexMatrix) -> RealMatrix {
    m.map(|z| z.re)
}

pub fn imag_part(m: &ComplexMatrix) -> RealMatrix {
    m.map(|z| z.im)
}

/// True when every imaginary part is exactly zero.
pub fn is_real(m: &ComplexMatrix) -> bool {
    m.iter().all(|z| z.im == 0.0)
}

/// Largest singular value.
pub fn spectral_norm(m: &ComplexMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().max()
}

pub fn spectral_norm_real(m: &RealMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().max()
}

pub fn frobenius_norm(m: &ComplexMatrix) -> f64 {
    m.norm()
}

/// Column-stacking vectorization.
pub fn vec(m: &ComplexMatrix) -> DVector<Complex64> {
    DVector::from_column_slice(m.as_slice())
}

/// Inverse of [`vec`] for an `n x n` result.
pub fn unvec(v: &DVector<Complex64>, n: usize) -> Result<ComplexMatrix> {
    if v.len() != n * n {
        return Err(Error::Dimension(format!(
            "cannot reshape vector of length {} into {n}x{n}",
            v.len()
        )));
    }
    Ok(ComplexMatrix::from_column_slice(n, n, v.as_slice()))
}

/// Kronecker product `(a_ij B)`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// Applies `X -> A X B` through its Kronecker representation `(B^T ⊗ A) vec X`.
pub fn sandwich_vec(
    a: &ComplexMatrix,
    x: &ComplexMatrix,
    b: &ComplexMatrix,
) -> Result<DVector<Complex64>> {
    if a.ncols() != x.nrows() || x.ncols() != b.nrows() {
        return Err(Error::Dimension(format!(
            "cannot form A X B with A {}x{}, X {}x{}, B {}x{}",
            a.nrows(),
            a.ncols(),
            x.nrows(),
            x.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    Ok(kron(&b.transpose(), a) * vec(x))
}

/// The permutation `Π` with `Π vec(E) = vec(E^T)` for `n x n` matrices.
pub fn vec_permutation(n: usize) -> RealMatrix {
    let mut pi = RealMatrix::zeros(n * n, n * n);
    for i in 0..n {
        for j in 0..n {
            // vec(E)[i + j n] = E[i, j] = vec(E^T)[j + i n]
            pi[(j + i * n, i + j * n)] = 1.0;
        }
    }
    pi
}

/// Eigendecomposition of a Hermitian matrix with ascending eigenvalues.
#[derive(Clone, Debug, PartialEq)]
pub struct Eigh {
    pub values: DVector<f64>,
    pub vectors: ComplexMatrix,
}

impl Eigh {
    /// `U diag(f(λ)) U*`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let scaled = self.vectors.clone() * DMatrix::from_diagonal(&self.values.map(|l| cr(f(l))));
        scaled * self.vectors.adjoint()
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.map(|l| l)
    }
}

/// Hermitian eigendecomposition, eigenvalues sorted ascending.
pub fn eigh(m: &HermitianMatrix) -> Result<Eigh> {
    let n = m.n();
    let eig = SymmetricEigen::try_new(m.0.clone(), f64::EPSILON, EIGEN_MAX_SWEEPS)
        .ok_or(Error::EigenNoConvergence)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(Eigh { values, vectors })
}

/// Self-adjoint matrix. Stored exactly Hermitian.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix(ComplexMatrix);

impl HermitianMatrix {
    /// Accepts `m` if it is Hermitian to within [`HERMITIAN_INPUT_TOL`]
    /// (relative, Frobenius) and stores `(m + m*) / 2`.
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        check_square_finite(&m, "Hermitian matrix")?;
        let asym = (&m - m.adjoint()).norm();
        if asym > HERMITIAN_INPUT_TOL * m.norm().max(1.0) {
            return Err(Error::NotHermitian(asym));
        }
        Ok(Self::symmetrize_unchecked(m))
    }

    /// Stores the Hermitian part `(m + m*) / 2` whatever the asymmetry of `m`.
    pub fn symmetrize(m: ComplexMatrix) -> Result<Self> {
        check_square_finite(&m, "Hermitian matrix")?;
        Ok(Self::symmetrize_unchecked(m))
    }

    pub fn from_real(m: &RealMatrix) -> Result<Self> {
        Self::new(to_complex(m))
    }

    pub(crate) fn symmetrize_unchecked(m: ComplexMatrix) -> Self {
        let h = (&m + m.adjoint()) * cr(0.5);
        Self(h)
    }

    pub fn zeros(n: usize) -> Self {
        Self(ComplexMatrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        Self(ComplexMatrix::identity(n, n))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn eigh(&self) -> Result<Eigh> {
        eigh(self)
    }

    pub fn spectral_norm(&self) -> f64 {
        spectral_norm(&self.0)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn norms(&self) -> Result<Norms> {
        norms(self)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(&self.0 * cr(s))
    }
}

impl Add for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn add(self, rhs: Self) -> HermitianMatrix {
        HermitianMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn sub(self, rhs: Self) -> HermitianMatrix {
        HermitianMatrix(&self.0 - &rhs.0)
    }
}

impl Mul<f64> for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn mul(self, rhs: f64) -> HermitianMatrix {
        self.scale(rhs)
    }
}

/// Spectral and Frobenius norms together with the extreme eigenvalues.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Norms {
    pub spectral: f64,
    pub frobenius: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

pub fn norms(m: &HermitianMatrix) -> Result<Norms> {
    let e = eigh(m)?;
    let n = e.values.len();
    let lambda_min = e.values[0];
    let lambda_max = e.values[n - 1];
    Ok(Norms {
        spectral: lambda_min.abs().max(lambda_max.abs()),
        frobenius: m.frobenius_norm(),
        lambda_min,
        lambda_max,
    })
}

/// Hermitian positive definite matrix with a cached eigendecomposition.
#[derive(Clone, Debug, PartialEq)]
pub struct HpdMatrix {
    herm: HermitianMatrix,
    eig: Eigh,
}

impl HpdMatrix {
    pub fn new(herm: HermitianMatrix) -> Result<Self> {
        let eig = eigh(&herm)?;
        let lambda_min = eig.values[0];
        if !(lambda_min > 0.0) {
            return Err(Error::NotPositiveDefinite(lambda_min));
        }
        Ok(Self { herm, eig })
    }

    pub fn from_matrix(m: ComplexMatrix) -> Result<Self> {
        Self::new(HermitianMatrix::new(m)?)
    }

    pub fn from_real(m: &RealMatrix) -> Result<Self> {
        Self::new(HermitianMatrix::from_real(m)?)
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, 1.0)
    }

    /// `s I` for `s > 0`.
    pub fn scaled_identity(n: usize, s: f64) -> Self {
        assert!(s > 0.0, "scaled_identity needs a positive scale");
        Self {
            herm: HermitianMatrix(ComplexMatrix::identity(n, n) * cr(s)),
            eig: Eigh {
                values: DVector::from_element(n, s),
                vectors: ComplexMatrix::identity(n, n),
            },
        }
    }

    pub fn n(&self) -> usize {
        self.herm.n()
    }

    pub fn as_hermitian(&self) -> &HermitianMatrix {
        &self.herm
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        self.herm.as_matrix()
    }

    pub fn eigen(&self) -> &Eigh {
        &self.eig
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eig.values
    }

    pub fn eigenvectors(&self) -> &ComplexMatrix {
        &self.eig.vectors
    }

    pub fn lambda_min(&self) -> f64 {
        self.eig.values[0]
    }

    pub fn lambda_max(&self) -> f64 {
        self.eig.values[self.n() - 1]
    }

    /// Spectral norm, which is `λ_max` for a positive definite matrix.
    pub fn norm(&self) -> f64 {
        self.lambda_max()
    }

    /// `||X^{-1}|| = 1 / λ_min`.
    pub fn inverse_norm(&self) -> f64 {
        1.0 / self.lambda_min()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.eig.values.norm()
    }

    /// `X^r` as a positive definite matrix, reusing the eigenvectors.
    pub fn pow(&self, r: f64) -> HpdMatrix {
        let n = self.n();
        let mut idx: Vec<usize> = (0..n).collect();
        if r < 0.0 {
            idx.reverse();
        }
        let values = DVector::from_iterator(n, idx.iter().map(|&i| self.eig.values[i].powf(r)));
        let mut vectors = ComplexMatrix::zeros(n, n);
        for (dst, &src) in idx.iter().enumerate() {
            vectors.set_column(dst, &self.eig.vectors.column(src));
        }
        let eig = Eigh { values, vectors };
        let herm = HermitianMatrix::symmetrize_unchecked(eig.reconstruct());
        HpdMatrix { herm, eig }
    }

    pub fn scale(&self, s: f64) -> HpdMatrix {
        assert!(s > 0.0, "scale needs a positive factor");
        HpdMatrix {
            herm: self.herm.scale(s),
            eig: Eigh {
                values: &self.eig.values * s,
                vectors: self.eig.vectors.clone(),
            },
        }
    }
}

/// `X^r = U diag(λ_i^r) U*`.
pub fn fractional_power(x: &HpdMatrix, r: f64) -> HermitianMatrix {
    HermitianMatrix::symmetrize_unchecked(x.eig.map(|l| l.powf(r)))
}

/// First divided difference of `t -> -t^{-p}`:
/// `(a^{-p} - b^{-p}) / (b - a)`, with the confluent limit `p a^{-p-1}`.
pub fn loewner_kernel(a: f64, b: f64, p: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0 && p > 0.0) {
        return Err(Error::Domain(format!(
            "loewner kernel needs a, b, p > 0 (got a={a}, b={b}, p={p})"
        )));
    }
    Ok(loewner_kernel_unchecked(a, b, p))
}

pub(crate) fn loewner_kernel_unchecked(a: f64, b: f64, p: f64) -> f64 {
    if (a - b).abs() <= CONFLUENT_RTOL * a.max(b) {
        let m = 0.5 * (a + b);
        p * m.powf(-p - 1.0)
    } else {
        (a.powf(-p) - b.powf(-p)) / (b - a)
    }
}

/// The matrix `Φ_ij = loewner_kernel(λ_i, λ_j, p)` over positive eigenvalues.
pub fn loewner_matrix(values: &DVector<f64>, p: f64) -> RealMatrix {
    let n = values.len();
    RealMatrix::from_fn(n, n, |i, j| loewner_kernel_unchecked(values[i], values[j], p))
}

/// Directional derivative of `X -> X^{-p}` at `X` along `H`:
/// `-U (Φ ∘ (U* H U)) U*`.
pub fn neg_power_derivative(x: &HpdMatrix, h: &HermitianMatrix, p: f64) -> HermitianMatrix {
    let u = x.eigenvectors();
    let phi = loewner_matrix(x.eigenvalues(), p);
    let mut inner = u.adjoint() * h.as_matrix() * u;
    inner.zip_apply(&phi, |z, f| *z *= cr(-f));
    HermitianMatrix::symmetrize_unchecked(u * inner * u.adjoint())
}
