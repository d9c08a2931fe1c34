//! Principal fractional powers of general (non-Hermitian) square matrices.
//!
//! Used where the data is not Hermitian, so the iterates of the fixed-point
//! map are not either. Schur form plus Parlett recurrence; eigenvalues must
//! be distinct and off the closed negative real axis.

use nalgebra::linalg::Schur;

use crate::error::{Error, Result};
use crate::linalg::{check_square_finite, Complex64, ComplexMatrix};

/// Eigenvalues closer than this (relative to the largest modulus) are
/// treated as repeated, which the Parlett recurrence cannot handle.
pub const SEPARATION_RTOL: f64 = 1e-8;

fn schur(m: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix)> {
    check_square_finite(m, "matrix")?;
    Schur::try_new(m.clone(), f64::EPSILON, 10_000)
        .map(Schur::unpack)
        .ok_or_else(|| Error::Internal("Schur decomposition did not converge".into()))
}

/// Eigenvalues of a general square matrix, in Schur order.
pub fn eigenvalues(m: &ComplexMatrix) -> Result<Vec<Complex64>> {
    let (_, t) = schur(m)?;
    Ok((0..t.nrows()).map(|i| t[(i, i)]).collect())
}

/// Smallest real part among the eigenvalues.
pub fn min_real_eigenvalue(m: &ComplexMatrix) -> Result<f64> {
    Ok(eigenvalues(m)?
        .into_iter()
        .map(|z| z.re)
        .fold(f64::INFINITY, f64::min))
}

/// Principal power `M^r`.
pub fn general_power(m: &ComplexMatrix, r: f64) -> Result<ComplexMatrix> {
    let (z, t) = schur(m)?;
    let n = t.nrows();
    let diag: Vec<Complex64> = (0..n).map(|i| t[(i, i)]).collect();
    let scale = diag.iter().map(|d| d.norm()).fold(0.0, f64::max);
    for d in &diag {
        if d.im == 0.0 && d.re <= 0.0 {
            return Err(Error::Domain(format!(
                "eigenvalue {} lies on the branch cut of the principal power",
                d.re
            )));
        }
    }

    let mut f = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        f[(i, i)] = diag[i].powf(r);
    }
    for d in 1..n {
        for i in 0..n - d {
            let j = i + d;
            let gap = diag[j] - diag[i];
            if gap.norm() <= SEPARATION_RTOL * scale {
                return Err(Error::Domain(format!(
                    "eigenvalues {} and {} are too close for the Parlett recurrence",
                    diag[i], diag[j]
                )));
            }
            let mut s = t[(i, j)] * (f[(j, j)] - f[(i, i)]);
            for k in i + 1..j {
                s += t[(i, k)] * f[(k, j)] - f[(i, k)] * t[(k, j)];
            }
            f[(i, j)] = s / gap;
        }
    }
    Ok(&z * f * z.adjoint())
}
