#![allow(dead_code)]

use nlme_core::linalg::{Complex64, ComplexMatrix, HermitianMatrix, HpdMatrix};
use nlme_core::solver::EquationSpec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_complex(n: usize, rng: &mut impl Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

pub fn random_hermitian(n: usize, rng: &mut impl Rng) -> HermitianMatrix {
    HermitianMatrix::symmetrize(random_complex(n, rng)).unwrap()
}

/// Eigenvalues uniform in `[lo, hi]`, eigenvectors from a random unitary.
pub fn random_hpd(n: usize, lo: f64, hi: f64, rng: &mut impl Rng) -> HpdMatrix {
    let u = random_complex(n, rng).qr().q();
    let d = ComplexMatrix::from_diagonal(&nalgebra::DVector::from_fn(n, |_, _| {
        Complex64::new(lo + (hi - lo) * rng.random::<f64>(), 0.0)
    }));
    HpdMatrix::new(HermitianMatrix::symmetrize(&u * d * u.adjoint()).unwrap()).unwrap()
}

/// `A` scaled to spectral norm `a_norm`, `Q` with spectrum in `[q_lo, q_hi]`.
pub fn random_spec(n: usize, p: f64, a_norm: f64, q_lo: f64, q_hi: f64, rng: &mut impl Rng) -> EquationSpec {
    let a = random_complex(n, rng);
    let s = nlme_core::linalg::spectral_norm(&a);
    let a = a.map(|z| z * (a_norm / s));
    EquationSpec::new(a, random_hpd(n, q_lo, q_hi, rng), p).unwrap()
}
