//! Operator norms of real-linear maps between matrix spaces.
//!
//! A map is given by its real coordinate matrix: domain coordinates are
//! either Hermitian-basis coordinates or `(vec Re Z, vec Im Z)`, and the
//! output is always Hermitian-basis coordinates. Both bases are orthonormal
//! for `Re tr(X^* Y)`, so the Frobenius-induced norm is the largest singular
//! value of the coordinate matrix and the adjoint is its transpose.
//!
//! The spectral-induced norm has no closed form. It is estimated by dual
//! alternating ascent over the extreme points of the spectral unit ball:
//! starting from `Z`, take the top eigenpair `(s, x)` of `Y = T(Z)`, set
//! `G = T^*(s x x^*)` and move to the maximizer of `Re<G, Z>` on the unit
//! ball (the polar factor, or the eigen-sign matrix in the Hermitian case).
//! The attained `||T(Z)||` never decreases, so every value is a lower bound.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{cr, Complex64, ComplexMatrix, HermitianMatrix, RealMatrix};
use crate::par::{map_indexed, Execution};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Domain {
    /// Hermitian `n x n` matrices, `n^2` real coordinates.
    Hermitian,
    /// All complex `n x n` matrices, `2 n^2` real coordinates.
    Complex,
}

impl Domain {
    pub fn dim(self, n: usize) -> usize {
        match self {
            Domain::Hermitian => n * n,
            Domain::Complex => 2 * n * n,
        }
    }
}

/// Both induced norms of one operator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InducedNorms {
    /// Induced by the spectral norm on both sides (estimate from below).
    pub spectral: f64,
    /// Induced by the Frobenius norm on both sides (exact).
    pub frobenius: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AscentOptions {
    pub starts: usize,
    pub max_steps: usize,
    pub seed: u64,
    pub exec: Execution,
}

impl Default for AscentOptions {
    fn default() -> Self {
        Self {
            starts: 200,
            max_steps: 200,
            seed: 0x5e_ed0f_a5c3,
            exec: Execution::Parallel,
        }
    }
}

/// Hermitian basis element `k` of the `n x n` space.
///
/// Order: `E_ii`; then `(E_ij + E_ji)/√2` for `i < j`; then
/// `i(E_ij - E_ji)/√2` for `i < j`.
pub fn hermitian_basis_element(n: usize, k: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(n, n);
    let pairs = n * (n - 1) / 2;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    if k < n {
        m[(k, k)] = cr(1.0);
    } else if k < n + pairs {
        let (i, j) = pair_index(n, k - n);
        m[(i, j)] = cr(s);
        m[(j, i)] = cr(s);
    } else {
        let (i, j) = pair_index(n, k - n - pairs);
        m[(i, j)] = Complex64::new(0.0, s);
        m[(j, i)] = Complex64::new(0.0, -s);
    }
    m
}

fn pair_index(n: usize, mut k: usize) -> (usize, usize) {
    for i in 0..n {
        let row = n - 1 - i;
        if k < row {
            return (i, i + 1 + k);
        }
        k -= row;
    }
    unreachable!("pair index out of range")
}

/// Columns are `vec` of the Hermitian basis elements.
pub fn hermitian_basis(n: usize) -> ComplexMatrix {
    let mut b = ComplexMatrix::zeros(n * n, n * n);
    for k in 0..n * n {
        let e = hermitian_basis_element(n, k);
        b.column_mut(k).copy_from_slice(e.as_slice());
    }
    b
}

/// Coordinates `Re tr(E_k^* H)` in the Hermitian basis.
pub fn hermitian_coords(h: &ComplexMatrix) -> DVector<f64> {
    let n = h.nrows();
    let sq2 = std::f64::consts::SQRT_2;
    let mut c = DVector::zeros(n * n);
    let pairs = n * (n - 1) / 2;
    let mut k = 0;
    for i in 0..n {
        c[i] = h[(i, i)].re;
        for j in i + 1..n {
            c[n + k] = sq2 * 0.5 * (h[(i, j)].re + h[(j, i)].re);
            c[n + pairs + k] = sq2 * 0.5 * (h[(i, j)].im - h[(j, i)].im);
            k += 1;
        }
    }
    c
}

pub fn from_hermitian_coords(c: &DVector<f64>, n: usize) -> HermitianMatrix {
    let mut m = ComplexMatrix::zeros(n, n);
    for k in 0..n * n {
        m += hermitian_basis_element(n, k) * cr(c[k]);
    }
    HermitianMatrix::symmetrize_unchecked(m)
}

/// `(vec Re Z, vec Im Z)`.
pub fn complex_coords(z: &ComplexMatrix) -> DVector<f64> {
    let m = z.len();
    DVector::from_fn(2 * m, |k, _| {
        if k < m {
            z.as_slice()[k].re
        } else {
            z.as_slice()[k - m].im
        }
    })
}

pub fn from_complex_coords(c: &DVector<f64>, n: usize) -> ComplexMatrix {
    let m = n * n;
    ComplexMatrix::from_fn(n, n, |i, j| {
        let k = i + j * n;
        Complex64::new(c[k], c[m + k])
    })
}

/// Real-linear map into Hermitian matrices, stored in coordinates.
#[derive(Clone, Debug)]
pub struct CoordinateMap {
    n: usize,
    domain: Domain,
    matrix: RealMatrix,
}

impl CoordinateMap {
    pub fn new(n: usize, domain: Domain, matrix: RealMatrix) -> Result<Self> {
        if matrix.nrows() != n * n || matrix.ncols() != domain.dim(n) {
            return Err(Error::Dimension(format!(
                "coordinate matrix is {}x{}, expected {}x{}",
                matrix.nrows(),
                matrix.ncols(),
                n * n,
                domain.dim(n)
            )));
        }
        Ok(Self { n, domain, matrix })
    }

    /// Builds the coordinate matrix by applying `f` to each domain basis
    /// element.
    pub fn from_fn(
        n: usize,
        domain: Domain,
        f: impl Fn(&ComplexMatrix) -> ComplexMatrix,
    ) -> Result<Self> {
        let dim = domain.dim(n);
        let mut matrix = RealMatrix::zeros(n * n, dim);
        for k in 0..dim {
            let mut e = DVector::zeros(dim);
            e[k] = 1.0;
            let z = match domain {
                Domain::Hermitian => from_hermitian_coords(&e, n).into_matrix(),
                Domain::Complex => from_complex_coords(&e, n),
            };
            matrix.set_column(k, &hermitian_coords(&f(&z)));
        }
        Self::new(n, domain, matrix)
    }

    pub fn matrix(&self) -> &RealMatrix {
        &self.matrix
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn frobenius_induced(&self) -> f64 {
        self.matrix.singular_values().max()
    }

    fn apply(&self, z: &ComplexMatrix) -> HermitianMatrix {
        let c = match self.domain {
            Domain::Hermitian => hermitian_coords(z),
            Domain::Complex => complex_coords(z),
        };
        from_hermitian_coords(&(&self.matrix * c), self.n)
    }

    fn adjoint(&self, y: &ComplexMatrix) -> ComplexMatrix {
        let c = self.matrix.transpose() * hermitian_coords(y);
        match self.domain {
            Domain::Hermitian => from_hermitian_coords(&c, self.n).into_matrix(),
            Domain::Complex => from_complex_coords(&c, self.n),
        }
    }

    /// Maximizer of `Re<G, Z>` over the spectral unit ball of the domain.
    fn extreme_point(&self, g: &ComplexMatrix) -> Result<ComplexMatrix> {
        match self.domain {
            Domain::Complex => {
                let svd = g.clone().svd(true, true);
                let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
                Ok(u * vt)
            }
            Domain::Hermitian => {
                let e = HermitianMatrix::symmetrize_unchecked(g.clone()).eigh()?;
                Ok(e.map(|l| if l >= 0.0 { 1.0 } else { -1.0 }))
            }
        }
    }

    fn ascend(&self, start: ComplexMatrix, max_steps: usize) -> Result<f64> {
        let mut z = self.extreme_point(&start)?;
        let mut best = 0.0_f64;
        for _ in 0..max_steps {
            let y = self.apply(&z).eigh()?;
            let n = y.values.len();
            let (idx, s) = if y.values[n - 1].abs() >= y.values[0].abs() {
                (n - 1, 1.0)
            } else {
                (0, -1.0)
            };
            let value = y.values[idx].abs();
            if value <= best * (1.0 + 1e-14) {
                best = best.max(value);
                break;
            }
            best = value;
            let x = y.vectors.column(idx).into_owned();
            let dual = (&x * x.adjoint()) * cr(s);
            z = self.extreme_point(&self.adjoint(&dual))?;
        }
        Ok(best)
    }

    /// Spectral-induced norm estimate from `opts.starts` seeded random
    /// extreme points plus one start from the top right singular vector.
    pub fn spectral_induced(&self, opts: &AscentOptions) -> Result<f64> {
        let n = self.n;
        let svd = self.matrix.clone().svd(false, true);
        let top = svd
            .singular_values
            .iamax();
        let v = svd.v_t.unwrap().row(top).transpose();
        let first = match self.domain {
            Domain::Hermitian => from_hermitian_coords(&v, n).into_matrix(),
            Domain::Complex => from_complex_coords(&v, n),
        };
        let results = map_indexed(opts.starts + 1, opts.exec, |k| {
            let start = if k == 0 {
                first.clone()
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
                rng.set_stream(k as u64);
                random_start(n, &mut rng)
            };
            self.ascend(start, opts.max_steps)
        });
        let mut best = 0.0_f64;
        for r in results {
            best = best.max(r?);
        }
        Ok(best)
    }

    pub fn norms(&self, opts: &AscentOptions) -> Result<InducedNorms> {
        Ok(InducedNorms {
            spectral: self.spectral_induced(opts)?,
            frobenius: self.frobenius_induced(),
        })
    }
}

fn random_start(n: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |_, _| {
        Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
    })
}
