//! Condition numbers of the solution for `p > 1`.
//!
//! Linearizing the equation gives
//! `V vec(ΔX) = vec(ΔQ) + (I ⊗ B^*) vec(ΔA) + (B^T ⊗ I) Π vec(conj ΔA)`
//! with `B = X^{-p} A`. Splitting into real and imaginary parts yields a real
//! matrix `(S_c, U_c)` acting on `(ΔQ, ΔA)`; the condition number is its
//! largest singular value after scaling by the weights `(ξ, η, ρ)`.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    frobenius_norm, imag_part, real_part, to_complex, vec_permutation, Complex64, ComplexMatrix,
    HermitianMatrix, HpdMatrix, RealMatrix,
};
use crate::operator::{build_operator, OperatorKind};
use crate::par::{map_indexed, Execution};
use crate::solver::{solve_fixed_point, EquationSpec, SolveOptions};

/// Weights of the perturbation sizes: `ΔX` by `ξ`, `ΔA` by `η`, `ΔQ` by `ρ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConditionParams {
    pub xi: f64,
    pub eta: f64,
    pub rho: f64,
}

impl ConditionParams {
    pub fn new(xi: f64, eta: f64, rho: f64) -> Result<Self> {
        if !(xi > 0.0 && eta > 0.0 && rho > 0.0) {
            return Err(Error::Domain("condition weights must be positive".into()));
        }
        Ok(Self { xi, eta, rho })
    }

    pub fn absolute() -> Self {
        Self {
            xi: 1.0,
            eta: 1.0,
            rho: 1.0,
        }
    }

    /// `(||X||_F, ||A||_F, ||Q||_F)`.
    pub fn relative(spec: &EquationSpec, x: &HpdMatrix) -> Self {
        Self {
            xi: x.frobenius_norm(),
            eta: frobenius_norm(spec.a()),
            rho: spec.q().frobenius_norm(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConditionCase {
    Complex,
    Real,
}

/// Real and imaginary parts of `V^{-1}`, `V^{-1}(I ⊗ B^*)` and
/// `V^{-1}(B^T ⊗ I)Π`, and the stacked `2n^2 x 2n^2` blocks.
#[derive(Clone, Debug)]
pub struct ComplexBlocks {
    pub s: RealMatrix,
    pub sigma: RealMatrix,
    pub u1: RealMatrix,
    pub omega1: RealMatrix,
    pub u2: RealMatrix,
    pub omega2: RealMatrix,
    /// `[[S, -Σ], [Σ, S]]`
    pub s_c: RealMatrix,
    /// `[[U1 + U2, Ω2 - Ω1], [Ω1 + Ω2, U1 - U2]]`
    pub u_c: RealMatrix,
}

/// Real-data blocks: `S_r = V^{-1}` and
/// `U_r = S_r [I ⊗ (A^T X^{-p}) + ((A^T X^{-p}) ⊗ I) Π]`.
#[derive(Clone, Debug)]
pub struct RealBlocks {
    pub s_r: RealMatrix,
    pub u_r: RealMatrix,
}

#[derive(Clone, Debug)]
pub enum ConditionBlocks {
    Complex(Box<ComplexBlocks>),
    Real(RealBlocks),
}

impl ConditionBlocks {
    /// `(S, U)` of the active case.
    pub fn pair(&self) -> (&RealMatrix, &RealMatrix) {
        match self {
            ConditionBlocks::Complex(b) => (&b.s_c, &b.u_c),
            ConditionBlocks::Real(b) => (&b.s_r, &b.u_r),
        }
    }

    pub fn case(&self) -> ConditionCase {
        match self {
            ConditionBlocks::Complex(_) => ConditionCase::Complex,
            ConditionBlocks::Real(_) => ConditionCase::Real,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ConditionReport {
    pub c_value: f64,
    pub params: ConditionParams,
    pub case: ConditionCase,
    pub blocks: ConditionBlocks,
    /// Top right singular vector of `(ρS, ηU)`: coordinates of `(ΔQ, ΔA)`
    /// per unit weighted size.
    pub top_direction: DVector<f64>,
}

fn stack2(a: &RealMatrix, b: &RealMatrix, c: &RealMatrix, d: &RealMatrix) -> RealMatrix {
    let (r, k) = a.shape();
    let mut m = RealMatrix::zeros(2 * r, 2 * k);
    m.view_mut((0, 0), (r, k)).copy_from(a);
    m.view_mut((0, k), (r, k)).copy_from(b);
    m.view_mut((r, 0), (r, k)).copy_from(c);
    m.view_mut((r, k), (r, k)).copy_from(d);
    m
}

fn operator_inverse(x: &HpdMatrix, a: &ComplexMatrix, p: f64) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let op = build_operator(x, a, p, OperatorKind::ExponentialIntegral)?;
    Ok((op.inverse()?, op.b().clone()))
}

/// Complex-case blocks.
pub fn assemble_condition_blocks(x: &HpdMatrix, a: &ComplexMatrix, p: f64) -> Result<ComplexBlocks> {
    let n = x.n();
    let (vinv, b) = operator_inverse(x, a, p)?;
    let id = ComplexMatrix::identity(n, n);
    let pi = to_complex(&vec_permutation(n));
    let m1 = &vinv * crate::linalg::kron(&id, &b.adjoint());
    let m2 = &vinv * crate::linalg::kron(&b.transpose(), &id) * pi;
    let (s, sigma) = (real_part(&vinv), imag_part(&vinv));
    let (u1, omega1) = (real_part(&m1), imag_part(&m1));
    let (u2, omega2) = (real_part(&m2), imag_part(&m2));
    let s_c = stack2(&s, &(-&sigma), &sigma, &s);
    let u_c = stack2(&(&u1 + &u2), &(&omega2 - &omega1), &(&omega1 + &omega2), &(&u1 - &u2));
    Ok(ComplexBlocks {
        s,
        sigma,
        u1,
        omega1,
        u2,
        omega2,
        s_c,
        u_c,
    })
}

/// Real-case blocks; errors on complex data.
pub fn assemble_real_blocks(x: &HpdMatrix, a: &ComplexMatrix, p: f64) -> Result<RealBlocks> {
    if !crate::linalg::is_real(a) || !crate::linalg::is_real(x.as_matrix()) {
        return Err(Error::Case("real condition number needs real A and X".into()));
    }
    let n = x.n();
    let (vinv, b) = operator_inverse(x, a, p)?;
    let s_r = real_part(&vinv);
    let bt = real_part(&b).transpose();
    let id = RealMatrix::identity(n, n);
    let inner = id.kronecker(&bt) + bt.kronecker(&id) * vec_permutation(n);
    let u_r = &s_r * inner;
    Ok(RealBlocks { s_r, u_r })
}

fn finish(blocks: ConditionBlocks, params: ConditionParams) -> ConditionReport {
    let (s, u) = blocks.pair();
    let (r, ks, ku) = (s.nrows(), s.ncols(), u.ncols());
    let mut m = RealMatrix::zeros(r, ks + ku);
    m.view_mut((0, 0), (r, ks)).copy_from(&(s * params.rho));
    m.view_mut((0, ks), (r, ku)).copy_from(&(u * params.eta));
    let svd = m.svd(false, true);
    let top = svd.singular_values.imax();
    let c_value = svd.singular_values[top] / params.xi;
    let top_direction = svd.v_t.expect("requested").row(top).transpose();
    ConditionReport {
        c_value,
        params,
        case: blocks.case(),
        blocks,
        top_direction,
    }
}

/// `c(X) = (1/ξ) ||(ρ S_c, η U_c)||` through the complex split.
pub fn condition_number(
    spec: &EquationSpec,
    x: &HpdMatrix,
    params: ConditionParams,
) -> Result<ConditionReport> {
    spec.require_regime_above_one("condition number")?;
    let blocks = assemble_condition_blocks(x, spec.a(), spec.p())?;
    Ok(finish(ConditionBlocks::Complex(Box::new(blocks)), params))
}

/// `c(X) = (1/ξ) ||(ρ S_r, η U_r)||` for real data.
pub fn condition_number_real(
    spec: &EquationSpec,
    x: &HpdMatrix,
    params: ConditionParams,
) -> Result<ConditionReport> {
    spec.require_regime_above_one("condition number")?;
    if !spec.is_real() {
        return Err(Error::Case("real condition number needs real A and Q".into()));
    }
    let blocks = assemble_real_blocks(x, spec.a(), spec.p())?;
    Ok(finish(ConditionBlocks::Real(blocks), params))
}

/// Real path for real data, complex split otherwise.
pub fn condition_number_auto(
    spec: &EquationSpec,
    x: &HpdMatrix,
    params: ConditionParams,
) -> Result<ConditionReport> {
    if spec.is_real() {
        condition_number_real(spec, x, params)
    } else {
        condition_number(spec, x, params)
    }
}

/// Finite-difference sensitivities from re-solving perturbed equations.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FdEstimate {
    /// Largest `||ΔX||_F / (ξ δ)` over the completed trials.
    pub estimate: f64,
    pub ratios: Vec<f64>,
    /// Trials whose perturbed equation could not be solved.
    pub skipped: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FdOptions {
    pub delta: f64,
    pub trials: usize,
    pub seed: u64,
    pub tol: f64,
    pub exec: Execution,
}

impl Default for FdOptions {
    fn default() -> Self {
        Self {
            delta: 1e-7,
            trials: 50,
            seed: 0,
            tol: 1e-14,
            exec: Execution::Parallel,
        }
    }
}

/// `||ΔX||_F / (ξ δ)` for the perturbation `(ΔA, ΔQ) = δ(η dA, ρ dQ)` with
/// `||(dA, dQ)||_F = 1`. `dQ` is made Hermitian first, and the pair is
/// renormalized afterwards. `None` if the perturbed equation is not
/// solvable.
pub fn fd_ratio(
    spec: &EquationSpec,
    x: &HpdMatrix,
    params: ConditionParams,
    da: &ComplexMatrix,
    dq: &ComplexMatrix,
    opts: &FdOptions,
) -> Option<f64> {
    let dq = (dq + dq.adjoint()) * Complex64::new(0.5, 0.0);
    let scale = (da.norm_squared() + dq.norm_squared()).sqrt();
    if scale == 0.0 {
        return None;
    }
    let k = opts.delta / scale;
    let a = spec.a() + da * Complex64::new(k * params.eta, 0.0);
    let q = HermitianMatrix::symmetrize_unchecked(
        spec.q().as_matrix() + dq * Complex64::new(k * params.rho, 0.0),
    );
    let q = HpdMatrix::new(q).ok()?;
    let perturbed = EquationSpec::new(a, q, spec.p()).ok()?;
    let tol = opts.tol * spec.q().norm().max(1.0);
    let rep = solve_fixed_point(&perturbed, x, SolveOptions::with_tol(tol)).ok()?;
    if !rep.converged() {
        return None;
    }
    let dx = rep.x.as_matrix() - x.as_matrix();
    Some(dx.norm() / (params.xi * opts.delta))
}

/// Random-direction finite-difference estimate of `c(X)`.
///
/// Trial `i` draws from the stream `(opts.seed, i)`, so results do not
/// depend on the execution mode. `x` should be solved to `opts.tol`.
pub fn fd_condition_estimate(
    spec: &EquationSpec,
    x: &HpdMatrix,
    params: ConditionParams,
    opts: &FdOptions,
) -> FdEstimate {
    let n = spec.n();
    let real = spec.is_real();
    let results = map_indexed(opts.trials, opts.exec, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(i as u64);
        let mut draw = || -> ComplexMatrix {
            ComplexMatrix::from_fn(n, n, |_, _| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = if real { 0.0 } else { StandardNormal.sample(&mut rng) };
                Complex64::new(re, im)
            })
        };
        let da = draw();
        let dq = draw();
        fd_ratio(spec, x, params, &da, &dq, opts)
    });
    let ratios: Vec<f64> = results.iter().flatten().copied().collect();
    FdEstimate {
        estimate: ratios.iter().copied().fold(0.0, f64::max),
        skipped: results.len() - ratios.len(),
        ratios,
    }
}

/// Finite-difference response along the top singular direction of the
/// report, or `None` if the perturbed equation is not solvable.
pub fn probe_top_direction(
    spec: &EquationSpec,
    x: &HpdMatrix,
    report: &ConditionReport,
    opts: &FdOptions,
) -> Option<f64> {
    let n = spec.n();
    let m = n * n;
    let v = &report.top_direction;
    let unvec = |re: &[f64], im: Option<&[f64]>| {
        ComplexMatrix::from_fn(n, n, |i, j| {
            let k = i + j * n;
            Complex64::new(re[k], im.map_or(0.0, |s| s[k]))
        })
    };
    let s = v.as_slice();
    let (dq, da) = match report.case {
        ConditionCase::Real => (unvec(&s[..m], None), unvec(&s[m..2 * m], None)),
        ConditionCase::Complex => (
            unvec(&s[..m], Some(&s[m..2 * m])),
            unvec(&s[2 * m..3 * m], Some(&s[3 * m..4 * m])),
        ),
    };
    fd_ratio(spec, x, report.params, &da, &dq, opts)
}
