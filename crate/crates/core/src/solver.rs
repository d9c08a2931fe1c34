//! Fixed-point solver for `X - A^* X^{-p} A = Q` and the scalar tests that
//! certify existence and uniqueness of the positive definite solution.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    check_square_finite, fractional_power, is_real, spectral_norm, ComplexMatrix,
    HermitianMatrix, HpdMatrix,
};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 10_000;
/// Iterates whose largest eigenvalue exceeds this multiple of `λ_max(Q)` are
/// reported as diverged.
pub const DIVERGENCE_FACTOR: f64 = 1e12;

/// The problem data `(A, Q, p)`.
#[derive(Clone, Debug)]
pub struct EquationSpec {
    a: ComplexMatrix,
    q: HpdMatrix,
    p: f64,
    a_norm: f64,
    kappa_max: f64,
    kappa_min: f64,
}

impl EquationSpec {
    pub fn new(a: ComplexMatrix, q: HpdMatrix, p: f64) -> Result<Self> {
        check_square_finite(&a, "A")?;
        if a.nrows() != q.n() {
            return Err(Error::Dimension(format!(
                "A is {}x{} but Q is {}x{}",
                a.nrows(),
                a.ncols(),
                q.n(),
                q.n()
            )));
        }
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::Domain(format!("exponent p must be positive, got {p}")));
        }
        let ata = HermitianMatrix::symmetrize(a.adjoint() * &a)?.norms()?;
        Ok(Self {
            a_norm: spectral_norm(&a),
            kappa_max: ata.lambda_max.max(0.0),
            kappa_min: ata.lambda_min.max(0.0),
            a,
            q,
            p,
        })
    }

    pub fn n(&self) -> usize {
        self.q.n()
    }

    pub fn a(&self) -> &ComplexMatrix {
        &self.a
    }

    pub fn q(&self) -> &HpdMatrix {
        &self.q
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// `||A||`, spectral.
    pub fn a_norm(&self) -> f64 {
        self.a_norm
    }

    /// `λ_max(A^* A)`.
    pub fn kappa_max(&self) -> f64 {
        self.kappa_max
    }

    /// `λ_min(A^* A)`.
    pub fn kappa_min(&self) -> f64 {
        self.kappa_min
    }

    pub fn is_real(&self) -> bool {
        is_real(&self.a) && is_real(self.q.as_matrix())
    }

    /// Same `Q` and `p` with `A + dA`.
    pub fn with_a(&self, a: ComplexMatrix) -> Result<Self> {
        Self::new(a, self.q.clone(), self.p)
    }

    pub fn with_q(&self, q: HpdMatrix) -> Result<Self> {
        Self::new(self.a.clone(), q, self.p)
    }

    /// `A^* M A` for Hermitian `M`.
    pub(crate) fn congruence(&self, m: &HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix::symmetrize_unchecked(self.a.adjoint() * m.as_matrix() * &self.a)
    }

    pub(crate) fn require_regime_above_one(&self, what: &str) -> Result<()> {
        if self.p > 1.0 {
            Ok(())
        } else {
            Err(Error::Regime(format!("{what} requires p > 1, got p = {}", self.p)))
        }
    }

    pub(crate) fn require_regime_below_one(&self, what: &str) -> Result<()> {
        if self.p > 0.0 && self.p < 1.0 {
            Ok(())
        } else {
            Err(Error::Regime(format!("{what} requires 0 < p < 1, got p = {}", self.p)))
        }
    }
}

/// `R(X) = Q + A^* X^{-p} A - X`.
pub fn residual(x: &HpdMatrix, spec: &EquationSpec) -> Result<HermitianMatrix> {
    if x.n() != spec.n() {
        return Err(Error::Dimension(format!(
            "X is {0}x{0} but the equation is {1}x{1}",
            x.n(),
            spec.n()
        )));
    }
    let image = fixed_point_map(&x.pow(-spec.p), spec);
    Ok(&image - x.as_hermitian())
}

/// `Q + A^* M A` for `M = X^{-p}`.
fn fixed_point_map(x_neg_p: &HpdMatrix, spec: &EquationSpec) -> HermitianMatrix {
    spec.q.as_hermitian() + &spec.congruence(x_neg_p.as_hermitian())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    Diverged,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

impl SolveOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub x: HpdMatrix,
    pub iterations: usize,
    /// Spectral norm of the residual after each iteration.
    pub residual_history: Vec<f64>,
    pub status: SolveStatus,
}

impl SolveReport {
    pub fn final_residual(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(f64::INFINITY)
    }

    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }
}

/// One step of the fixed-point iteration.
#[derive(Clone, Debug)]
pub struct Iterate {
    pub index: usize,
    pub x: HpdMatrix,
    pub residual_norm: f64,
}

/// Iterator over `X_k = Q + A^* X_{k-1}^{-p} A`, `k = 1, 2, ...`.
///
/// Each item carries `||R(X_k)||`; evaluating it yields `X_k^{-p}`, which is
/// reused for the next step, so every step costs one eigendecomposition.
pub struct FixedPointIteration<'a> {
    spec: &'a EquationSpec,
    prev_neg_p: HpdMatrix,
    index: usize,
    failed: bool,
}

impl<'a> FixedPointIteration<'a> {
    pub fn new(spec: &'a EquationSpec, x0: &HpdMatrix) -> Result<Self> {
        if x0.n() != spec.n() {
            return Err(Error::Dimension(format!(
                "X0 is {0}x{0} but the equation is {1}x{1}",
                x0.n(),
                spec.n()
            )));
        }
        Ok(Self {
            spec,
            prev_neg_p: x0.pow(-spec.p),
            index: 0,
            failed: false,
        })
    }

    fn step(&mut self) -> Result<Iterate> {
        let next = fixed_point_map(&self.prev_neg_p, self.spec);
        // X_k = Q + (PSD) >= Q > 0
        let x = HpdMatrix::new(next).map_err(|e| {
            Error::Internal(format!("iterate {} lost positive definiteness: {e}", self.index + 1))
        })?;
        let x_neg_p = x.pow(-self.spec.p);
        let image = fixed_point_map(&x_neg_p, self.spec);
        let residual_norm = (&image - x.as_hermitian()).spectral_norm();
        self.prev_neg_p = x_neg_p;
        self.index += 1;
        Ok(Iterate {
            index: self.index,
            x,
            residual_norm,
        })
    }
}

impl Iterator for FixedPointIteration<'_> {
    type Item = Result<Iterate>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        let r = self.step();
        self.failed = r.is_err();
        Some(r)
    }
}

/// Runs the fixed-point iteration from `x0` until `||R(X_k)|| < tol`.
///
/// Running out of iterations or diverging is reported through
/// [`SolveReport::status`], not as an error.
pub fn solve_fixed_point(
    spec: &EquationSpec,
    x0: &HpdMatrix,
    opts: SolveOptions,
) -> Result<SolveReport> {
    if !(opts.tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {}", opts.tol)));
    }
    let blowup = DIVERGENCE_FACTOR * spec.q.lambda_max();
    let mut history = Vec::new();
    let mut last = x0.clone();
    let mut status = SolveStatus::MaxIterations;
    for it in FixedPointIteration::new(spec, x0)?.take(opts.max_iter) {
        let it = it?;
        history.push(it.residual_norm);
        let done = it.residual_norm < opts.tol;
        let diverged = !it.residual_norm.is_finite() || it.x.lambda_max() > blowup;
        last = it.x;
        if done {
            status = SolveStatus::Converged;
            break;
        }
        if diverged {
            status = SolveStatus::Diverged;
            break;
        }
    }
    Ok(SolveReport {
        x: last,
        iterations: history.len(),
        residual_history: history,
        status,
    })
}

/// [`solve_fixed_point`] started from `X_0 = Q`.
pub fn solve(spec: &EquationSpec, opts: SolveOptions) -> Result<SolveReport> {
    solve_fixed_point(spec, spec.q(), opts)
}

/// Enclosure `βI <= X <= αI` of the solution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExistenceBounds {
    pub alpha: f64,
    pub beta: f64,
    /// `β > (p κ̄)^{1/(p+1)}`, under which the solution is unique and
    /// lies in `[βI, αI]`.
    pub beta_condition_holds: bool,
}

/// `(x - λ_max(Q)) (λ_min(Q) + κ̲ / x^p)^p - κ̄`
pub(crate) fn alpha_equation(spec: &EquationSpec, x: f64) -> f64 {
    let (qmin, qmax, p) = (spec.q.lambda_min(), spec.q.lambda_max(), spec.p);
    (x - qmax) * (qmin + spec.kappa_min / x.powf(p)).powf(p) - spec.kappa_max
}

/// `(x - λ_min(Q)) (λ_max(Q) + κ̄ / x^p)^p - κ̲`
pub(crate) fn beta_equation(spec: &EquationSpec, x: f64) -> f64 {
    let (qmin, qmax, p) = (spec.q.lambda_min(), spec.q.lambda_max(), spec.p);
    (x - qmin) * (qmax + spec.kappa_max / x.powf(p)).powf(p) - spec.kappa_min
}

/// Root of `f` on `[lo, ∞)` given `f(lo) <= 0` and `f -> +∞`.
fn bisect_right_of(lo: f64, start_hi: f64, f: impl Fn(f64) -> f64) -> Result<f64> {
    let flo = f(lo);
    if flo > 0.0 || flo.is_nan() {
        return Err(Error::Bracket(format!("function is positive at left end x = {lo}")));
    }
    if flo == 0.0 {
        return Ok(lo);
    }
    let mut lo = lo;
    let mut hi = start_hi.max(lo);
    let mut grow = 0;
    while !(f(hi) > 0.0) {
        lo = hi;
        hi = 2.0 * hi + 1.0;
        grow += 1;
        if grow > 2000 || !hi.is_finite() {
            return Err(Error::Bracket("no sign change found".into()));
        }
    }
    while hi - lo > 1e-13 * (1.0 + lo.abs()) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Solves the two scalar equations that enclose the solution and evaluates
/// the uniqueness test on `β`.
pub fn alpha_beta_bounds(spec: &EquationSpec) -> Result<ExistenceBounds> {
    let qmin = spec.q.lambda_min();
    let hi = spec.q.lambda_max() + spec.kappa_max / qmin.powf(spec.p) + 1.0;
    let alpha = bisect_right_of(qmin, hi, |x| alpha_equation(spec, x))?;
    let beta = bisect_right_of(qmin, hi, |x| beta_equation(spec, x))?;
    let threshold = (spec.p * spec.kappa_max).powf(1.0 / (spec.p + 1.0));
    Ok(ExistenceBounds {
        alpha,
        beta,
        beta_condition_holds: beta > threshold,
    })
}

/// Closed-form sufficient condition (in `λ(Q)`, `κ̄`, `κ̲`) for a unique
/// positive definite solution when `p > 1`.
///
/// With `A = 0` the left inequality degenerates to `0 < 0` and the test
/// reports `false`.
pub fn existence_condition(spec: &EquationSpec) -> Result<bool> {
    spec.require_regime_above_one("existence condition")?;
    let (p, kmax, kmin) = (spec.p, spec.kappa_max, spec.kappa_min);
    let (qmin, qmax) = (spec.q.lambda_min(), spec.q.lambda_max());
    if kmax == 0.0 {
        return Ok(false);
    }
    let pk = p * kmax;
    let left = (pk.powf(1.0 / (p + 1.0)) - qmin) * (qmax + kmax / pk.powf(p / (p + 1.0))).powf(p);
    let right = qmax * (qmin * p).powf(p) / (p - 1.0).powf(p + 1.0);
    Ok(left < kmin && kmin <= kmax && kmax < right)
}

/// `p ||A||^2 < λ_min(Q)^{p+1}`: unique solution with `X >= λ_min(Q) I`.
pub fn contraction_condition(spec: &EquationSpec) -> bool {
    spec.p * spec.a_norm * spec.a_norm < spec.q.lambda_min().powf(spec.p + 1.0)
}

/// `c X` as an initial guess.
pub fn scaled_start(x: &HpdMatrix, c: f64) -> HpdMatrix {
    x.scale(c)
}

/// `A^* X^{-p} A`, used by callers that need the nonlinear term alone.
pub fn nonlinear_term(x: &HpdMatrix, spec: &EquationSpec) -> HermitianMatrix {
    spec.congruence(&fractional_power(x, -spec.p))
}
