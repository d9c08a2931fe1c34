//! Perturbation bounds for the solution under changes of `A` (and `Q`).
//!
//! For `p > 1` the relative bound `ϱ` depends on norms of the data only.
//! For `0 < p < 1` the absolute bound `μ*` needs the unperturbed solution
//! through `l = 1/||L^{-1}||` and `||P||`, which [`MuStarContext`] computes
//! once and reuses across perturbations.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::induced_norm::{AscentOptions, InducedNorms};
use crate::linalg::{spectral_norm, ComplexMatrix, HermitianMatrix, HpdMatrix};
use crate::operator::{build_operator, inv_operator_norm, op_p_norm, OperatorKind};
use crate::solver::EquationSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Regime {
    #[serde(rename = "p-gt-1")]
    AboveOne,
    #[serde(rename = "p-lt-1")]
    BelowOne,
}

/// Scalars entering `μ*`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PerturbationScalars {
    /// `1 / ||L^{-1}||`
    pub l: f64,
    /// `||X^{-1}||`
    pub zeta: f64,
    /// `||X^{-p}||`
    pub xi: f64,
    /// `||P||`
    pub n_norm: f64,
    /// `p ξ ||A||^2`
    pub eta: f64,
    pub eps: f64,
    pub sigma: f64,
}

/// `μ*` and its applicability margins for one set of scalars.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MuStarEvaluation {
    pub scalars: PerturbationScalars,
    /// `+∞` when the square root is not real.
    pub mu_star: f64,
    /// `1 - σ`
    pub con2: f64,
    /// Threshold on `ε` minus `ε`.
    pub con3: f64,
    pub conditions_hold: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PerturbationReport {
    pub regime: Regime,
    /// `ϱ` (relative) or `μ*` (absolute). `+∞` when not computable.
    pub bound: f64,
    /// `ϱ` itself, or `μ* / ||X||`.
    pub relative_bound: f64,
    pub conditions_hold: bool,
    /// Populated for `0 < p < 1`, spectral-induced operator norms.
    pub evaluation: Option<MuStarEvaluation>,
    /// The same evaluation with Frobenius-induced operator norms.
    pub frobenius_companion: Option<MuStarEvaluation>,
    /// Slot for an externally supplied comparison bound.
    pub legacy_bound: Option<f64>,
}

/// `ϱ = (2||A|| + ||ΔA||) ||ΔA|| / (λ_min(Q)^{p+1} - p ||A||^2)`, a bound on
/// `||X̃ - X|| / ||X||` for `p > 1`.
pub fn bound_rho(spec: &EquationSpec, da: &ComplexMatrix) -> Result<PerturbationReport> {
    spec.require_regime_above_one("bound ϱ")?;
    check_dims(spec, da, "ΔA")?;
    let (a, d) = (spec.a_norm(), spectral_norm(da));
    let top = spec.q().lambda_min().powf(spec.p() + 1.0);
    let radius = (top / spec.p()).sqrt();
    let denom = top - spec.p() * a * a;
    let (bound, conditions_hold) = if denom > 0.0 {
        ((2.0 * a + d) * d / denom, a < radius && d < radius - a)
    } else {
        (f64::INFINITY, false)
    };
    Ok(PerturbationReport {
        regime: Regime::AboveOne,
        bound,
        relative_bound: bound,
        conditions_hold,
        evaluation: None,
        frobenius_companion: None,
        legacy_bound: None,
    })
}

fn check_dims(spec: &EquationSpec, m: &ComplexMatrix, what: &str) -> Result<()> {
    if m.nrows() != spec.n() || m.ncols() != spec.n() {
        return Err(Error::Dimension(format!(
            "{what} is {}x{} but the equation is {1}x{1}",
            m.nrows(),
            spec.n()
        )));
    }
    Ok(())
}

/// Quantities at the unperturbed solution that do not depend on the
/// perturbation.
#[derive(Clone, Debug)]
pub struct MuStarContext {
    p: f64,
    a_norm: f64,
    x_norm: f64,
    zeta: f64,
    xi: f64,
    eta: f64,
    l: InducedNorms,
    n_norm: InducedNorms,
}

impl MuStarContext {
    /// `x` must be the solution of `spec`.
    pub fn new(spec: &EquationSpec, x: &HpdMatrix, opts: &AscentOptions) -> Result<Self> {
        spec.require_regime_below_one("bound μ*")?;
        if x.n() != spec.n() {
            return Err(Error::Dimension("X does not match the equation".into()));
        }
        let p = spec.p();
        let op = build_operator(x, spec.a(), p, OperatorKind::Resolvent)?;
        let lmin = x.lambda_min();
        let xi = lmin.powf(-p);
        Ok(Self {
            p,
            a_norm: spec.a_norm(),
            x_norm: x.norm(),
            zeta: 1.0 / lmin,
            xi,
            eta: p * xi * spec.a_norm() * spec.a_norm(),
            l: inv_operator_norm(&op, opts)?,
            n_norm: op_p_norm(&op, opts)?,
        })
    }

    pub fn l(&self) -> InducedNorms {
        self.l
    }

    pub fn n_norm(&self) -> InducedNorms {
        self.n_norm
    }

    pub fn x_norm(&self) -> f64 {
        self.x_norm
    }

    /// Bound for perturbations of the given spectral norms.
    pub fn evaluate(&self, da_norm: f64, dq_norm: f64) -> PerturbationReport {
        let primary = self.evaluate_with(self.l.spectral, self.n_norm.spectral, da_norm, dq_norm);
        let companion =
            self.evaluate_with(self.l.frobenius, self.n_norm.frobenius, da_norm, dq_norm);
        PerturbationReport {
            regime: Regime::BelowOne,
            bound: primary.mu_star,
            relative_bound: primary.mu_star / self.x_norm,
            conditions_hold: primary.conditions_hold,
            evaluation: Some(primary),
            frobenius_companion: Some(companion),
            legacy_bound: None,
        }
    }

    fn evaluate_with(&self, l: f64, n_norm: f64, da: f64, dq: f64) -> MuStarEvaluation {
        let scalars = PerturbationScalars {
            l,
            zeta: self.zeta,
            xi: self.xi,
            n_norm,
            eta: self.eta,
            eps: dq / l + n_norm * da + self.xi / l * da * da,
            sigma: self.p / l * self.zeta * self.xi * (2.0 * self.a_norm + da) * da,
        };
        mu_star(&scalars)
    }
}

/// `μ* = 2lε / (l(1+ζε-σ) + sqrt(l²(1+ζε-σ)² - 4lζε(l+η)))` together with
/// the conditions `σ < 1` and
/// `ε < l(1-σ)² / (ζ(l + lσ + 2η + 2 sqrt((lσ+η)(η+l))))`.
pub fn mu_star(s: &PerturbationScalars) -> MuStarEvaluation {
    let PerturbationScalars {
        l,
        zeta,
        eta,
        eps,
        sigma,
        ..
    } = *s;
    let threshold = l * (1.0 - sigma).powi(2)
        / (zeta * (l + l * sigma + 2.0 * eta + 2.0 * ((l * sigma + eta) * (eta + l)).sqrt()));
    let con2 = 1.0 - sigma;
    let con3 = threshold - eps;
    let base = l * (1.0 + zeta * eps - sigma);
    let disc = base * base - 4.0 * l * zeta * eps * (l + eta);
    let mu = if eps == 0.0 {
        0.0
    } else if disc >= 0.0 && base > 0.0 {
        2.0 * l * eps / (base + disc.sqrt())
    } else {
        f64::INFINITY
    };
    MuStarEvaluation {
        scalars: *s,
        mu_star: mu,
        con2,
        con3,
        conditions_hold: con2 > 0.0 && con3 > 0.0,
    }
}

/// One-shot `μ*` for perturbations `(ΔA, ΔQ)` at the solution `x`.
pub fn bound_mu_star(
    spec: &EquationSpec,
    x: &HpdMatrix,
    da: &ComplexMatrix,
    dq: &HermitianMatrix,
    opts: &AscentOptions,
) -> Result<PerturbationReport> {
    check_dims(spec, da, "ΔA")?;
    check_dims(spec, dq.as_matrix(), "ΔQ")?;
    let ctx = MuStarContext::new(spec, x, opts)?;
    Ok(ctx.evaluate(spectral_norm(da), dq.spectral_norm()))
}
