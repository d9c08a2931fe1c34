//! Fixtures and drivers for the four worked examples.
//!
//! Every random trial draws from its own ChaCha8 stream `(seed, trial)`, and
//! aggregates are reduced sequentially in trial order, so tables are
//! byte-identical for a given config whatever the execution mode.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::backward::{backward_error_from_scalars, ResidualScalars};
use crate::conditioning::{condition_number_real, ConditionParams};
use crate::error::{Error, Result};
use crate::funm::general_power;
use crate::induced_norm::AscentOptions;
use crate::linalg::{
    spectral_norm, to_complex, ComplexMatrix, HermitianMatrix, HpdMatrix, RealMatrix,
};
use crate::par::{map_indexed, Execution};
use crate::perturbation::{bound_rho, MuStarContext};
use crate::solver::{solve, solve_fixed_point, EquationSpec, SolveOptions};
use crate::table::{fixed, sci, Table};

/// `A_0 / ||A_0||` with `A_0 = [[2, 0.95], [0, 1]]`.
pub fn normalized_a0() -> ComplexMatrix {
    let a0 = to_complex(&RealMatrix::from_row_slice(2, 2, &[2.0, 0.95, 0.0, 1.0]));
    let s = spectral_norm(&a0);
    a0.map(|z| z / s)
}

/// `X - A^* X^{-1/3} A = I`.
pub fn example1_spec() -> EquationSpec {
    EquationSpec::new(normalized_a0(), HpdMatrix::identity(2), 1.0 / 3.0).expect("valid fixture")
}

pub const EXAMPLE2_P: f64 = 0.75;

/// `(A, Q)` of the second example exactly as printed. `Q` is not symmetric.
pub fn example2_data() -> (ComplexMatrix, ComplexMatrix) {
    let a = to_complex(&RealMatrix::from_row_slice(2, 2, &[0.2, -0.2, 0.1, 0.1]));
    let q = to_complex(&RealMatrix::from_row_slice(2, 2, &[0.8939, 0.2987, 0.1991, 0.6614]));
    (a, q)
}

/// The second example with `Q` replaced by its Hermitian part.
pub fn example2_symmetric_spec() -> EquationSpec {
    let (a, q) = example2_data();
    let q = HpdMatrix::new(HermitianMatrix::symmetrize(q).expect("finite")).expect("Q is HPD");
    EquationSpec::new(a, q, EXAMPLE2_P).expect("valid fixture")
}

/// `X - A^* X^{-3} A = 5I`.
pub fn example3_spec() -> EquationSpec {
    EquationSpec::new(normalized_a0(), HpdMatrix::scaled_identity(2, 5.0), 3.0).expect("valid fixture")
}

/// `A = [[0.5, 0.55 - 10^{-k}], [1, 1]]`, `Q = [[5, 1], [1, 5]]`, `p = 3`.
pub fn example4_spec(k: i32) -> EquationSpec {
    let a = RealMatrix::from_row_slice(2, 2, &[0.5, 0.55 - 10f64.powi(-k), 1.0, 1.0]);
    let q = HpdMatrix::from_real(&RealMatrix::from_row_slice(2, 2, &[5.0, 1.0, 1.0, 5.0]))
        .expect("Q is HPD");
    EquationSpec::new(to_complex(&a), q, 3.0).expect("valid fixture")
}

/// Generator for trial `trial` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// `magnitude (C^T + C) / ||C^T + C||` with `C` standard normal, so the
/// result is real symmetric with spectral norm `magnitude`.
pub fn random_perturbation(n: usize, magnitude: f64, rng: &mut ChaCha8Rng) -> Result<HermitianMatrix> {
    if !(magnitude >= 0.0 && magnitude.is_finite()) {
        return Err(Error::Domain(format!("perturbation magnitude must be >= 0, got {magnitude}")));
    }
    loop {
        let c = RealMatrix::from_fn(n, n, |_, _| StandardNormal.sample(rng));
        let s = c.transpose() + &c;
        let norm = spectral_norm(&to_complex(&s));
        if norm > 0.0 {
            return HermitianMatrix::from_real(&(s * (magnitude / norm)));
        }
    }
}

/// `exp(mean(ln v))`, reduced in index order. Empty input gives NaN.
pub fn geometric_mean(values: &[f64]) -> f64 {
    let sum: f64 = values.iter().map(|v| v.ln()).sum();
    (sum / values.len() as f64).exp()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ExampleId {
    One,
    Two,
    Three,
    Four,
}

impl ExampleId {
    pub fn default_indices(self) -> Vec<i32> {
        match self {
            ExampleId::Four => vec![1, 3, 5, 7, 9],
            _ => vec![4, 5, 6, 7],
        }
    }
}

impl TryFrom<u8> for ExampleId {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            1 => Ok(ExampleId::One),
            2 => Ok(ExampleId::Two),
            3 => Ok(ExampleId::Three),
            4 => Ok(ExampleId::Four),
            _ => Err(Error::Domain(format!("example must be 1..4, got {v}"))),
        }
    }
}

impl fmt::Display for ExampleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = match self {
            ExampleId::One => 1,
            ExampleId::Two => 2,
            ExampleId::Three => 3,
            ExampleId::Four => 4,
        };
        write!(f, "{n}")
    }
}

/// Default residual tolerance for perturbed and reference solves.
pub const TRIAL_TOL: f64 = 1e-13;
/// Residual at which the second example's reference iterate is taken.
pub const EXAMPLE2_REFERENCE_TOL: f64 = 1e-10;
/// Relative residual tolerance for the fourth example's solutions.
pub const EXAMPLE4_REL_TOL: f64 = 1e-14;
/// Iteration cap for the second example's reference search.
const EXAMPLE2_MAX_ITER: usize = 10_000;

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub example: ExampleId,
    /// `j` (examples 1 and 3) or `k` (examples 2 and 4).
    pub indices: Vec<i32>,
    pub trials: usize,
    pub seed: u64,
    pub solve_tol: f64,
    pub reference_tol: f64,
    pub exec: Execution,
    pub ascent: AscentOptions,
}

impl ExperimentConfig {
    pub fn new(example: ExampleId) -> Self {
        Self {
            example,
            indices: example.default_indices(),
            trials: 10,
            seed: 0,
            solve_tol: TRIAL_TOL,
            reference_tol: EXAMPLE2_REFERENCE_TOL,
            exec: Execution::default(),
            ascent: AscentOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Domain("trials must be at least 1".into()));
        }
        if self.indices.is_empty() {
            return Err(Error::Domain("no j/k values given".into()));
        }
        if !(self.solve_tol > 0.0 && self.reference_tol > 0.0) {
            return Err(Error::Domain("tolerances must be positive".into()));
        }
        if self.example == ExampleId::Two && self.indices.iter().any(|&k| k < 0) {
            return Err(Error::Domain("iterate indices must be >= 0".into()));
        }
        Ok(())
    }
}

/// Per-row status bits. Zero means every check passed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct RowFlags(pub u8);

impl RowFlags {
    /// The bound's hypotheses do not hold.
    pub const CONDITIONS_FAIL: u8 = 1;
    /// Some trial's true error exceeded the bound.
    pub const BOUND_EXCEEDED: u8 = 2;
    /// Some perturbed equation could not be solved.
    pub const SOLVE_FAILED: u8 = 4;
    /// The comparison bound is undefined.
    pub const LEGACY_UNDEFINED: u8 = 8;

    pub fn set(&mut self, bit: u8, on: bool) {
        if on {
            self.0 |= bit;
        }
    }

    pub fn has(self, bit: u8) -> bool {
        self.0 & bit != 0
    }

    pub fn is_clear(self) -> bool {
        self.0 == 0
    }
}

const FLAG_LEGEND: [(u8, &str); 4] = [
    (RowFlags::CONDITIONS_FAIL, "hypotheses of the bound do not hold"),
    (RowFlags::BOUND_EXCEEDED, "a trial's true error exceeded the bound"),
    (RowFlags::SOLVE_FAILED, "a perturbed equation did not converge"),
    (RowFlags::LEGACY_UNDEFINED, "comparison bound undefined"),
];

fn footnotes(flags: impl Iterator<Item = RowFlags>) -> Vec<String> {
    let all = flags.fold(0u8, |acc, f| acc | f.0);
    FLAG_LEGEND
        .iter()
        .filter(|(bit, _)| all & bit != 0)
        .map(|(bit, text)| format!("flag {bit}: {text}"))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Example1Row {
    pub j: i32,
    pub con2: f64,
    pub con3: f64,
    /// Geometric mean of `||X̃ - X|| / ||X||` over the solved trials.
    pub true_rel_err: f64,
    pub mu_star_rel: f64,
    /// `μ* / ||X||` with Frobenius-induced operator norms.
    pub mu_star_rel_frobenius: f64,
    pub trial_errors: Vec<f64>,
    pub flags: RowFlags,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Example2Row {
    pub k: i32,
    pub err: f64,
    pub nu_star_res: f64,
    pub kappa1: f64,
    pub theta_res: f64,
    pub kappa2: f64,
    pub residual_norm: f64,
    pub flags: RowFlags,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Example3Row {
    pub j: i32,
    pub true_rel_err: f64,
    pub rho: f64,
    pub trial_errors: Vec<f64>,
    pub flags: RowFlags,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Example4Row {
    pub k: i32,
    pub c_rel: f64,
    pub flags: RowFlags,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ExampleRows {
    One(Vec<Example1Row>),
    Two(Vec<Example2Row>),
    Three(Vec<Example3Row>),
    Four(Vec<Example4Row>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExampleOutput {
    pub rows: ExampleRows,
    pub table: Table,
}

pub fn run_example(cfg: &ExperimentConfig) -> Result<ExampleOutput> {
    cfg.validate()?;
    match cfg.example {
        ExampleId::One => run_example1(cfg),
        ExampleId::Two => run_example2(cfg),
        ExampleId::Three => run_example3(cfg),
        ExampleId::Four => run_example4(cfg),
    }
}

fn solve_reference(spec: &EquationSpec, tol: f64) -> Result<HpdMatrix> {
    let rep = solve(spec, SolveOptions::with_tol(tol))?;
    if !rep.converged() {
        return Err(Error::Internal(format!(
            "reference solve stopped with {:?} after {} iterations",
            rep.status, rep.iterations
        )));
    }
    Ok(rep.x)
}

/// Relative errors `||X̃ - X|| / ||X||` of the perturbed solutions
/// `X̃` for `A + ΔA`, `||ΔA|| = 10^{-j}`, one per trial; `None` when the
/// perturbed equation is not solved.
fn perturbed_errors(
    spec: &EquationSpec,
    x: &HpdMatrix,
    j: i32,
    cfg: &ExperimentConfig,
) -> Vec<Option<f64>> {
    let magnitude = 10f64.powi(-j);
    map_indexed(cfg.trials, cfg.exec, |t| {
        let mut rng = trial_rng(cfg.seed, t as u64);
        let da = random_perturbation(spec.n(), magnitude, &mut rng).ok()?;
        let perturbed = spec.with_a(spec.a() + da.as_matrix()).ok()?;
        let rep = solve_fixed_point(&perturbed, x, SolveOptions::with_tol(cfg.solve_tol)).ok()?;
        rep.converged()
            .then(|| spectral_norm(&(rep.x.as_matrix() - x.as_matrix())) / x.norm())
    })
}

fn split_trials(results: Vec<Option<f64>>, flags: &mut RowFlags) -> Vec<f64> {
    let solved: Vec<f64> = results.iter().flatten().copied().collect();
    flags.set(RowFlags::SOLVE_FAILED, solved.len() < results.len());
    solved
}

fn run_example1(cfg: &ExperimentConfig) -> Result<ExampleOutput> {
    let spec = example1_spec();
    let x = solve_reference(&spec, cfg.solve_tol)?;
    let ctx = MuStarContext::new(&spec, &x, &cfg.ascent)?;
    let mut rows = Vec::with_capacity(cfg.indices.len());
    for &j in &cfg.indices {
        let report = ctx.evaluate(10f64.powi(-j), 0.0);
        let eval = report.evaluation.expect("μ* evaluation for p < 1");
        let companion = report.frobenius_companion.expect("companion evaluation");
        let mut flags = RowFlags::default();
        flags.set(RowFlags::CONDITIONS_FAIL, !report.conditions_hold);
        let errors = split_trials(perturbed_errors(&spec, &x, j, cfg), &mut flags);
        flags.set(
            RowFlags::BOUND_EXCEEDED,
            report.conditions_hold && errors.iter().any(|&e| e > report.relative_bound),
        );
        rows.push(Example1Row {
            j,
            con2: eval.con2,
            con3: eval.con3,
            true_rel_err: geometric_mean(&errors),
            mu_star_rel: report.relative_bound,
            mu_star_rel_frobenius: companion.mu_star / ctx.x_norm(),
            trial_errors: errors,
            flags,
        });
    }
    let mut table = Table::new(
        "Example 1: X - A^* X^{-1/3} A = I",
        &["j", "con2", "con3", "true_rel_err", "mu_star_rel", "mu_star_rel_frobenius", "flags"],
    );
    for r in &rows {
        table.push(vec![
            r.j.to_string(),
            fixed(r.con2),
            fixed(r.con3),
            sci(r.true_rel_err),
            sci(r.mu_star_rel),
            sci(r.mu_star_rel_frobenius),
            r.flags.0.to_string(),
        ]);
    }
    table.footnotes = footnotes(rows.iter().map(|r| r.flags));
    table
        .footnotes
        .push(format!("true_rel_err: geometric mean over {} trials, seed {}", cfg.trials, cfg.seed));
    Ok(ExampleOutput {
        rows: ExampleRows::One(rows),
        table,
    })
}

fn general_residual(x: &ComplexMatrix, a: &ComplexMatrix, q: &ComplexMatrix, p: f64) -> Result<f64> {
    Ok(spectral_norm(&(q + a.adjoint() * general_power(x, -p)? * a - x)))
}

/// Iterates `X_0 = 3Q`, `X_k = Q + A^* X_{k-1}^{-p} A` of the second example
/// up to index `last` (inclusive).
pub fn example2_iterates(last: usize) -> Result<Vec<ComplexMatrix>> {
    let (a, q) = example2_data();
    let mut out = vec![q.map(|z| z * 3.0)];
    for _ in 0..last {
        let prev = out.last().expect("non-empty");
        out.push(&q + a.adjoint() * general_power(prev, -EXAMPLE2_P)? * &a);
    }
    Ok(out)
}

/// First iterate of the second example whose residual is below `tol`.
pub fn example2_reference(tol: f64) -> Result<ComplexMatrix> {
    let (a, q) = example2_data();
    let mut x = q.map(|z| z * 3.0);
    for _ in 0..=EXAMPLE2_MAX_ITER {
        if general_residual(&x, &a, &q, EXAMPLE2_P)? < tol {
            return Ok(x);
        }
        x = &q + a.adjoint() * general_power(&x, -EXAMPLE2_P)? * &a;
    }
    Err(Error::Internal(format!("no iterate reached residual {tol:e}")))
}

fn run_example2(cfg: &ExperimentConfig) -> Result<ExampleOutput> {
    let (a, q) = example2_data();
    let reference = example2_reference(cfg.reference_tol)?;
    let last = *cfg.indices.iter().max().expect("validated") as usize;
    let iterates = example2_iterates(last)?;
    let mut rows = Vec::with_capacity(cfg.indices.len());
    for &k in &cfg.indices {
        let xk = &iterates[k as usize];
        let scalars = ResidualScalars::from_general(xk, &a, &q, EXAMPLE2_P)?;
        let rep = backward_error_from_scalars(&scalars);
        let err = spectral_norm(&(xk - &reference));
        let mut flags = RowFlags::default();
        flags.set(RowFlags::CONDITIONS_FAIL, !rep.applicable);
        flags.set(RowFlags::LEGACY_UNDEFINED, !rep.legacy_applicable);
        flags.set(RowFlags::BOUND_EXCEEDED, rep.applicable && err > rep.bound);
        rows.push(Example2Row {
            k,
            err,
            nu_star_res: rep.legacy_nu_bound,
            kappa1: rep.legacy_nu_bound / err,
            theta_res: rep.bound,
            kappa2: rep.bound / err,
            residual_norm: rep.residual_norm,
            flags,
        });
    }
    let mut table = Table::new(
        "Example 2: X - A^* X^{-3/4} A = Q, X_0 = 3Q",
        &["k", "err", "nu_star_res", "kappa1", "theta_res", "kappa2", "flags"],
    );
    for r in &rows {
        table.push(vec![
            r.k.to_string(),
            sci(r.err),
            sci(r.nu_star_res),
            fixed(r.kappa1),
            sci(r.theta_res),
            fixed(r.kappa2),
            r.flags.0.to_string(),
        ]);
    }
    table.footnotes = footnotes(rows.iter().map(|r| r.flags));
    table.footnotes.push(format!(
        "reference solution: first iterate with residual below {:e}",
        cfg.reference_tol
    ));
    Ok(ExampleOutput {
        rows: ExampleRows::Two(rows),
        table,
    })
}

fn run_example3(cfg: &ExperimentConfig) -> Result<ExampleOutput> {
    let spec = example3_spec();
    let x = solve_reference(&spec, cfg.solve_tol)?;
    let mut rows = Vec::with_capacity(cfg.indices.len());
    for &j in &cfg.indices {
        // ϱ depends on ||ΔA|| only, so any draw of the right size serves.
        let probe = random_perturbation(spec.n(), 10f64.powi(-j), &mut trial_rng(cfg.seed, 0))?;
        let report = bound_rho(&spec, probe.as_matrix())?;
        let mut flags = RowFlags::default();
        flags.set(RowFlags::CONDITIONS_FAIL, !report.conditions_hold);
        let errors = split_trials(perturbed_errors(&spec, &x, j, cfg), &mut flags);
        flags.set(
            RowFlags::BOUND_EXCEEDED,
            report.conditions_hold && errors.iter().any(|&e| e > report.bound),
        );
        rows.push(Example3Row {
            j,
            true_rel_err: geometric_mean(&errors),
            rho: report.bound,
            trial_errors: errors,
            flags,
        });
    }
    let mut table = Table::new(
        "Example 3: X - A^* X^{-3} A = 5I",
        &["j", "true_rel_err", "rho", "flags"],
    );
    for r in &rows {
        table.push(vec![
            r.j.to_string(),
            sci(r.true_rel_err),
            sci(r.rho),
            r.flags.0.to_string(),
        ]);
    }
    table.footnotes = footnotes(rows.iter().map(|r| r.flags));
    table
        .footnotes
        .push(format!("true_rel_err: geometric mean over {} trials, seed {}", cfg.trials, cfg.seed));
    Ok(ExampleOutput {
        rows: ExampleRows::Three(rows),
        table,
    })
}

/// `c_rel` of the fourth example at index `k`.
pub fn example4_c_rel(k: i32) -> Result<f64> {
    let spec = example4_spec(k);
    let x = solve_reference(&spec, EXAMPLE4_REL_TOL * spec.q().norm().max(1.0))?;
    let params = ConditionParams::relative(&spec, &x);
    Ok(condition_number_real(&spec, &x, params)?.c_value)
}

fn run_example4(cfg: &ExperimentConfig) -> Result<ExampleOutput> {
    let rows: Vec<Example4Row> = cfg
        .indices
        .iter()
        .map(|&k| {
            Ok(Example4Row {
                k,
                c_rel: example4_c_rel(k)?,
                flags: RowFlags::default(),
            })
        })
        .collect::<Result<_>>()?;
    let mut table = Table::new(
        "Example 4: relative condition number, A = [[0.5, 0.55 - 10^-k], [1, 1]]",
        &["k", "c_rel", "flags"],
    );
    for r in &rows {
        table.push(vec![r.k.to_string(), fixed(r.c_rel), r.flags.0.to_string()]);
    }
    Ok(ExampleOutput {
        rows: ExampleRows::Four(rows),
        table,
    })
}
