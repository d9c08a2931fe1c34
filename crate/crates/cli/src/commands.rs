use std::fmt;
use std::path::{Path, PathBuf};

use nlme_core::backward::{backward_error_from_scalars, ResidualScalars};
use nlme_core::conditioning::{condition_number_auto, ConditionParams};
use nlme_core::experiments::{random_perturbation, run_example, trial_rng, ExampleId, ExperimentConfig, TRIAL_TOL};
use nlme_core::induced_norm::AscentOptions;
use nlme_core::linalg::{spectral_norm, ComplexMatrix, HermitianMatrix, HpdMatrix};
use nlme_core::matrix_file::{read_matrix, to_json, MatrixFileError};
use nlme_core::par::Execution;
use nlme_core::perturbation::{bound_rho, MuStarContext, PerturbationReport};
use nlme_core::solver::{
    alpha_beta_bounds, contraction_condition, existence_condition, solve, solve_fixed_point,
    EquationSpec, SolveOptions, SolveReport, DEFAULT_TOL,
};
use nlme_core::Error;
use serde_json::{json, Value};

use crate::{Cli, Command, EquationArgs, GlobalOpts};

#[derive(Debug)]
pub enum CliError {
    /// The data violates a hypothesis of the requested analysis.
    Condition(String),
    NoConvergence(String),
    /// Unreadable or malformed input.
    Input(String),
    Other(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Condition(_) => 2,
            CliError::NoConvergence(_) => 3,
            CliError::Input(_) => 4,
            CliError::Other(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Condition(m) => write!(f, "condition not satisfied: {m}"),
            CliError::NoConvergence(m) => write!(f, "no convergence: {m}"),
            CliError::Input(m) => write!(f, "invalid input: {m}"),
            CliError::Other(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<MatrixFileError> for CliError {
    fn from(e: MatrixFileError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Dimension(_) | Error::NonFinite => CliError::Input(e.to_string()),
            Error::NotHermitian(_)
            | Error::NotPositiveDefinite(_)
            | Error::Domain(_)
            | Error::Regime(_)
            | Error::Case(_)
            | Error::SingularOperator(_) => CliError::Condition(e.to_string()),
            Error::EigenNoConvergence => CliError::NoConvergence(e.to_string()),
            Error::Bracket(_) | Error::Internal(_) => CliError::Other(e.into()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

pub fn run(cli: Cli) -> CliResult<()> {
    let g = &cli.global;
    match &cli.command {
        Command::Solve {
            eq,
            x0,
            x0_scale,
            max_iter,
        } => solve_command(g, eq, x0.as_deref(), *x0_scale, *max_iter),
        Command::Perturb { eq, da, da_norm, dq } => {
            perturb_command(g, eq, da.as_deref(), *da_norm, dq.as_deref())
        }
        Command::Condnum { eq } => condnum_command(g, eq),
        Command::Backward { eq, x } => backward_command(g, eq, x),
        Command::Example {
            id,
            index,
            sequential,
        } => example_command(g, *id, index, *sequential),
    }
}

fn emit(g: &GlobalOpts, text: &str) -> CliResult<()> {
    match &g.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_json(g: &GlobalOpts, v: &Value) -> CliResult<()> {
    let text = serde_json::to_string_pretty(v).map_err(|e| CliError::Other(e.into()))?;
    emit(g, &(text + "\n"))
}

fn matrix_value(m: &ComplexMatrix) -> Value {
    serde_json::from_str(&to_json(m)).expect("matrix JSON round-trips")
}

fn require_p(g: &GlobalOpts) -> CliResult<f64> {
    match g.p {
        Some(p) if p.is_finite() && p > 0.0 => Ok(p),
        Some(p) => Err(CliError::Condition(format!("--p must be positive, got {p}"))),
        None => Err(CliError::Input("missing required flag --p".into())),
    }
}

fn tol(g: &GlobalOpts, default: f64) -> CliResult<f64> {
    match g.tol {
        Some(t) if t > 0.0 => Ok(t),
        Some(t) => Err(CliError::Input(format!("--tol must be positive, got {t}"))),
        None => Ok(default),
    }
}

/// Reads `A` and `Q`. A non-Hermitian `Q` is replaced by its Hermitian part.
fn load(g: &GlobalOpts, eq: &EquationArgs) -> CliResult<(EquationSpec, ComplexMatrix)> {
    let p = require_p(g)?;
    let a = read_matrix(&eq.a)?;
    let q_raw = read_matrix(&eq.q)?;
    if a.nrows() != q_raw.nrows() {
        return Err(CliError::Input(format!(
            "field `n`: A is {0}x{0} but Q is {1}x{1}",
            a.nrows(),
            q_raw.nrows()
        )));
    }
    let q = match HermitianMatrix::new(q_raw.clone()) {
        Ok(h) => h,
        Err(Error::NotHermitian(d)) => {
            eprintln!("warning: Q is not Hermitian (||Q - Q*|| = {d:e}); using (Q + Q*)/2");
            HermitianMatrix::symmetrize(q_raw.clone())?
        }
        Err(e) => return Err(e.into()),
    };
    let q = HpdMatrix::new(q).map_err(|e| CliError::Condition(format!("Q: {e}")))?;
    Ok((EquationSpec::new(a, q, p)?, q_raw))
}

fn solve_report_value(rep: &SolveReport) -> Value {
    json!({
        "status": rep.status,
        "iterations": rep.iterations,
        "final_residual": rep.final_residual(),
        "residual_history": rep.residual_history,
        "x": matrix_value(rep.x.as_matrix()),
    })
}

fn require_converged(rep: &SolveReport) -> CliResult<()> {
    if rep.converged() {
        Ok(())
    } else {
        Err(CliError::NoConvergence(format!(
            "iteration stopped ({:?}) after {} steps with residual {:e}",
            rep.status,
            rep.iterations,
            rep.final_residual()
        )))
    }
}

fn solve_command(
    g: &GlobalOpts,
    eq: &EquationArgs,
    x0: Option<&Path>,
    x0_scale: f64,
    max_iter: usize,
) -> CliResult<()> {
    let (spec, _) = load(g, eq)?;
    if !(x0_scale.is_finite() && x0_scale > 0.0) {
        return Err(CliError::Input(format!("--x0-scale must be positive, got {x0_scale}")));
    }
    let start = match x0 {
        Some(path) => HpdMatrix::from_matrix(read_matrix(path)?)
            .map_err(|e| CliError::Condition(format!("X0: {e}")))?,
        None => spec.q().clone(),
    };
    let start = start.scale(x0_scale);
    let opts = SolveOptions {
        tol: tol(g, DEFAULT_TOL)?,
        max_iter,
    };
    let rep = solve_fixed_point(&spec, &start, opts)?;
    let mut report = solve_report_value(&rep);
    report["contraction_condition"] = json!(contraction_condition(&spec));
    if spec.p() > 1.0 {
        report["existence_condition"] = json!(existence_condition(&spec)?);
        report["bounds"] = json!(alpha_beta_bounds(&spec)?);
    }
    emit_json(g, &report)?;
    require_converged(&rep)
}

fn solved(g: &GlobalOpts, spec: &EquationSpec) -> CliResult<HpdMatrix> {
    let rep = solve(spec, SolveOptions::with_tol(tol(g, TRIAL_TOL)?))?;
    require_converged(&rep)?;
    Ok(rep.x)
}

fn perturb_command(
    g: &GlobalOpts,
    eq: &EquationArgs,
    da: Option<&Path>,
    da_norm: Option<f64>,
    dq: Option<&Path>,
) -> CliResult<()> {
    let (spec, _) = load(g, eq)?;
    let da = match (da, da_norm) {
        (Some(path), _) => read_matrix(path)?,
        (None, Some(norm)) => random_perturbation(spec.n(), norm, &mut trial_rng(g.seed, 0))?
            .into_matrix(),
        (None, None) => return Err(CliError::Input("give --da or --da-norm".into())),
    };
    let dq = dq.map(read_matrix).transpose()?;
    let x = solved(g, &spec)?;
    let report: PerturbationReport = if spec.p() > 1.0 {
        if dq.is_some() {
            return Err(CliError::Condition("the p > 1 bound covers ΔA only; drop --dq".into()));
        }
        bound_rho(&spec, &da)?
    } else if spec.p() < 1.0 {
        let dq_norm = dq.as_ref().map_or(0.0, spectral_norm);
        MuStarContext::new(&spec, &x, &AscentOptions::default())?
            .evaluate(spectral_norm(&da), dq_norm)
    } else {
        return Err(CliError::Condition("no perturbation bound is available for p = 1".into()));
    };

    let mut perturbed = spec.with_a(spec.a() + &da)?;
    if let Some(dq) = &dq {
        let q = HermitianMatrix::symmetrize(spec.q().as_matrix() + dq)?;
        perturbed = perturbed.with_q(HpdMatrix::new(q)?)?;
    }
    let observed = solve_fixed_point(&perturbed, &x, SolveOptions::with_tol(tol(g, TRIAL_TOL)?))?;
    let observed_rel_err = observed
        .converged()
        .then(|| spectral_norm(&(observed.x.as_matrix() - x.as_matrix())) / x.norm());

    let out = json!({
        "report": report,
        "da_norm": spectral_norm(&da),
        "observed_rel_err": observed_rel_err,
    });
    emit_json(g, &out)?;
    if report.conditions_hold {
        Ok(())
    } else {
        Err(CliError::Condition("hypotheses of the perturbation bound do not hold".into()))
    }
}

fn condnum_command(g: &GlobalOpts, eq: &EquationArgs) -> CliResult<()> {
    let (spec, _) = load(g, eq)?;
    let x = solved(g, &spec)?;
    let abs = condition_number_auto(&spec, &x, ConditionParams::absolute())?;
    let rel = condition_number_auto(&spec, &x, ConditionParams::relative(&spec, &x))?;
    let out = json!({
        "c_abs": abs.c_value,
        "c_rel": rel.c_value,
        "case": format!("{:?}", abs.case).to_lowercase(),
        "x": matrix_value(x.as_matrix()),
    });
    emit_json(g, &out)
}

fn backward_command(g: &GlobalOpts, eq: &EquationArgs, x_path: &PathBuf) -> CliResult<()> {
    let (spec, q_raw) = load(g, eq)?;
    if spec.p() >= 1.0 {
        return Err(CliError::Condition(format!(
            "the residual bound requires 0 < p < 1, got p = {}",
            spec.p()
        )));
    }
    let xt = read_matrix(x_path)?;
    if xt.nrows() != spec.n() {
        return Err(CliError::Input(format!("field `n`: X is {0}x{0}, expected {1}", xt.nrows(), spec.n())));
    }
    let q_hermitian = HermitianMatrix::new(q_raw.clone()).is_ok();
    let scalars = match HpdMatrix::from_matrix(xt.clone()) {
        Ok(x) if q_hermitian => ResidualScalars::from_hpd(&x, &spec)?,
        _ => ResidualScalars::from_general(&xt, spec.a(), &q_raw, spec.p())?,
    };
    let report = backward_error_from_scalars(&scalars);
    emit_json(g, &json!({ "report": report, "scalars": scalars }))?;
    if report.applicable {
        Ok(())
    } else {
        Err(CliError::Condition("hypotheses of the residual bound do not hold".into()))
    }
}

fn example_command(g: &GlobalOpts, id: u8, index: &[i32], sequential: bool) -> CliResult<()> {
    if g.p.is_some() {
        return Err(CliError::Input("--p is fixed by the example".into()));
    }
    let mut cfg = ExperimentConfig::new(ExampleId::try_from(id)?);
    if !index.is_empty() {
        cfg.indices = index.to_vec();
    }
    cfg.trials = g.trials;
    cfg.seed = g.seed;
    if let Some(t) = g.tol {
        cfg.solve_tol = t;
        cfg.reference_tol = t;
    }
    if sequential {
        cfg.exec = Execution::Sequential;
        cfg.ascent.exec = Execution::Sequential;
    }
    cfg.validate().map_err(|e| CliError::Input(e.to_string()))?;
    let output = run_example(&cfg)?;
    emit(g, &output.table.render(g.format))
}
