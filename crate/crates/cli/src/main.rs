//! `nlme`: solve `X - A^* X^{-p} A = Q` and reproduce the worked examples.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nlme_core::table::OutputFormat;

#[derive(Debug, Parser)]
#[command(name = "nlme", version, about = "Positive definite solutions of X - A^* X^{-p} A = Q")]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalOpts {
    /// Exponent p > 0.
    #[arg(long, global = true)]
    p: Option<f64>,
    /// Residual tolerance of the fixed-point iteration.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, default_value_t = 10)]
    trials: usize,
    #[arg(long, global = true, default_value = "markdown")]
    format: OutputFormat,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EquationArgs {
    /// Matrix file for A.
    #[arg(long)]
    a: PathBuf,
    /// Matrix file for Q.
    #[arg(long)]
    q: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve for the positive definite solution.
    Solve {
        #[command(flatten)]
        eq: EquationArgs,
        /// Starting matrix file (default: Q).
        #[arg(long)]
        x0: Option<PathBuf>,
        /// Multiply the starting matrix by this factor.
        #[arg(long, default_value_t = 1.0)]
        x0_scale: f64,
        #[arg(long, default_value_t = nlme_core::solver::DEFAULT_MAX_ITER)]
        max_iter: usize,
    },
    /// Perturbation bound for A + ΔA, Q + ΔQ.
    Perturb {
        #[command(flatten)]
        eq: EquationArgs,
        /// Matrix file for ΔA.
        #[arg(long, conflicts_with = "da_norm")]
        da: Option<PathBuf>,
        /// Draw a random symmetric ΔA of this spectral norm (uses --seed).
        #[arg(long)]
        da_norm: Option<f64>,
        /// Matrix file for ΔQ (only used when p < 1).
        #[arg(long)]
        dq: Option<PathBuf>,
    },
    /// Absolute and relative condition numbers (p > 1).
    Condnum {
        #[command(flatten)]
        eq: EquationArgs,
    },
    /// Residual-based error bound for an approximate solution (0 < p < 1).
    Backward {
        #[command(flatten)]
        eq: EquationArgs,
        /// Matrix file for the approximate solution.
        #[arg(long)]
        x: PathBuf,
    },
    /// Reproduce one of the worked examples as a table.
    Example {
        /// Example number, 1 to 4.
        #[arg(value_parser = clap::value_parser!(u8).range(1..=4))]
        id: u8,
        /// j or k values (comma separated); defaults depend on the example.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        index: Vec<i32>,
        /// Run trials on one thread.
        #[arg(long)]
        sequential: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(e.exit_code())
        }
    }
}
