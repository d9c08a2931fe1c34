use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix contains a non-finite entry")]
    NonFinite,

    #[error("matrix is not Hermitian: ||M - M*|| = {0:e}")]
    NotHermitian(f64),

    #[error("matrix is not positive definite: lambda_min = {0:e}")]
    NotPositiveDefinite(f64),

    #[error("Hermitian eigensolver did not converge")]
    EigenNoConvergence,

    #[error("domain error: {0}")]
    Domain(String),

    /// The exponent lies outside the range an analysis is valid for.
    #[error("regime error: {0}")]
    Regime(String),

    #[error("operator is numerically singular: sigma_min = {0:e}")]
    SingularOperator(f64),

    #[error("root bracketing failed: {0}")]
    Bracket(String),

    /// A real-only routine received complex data.
    #[error("case error: {0}")]
    Case(String),

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
