use thiserror::Error;

/// Errors surfaced by every module of the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("rank deficient system: pivot {pivot:e} below tolerance {tol:e}")]
    RankDeficient { pivot: f64, tol: f64 },
    #[error("invalid tolerance {0}")]
    InvalidTolerance(f64),
    #[error("invalid exponent p = {0}")]
    InvalidP(f64),
    #[error("not converged: residual {residual:e} exceeds {limit:e}")]
    NotConverged { residual: f64, limit: f64 },
    #[error("point outside barrier domain at coordinate {index} (value {value})")]
    OutOfDomain { index: usize, value: f64 },
    #[error("centering diverged: deltaHat {before:e} -> {after:e}")]
    CenteringDiverged { before: f64, after: f64 },
    #[error("iteration cap {0} reached")]
    IterationCap(usize),
    #[error("time budget of {0} s exceeded")]
    TimeBudget(f64),
    #[error("infeasible starting point: {0}")]
    Infeasible(String),
    #[error("graph is not connected")]
    DisconnectedGraph,
    #[error("invariant violated: {0}")]
    InvariantViolated(String),
    #[error("flow repair failed: {0}")]
    RepairFailed(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse(_)
            | Error::Validation(_)
            | Error::Io(_)
            | Error::Infeasible(_)
            | Error::InvalidP(_)
            | Error::InvalidTolerance(_)
            | Error::DisconnectedGraph => 2,
            Error::IterationCap(_) | Error::TimeBudget(_) => 4,
            _ => 3,
        }
    }
}
