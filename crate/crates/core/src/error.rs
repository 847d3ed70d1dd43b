use thiserror::Error;

/// Errors raised by the numeric modules.
///
/// Solver blow-ups and ladder exhaustion are reported through
/// [`crate::galerkin::SolveError`] instead, because they carry a partial
/// trajectory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("breakpoint {0} does not lie on the path grid")]
    BreakpointNotOnGrid(f64),

    #[error("stopping rule is not grid-valued: {0}")]
    NotGridValued(f64),

    #[error("assumption A6 not satisfied: {0}")]
    AssumptionViolated(String),

    #[error("infinite tail mass above {0}")]
    InfiniteTailMass(f64),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
