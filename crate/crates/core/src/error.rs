use thiserror::Error;

/// Failures raised by the fin model, its functionals and the optimizer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FinError {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("grid mismatch: expected {expected} cells, got {got}")]
    GridMismatch { expected: usize, got: usize },

    #[error("atom at x = {position} lies outside [0, {length}]")]
    AtomOutOfRange { position: f64, length: f64 },

    #[error("singular tridiagonal system at row {row}")]
    Singular { row: usize },

    #[error("convection coefficient is not constant")]
    NonConstantConvection,

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("grid too coarse: {0}")]
    Resolution(String),

    #[error("infeasible configuration: {0}")]
    Infeasible(String),

    #[error("radius reconstruction failed: {0}")]
    Reconstruction(String),
}

pub type Result<T> = std::result::Result<T, FinError>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> FinError {
    FinError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

pub(crate) fn ensure_finite(values: &[f64], what: &'static str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(FinError::NonFinite(what))
    }
}
