use thiserror::Error;

/// Errors shared by all solvers in this crate.
#[derive(Debug, Error)]
pub enum SolverError {
    /// Model or uncertainty-set invariants are violated. Each entry names the
    /// offending index and the measured quantity.
    #[error("model validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),

    /// The operation does not support this input (e.g. infinite horizon fed
    /// to a finite-horizon solver, or a discount of exactly 1 fed to value
    /// iteration).
    #[error("unsupported input: {0}")]
    Unsupported(String),

    /// Array shapes do not agree.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Exhaustive oracles refuse instances beyond their enumeration cap.
    #[error("instance exceeds size cap: {0}")]
    SizeCap(String),

    /// An iterative solver hit its iteration cap before reaching tolerance.
    #[error("convergence failure: {0}")]
    Convergence(String),

    /// A parameter point is not representable inside the uncertainty set.
    #[error("parameters not in uncertainty set: {0}")]
    NotInSet(String),
}

pub type Result<T> = std::result::Result<T, SolverError>;
