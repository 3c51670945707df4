use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum LogzError {
    /// A configuration field is out of range or inconsistent.
    #[error("config error: {0}")]
    Config(String),

    /// Input validation failed (non-SPD matrix, bad responses, ...).
    #[error("validation error: {0}")]
    Validation(String),

    /// CSV ingestion failed; names the offending cell when known.
    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    /// Mode search did not reach the gradient tolerance within its budget.
    #[error("mode optimization did not converge: gradient norm {grad_norm:.3e} after {iterations} iterations")]
    Optimization {
        grad_norm: f64,
        iterations: usize,
        best: Vec<f64>,
    },

    /// The target is exactly Gaussian (m = L); the normalizing constant is
    /// closed-form and the annealing pipeline must not be used.
    #[error("m = L: the density is Gaussian and Z is closed-form")]
    ClosedFormGaussian,

    /// A chain produced a non-finite coordinate.
    #[error("chain diverged in phase {phase} at step {step}")]
    Divergence { phase: usize, step: u64 },

    /// A quantity left the domain of the formula that consumes it.
    #[error("domain error: {0}")]
    Domain(String),

    /// A diagnostic bound was requested outside its validity conditions.
    #[error("diagnostic preconditions violated: {0}")]
    Diagnostic(String),

    /// No ground-truth reference applies to this model.
    #[error("no oracle available: {0}")]
    OracleUnavailable(String),

    /// Quadrature is restricted to d <= 3.
    #[error("unsupported dimension {0} (quadrature oracle requires d <= 3)")]
    UnsupportedDimension(usize),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serialize(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, LogzError>;
