//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// CSV schema problems: missing columns, duplicate roles.
    #[error("schema error: {0}")]
    Schema(String),

    /// Malformed or contract-violating data values.
    #[error("data error: {0}")]
    Data(String),

    /// Invalid configuration values.
    #[error("config error: {0}")]
    Config(String),

    /// Dimension or length mismatch.
    #[error("shape error: {0}")]
    Shape(String),

    /// Training produced a non-finite value or failed to reduce the loss.
    #[error("training diverged at epoch {epoch}: {message}")]
    Divergence { epoch: usize, message: String },

    /// Empirical PPV requested at a threshold that selects no rows.
    #[error("undefined PPV: {0}")]
    UndefinedPpv(String),

    /// PPV matching target below the reachable range of a group.
    #[error("unreachable PPV target: {0}")]
    UnreachableTarget(String),

    /// A group needed for calibration has no rows.
    #[error("calibration input error: {0}")]
    CalibrationInput(String),

    /// The threshold search cannot start (no feasible anchor threshold).
    #[error("calibration infeasible: {0}")]
    CalibrationInfeasible(String),

    /// The closed-form fair solution does not exist for this model.
    #[error("oracle infeasible: {0}")]
    OracleInfeasible(String),

    /// Argument outside a function's mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Statistical test with no usable variation.
    #[error("degenerate test: {0}")]
    DegenerateTest(String),

    /// Lookup of a group id absent from a threshold set or model.
    #[error("unknown group {0}")]
    UnknownGroup(usize),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}
