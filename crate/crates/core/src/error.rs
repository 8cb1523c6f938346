use thiserror::Error;

/// Errors raised by the moment, optimization, power, simulation and I/O routines.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Two inputs that must agree in length do not.
    #[error("length mismatch: {what} has length {got}, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },

    /// The numerical minimizer hit its iteration cap.
    #[error(
        "minimizer did not converge after {iterations} iterations (projected gradient norm {grad_norm:e})"
    )]
    NotConverged {
        iterations: usize,
        grad_norm: f64,
        last_iterate: Vec<f64>,
    },

    /// A row of a sample matrix has zero Euclidean norm.
    #[error("row {0} has zero norm")]
    ZeroNormRow(usize),

    #[error("ragged row at line {line}: expected {expected} fields, found {found}")]
    RaggedRow {
        line: u64,
        expected: usize,
        found: usize,
    },

    #[error("non-numeric cell {value:?} at line {line}, column {column}")]
    NonNumeric {
        line: u64,
        column: usize,
        value: String,
    },

    #[error("empty input: {0}")]
    Empty(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
