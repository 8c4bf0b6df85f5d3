use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value violates its documented constraints.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Input data fails a structural requirement.
    #[error("invalid data: {0}")]
    Data(String),

    /// Two objects that must agree in dimension do not.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A numerical routine detected corruption (non-PD precision, leverage
    /// out of range, and the like).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// CSV content could not be parsed; `row` is 1-based including header.
    #[error("csv error in {path} at row {row}, column {column}: {message}")]
    Csv {
        path: String,
        row: usize,
        column: String,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
