use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A numerical quantity left the representable range.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    /// The requested run would exceed the configured step ceiling.
    #[error(
        "refusing to run: estimated {estimated_steps:.3e} integration steps exceeds the ceiling of {ceiling:.3e}"
    )]
    BudgetExceeded { estimated_steps: f64, ceiling: f64 },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
