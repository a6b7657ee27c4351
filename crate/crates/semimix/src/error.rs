//! Error type shared across the crate.
//!
//! The variants split along lines callers actually branch on: bad input data,
//! a design too degenerate to solve, an estimate leaving the domain of a
//! downstream formula, accumulator overflow, configuration mistakes, and I/O.

use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Input data could not be used; `row` is the 1-based position in the
    /// offending file or observation sequence.
    #[error("ingestion error at row {row}: {message}")]
    Ingestion { row: usize, message: String },

    /// A moment accumulator left the finite range.
    #[error("numeric overflow while accumulating {monomial}")]
    NumericOverflow { monomial: &'static str },

    /// A least-squares system is (near-)singular. `condition` carries the
    /// offending condition number or variance so callers can report it.
    #[error("degenerate design: {what} (condition {condition:.3e})")]
    DegenerateDesign { what: String, condition: f64 },

    /// A plug-in formula was evaluated where it is undefined (vanishing
    /// denominator, zero mixing weight, ...).
    #[error("estimate outside domain: {0}")]
    OutsideDomain(String),

    /// Invalid configuration or arguments.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
