//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by tensor operations, the solver, and file IO.
#[derive(Debug, Error)]
pub enum Error {
    /// Operand shapes do not conform.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// Mode index outside `1..=N`.
    #[error("mode {mode} out of range for a {order}-way tensor")]
    ModeOutOfRange { mode: usize, order: usize },

    /// More than the supported number of modes, or a degenerate dimension.
    #[error("invalid dimensions: {0}")]
    DimOverflow(String),

    /// Solver input contains no observed entries.
    #[error("observation mask selects no entries")]
    EmptyObservations,

    /// A numerical step failed (singular system, non-finite iterate).
    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    /// File does not start with the expected magic bytes.
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    MagicMismatch { expected: [u8; 4], found: [u8; 4] },

    /// File ends before the declared payload.
    #[error("truncated file: {0}")]
    Truncated(String),

    /// Malformed header or unsupported variant of a file format.
    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
