//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Structural misconfiguration: mismatched layer sizes, invalid ranges.
    #[error("configuration error: {0}")]
    Config(String),

    /// Config file parse failure with the offending key and line.
    #[error("parse error at line {line}, key `{key}`: {msg}")]
    Parse { line: usize, key: String, msg: String },

    /// Input outside the operation's domain (negative mass, command out of range, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Vector/matrix dimension mismatch.
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    /// Integrator produced a non-finite state; the episode is aborted.
    #[error("simulation fault: {0}")]
    SimulationFault(String),

    /// Operation refused because a required precondition does not hold.
    #[error("refused: {0}")]
    Refused(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
