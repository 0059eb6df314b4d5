//! Error type shared by every module of the crate.

use thiserror::Error;

/// Failures reported by model construction, solvers and decimation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A model parameter is outside its admissible range.
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: String,
    },

    /// A function was evaluated outside its domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A caller-side precondition does not hold.
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// The requested problem exceeds the dense solver budget.
    #[error("problem of dimension {dimension} exceeds the cap of {cap}")]
    Resource { dimension: usize, cap: usize },

    /// An eigenfunction extension hit a singular configuration.
    #[error("extension at lambda = {lambda} is singular near forbidden value {forbidden}")]
    Extension { lambda: f64, forbidden: f64 },

    /// A numerical routine failed to converge or produced a large residual.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// An internal bookkeeping identity failed (counts, multiplicities, oracle agreement).
    #[error("consistency check failed: {0}")]
    Consistency(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
