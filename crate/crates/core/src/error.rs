use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("alphabet mismatch: {left} vs {right}")]
    AlphabetMismatch { left: usize, right: usize },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("{what} has {size} cells, above the configured cap of {cap}")]
    SizeOverflow { what: &'static str, size: u128, cap: u128 },

    #[error("component index {index} out of range for {len} components")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("parameter out of domain: {0}")]
    ParameterDomain(String),

    #[error("wiretap kernel is not degraded")]
    NotDegraded,

    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),

    #[error("optimizer did not converge after {iterations} iterations (gap {gap:e})")]
    NonConvergence { iterations: usize, gap: f64 },

    #[error("invalid code: {0}")]
    InvalidCode(String),
}

pub type Result<T> = std::result::Result<T, Error>;
