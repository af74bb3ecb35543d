use thiserror::Error;

/// Errors shared across the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("failed to converge: {0}")]
    NoConvergence(String),

    #[error("ill-conditioned problem: {0}")]
    Conditioning(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("input must have zero mean (|mean| = {mean:.3e}, scale = {scale:.3e})")]
    NonZeroMean { mean: f64, scale: f64 },

    #[error("time values must be strictly increasing (t = {t}, last = {last})")]
    NonMonotoneTime { t: f64, last: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("Newton iteration failed at step {step}: residual {residual:.3e} after {iters} iterations")]
    NewtonDiverged {
        step: usize,
        residual: f64,
        iters: usize,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
