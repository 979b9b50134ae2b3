use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the mixed-norm library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid group assignment: {0}")]
    InvalidGroups(String),

    #[error("invalid exponent {0}: must be >= 1 or infinity")]
    InvalidExponent(f64),

    #[error("unsupported exponent for this operation: {0}")]
    UnsupportedExponent(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("zero input has no dual witness")]
    ZeroInput,

    #[error("invalid sparse matrix: {0}")]
    InvalidSparse(String),

    #[error("no sign change on [{lo}, {hi}]: g(lo) = {g_lo:e}, g(hi) = {g_hi:e}")]
    NoSignChange { lo: f64, hi: f64, g_lo: f64, g_hi: f64 },

    #[error("{what} did not converge in {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("gradient check failed: relative error {relative_error:e} exceeds {tolerance:e}")]
    GradientCheck { relative_error: f64, tolerance: f64 },

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{}: {message}", path.display())]
    Data { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
