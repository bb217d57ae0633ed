//! Error type shared by all modules.

use thiserror::Error;

/// Errors produced by model fitting, distribution numerics, design
/// calculations, and bootstrap resampling.
#[derive(Debug, Error)]
pub enum Error {
    /// A distribution or design parameter is outside its valid range.
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// A function argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The mean of the requested distribution does not exist.
    #[error("mean does not exist: requires nu2 > 2, got nu2 = {nu2}")]
    MeanUndefined { nu2: usize },

    /// The design matrix is rank deficient.
    #[error("design matrix is rank deficient (rank {rank} < {ncols} columns); \
             dependent columns: {columns:?}")]
    RankDeficient {
        rank: usize,
        ncols: usize,
        columns: Vec<String>,
    },

    /// Too few observations for the requested fit or design.
    #[error("insufficient data: n = {n} must exceed the parameter count r = {r}")]
    InsufficientData { n: usize, r: usize },

    /// The fitted residual variance is (numerically) zero, so F statistics
    /// and evidence values are undefined.
    #[error("degenerate variance: residual variance is zero (perfect fit)")]
    DegenerateVariance,

    /// Mismatched vector/matrix dimensions.
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// A covariance matrix is not symmetric positive definite.
    #[error("covariance matrix is not symmetric positive definite")]
    NotPositiveDefinite,

    /// A model comparison specification is malformed.
    #[error("invalid comparison spec: {0}")]
    InvalidSpec(String),

    /// A numerical routine failed to produce a finite result.
    #[error("numerical failure: {0}")]
    Numeric(String),

    /// Sample-size search hit the configured cap without satisfying the budget.
    #[error("sample-size search exhausted: no n <= {cap} satisfies the budget")]
    SearchExhausted { cap: usize },

    /// Root bracketing failed: no solution in the search interval.
    #[error("no solution: {0}")]
    NoSolution(String),

    /// A stratified-bootstrap cell is too small to resample.
    #[error("stratification error: cell {cell} has {count} observation(s); \
             at least 2 are required")]
    Stratification { cell: usize, count: usize },

    /// A simulation would exceed the configured refit budget.
    #[error("resource cap exceeded: {detail}")]
    ResourceCap { detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;
