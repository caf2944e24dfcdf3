//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by distribution, classifier, shift-model and bound operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("binned densities have mismatched bin layouts")]
    MismatchedBins,

    #[error("dataset is missing one of the two classes")]
    MissingClass,

    #[error("induced density places mass where the source has none (bin {bin})")]
    UnsupportedShift { bin: usize },

    #[error("value {value} lies outside the operation's domain")]
    OutOfDomain { value: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("replicator fitness denominator is zero")]
    DegenerateFitness,

    #[error("feature vector has dimension {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("a computed quantity is not finite")]
    NonFinite,

    #[error("per-bin label conditional P(Y=+1|x) is unavailable")]
    MissingConditional,

    #[error("covariate-shift lower-bound assumptions are not satisfied")]
    AssumptionsUnmet,

    #[error("classifier accuracy is degenerate (zero denominator)")]
    DegenerateAccuracy,

    #[error("regularization strength exceeds the validity limit")]
    InvalidAlpha,

    #[error("parse error: {0}")]
    ParseError(String),

    #[error("CDF column is not monotone nondecreasing (row {row})")]
    NonMonotoneCdf { row: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("hypothesis grid is empty")]
    EmptyGrid,

    #[error("experiment configuration error: {0}")]
    ConfigError(String),

    #[error("bound invariant violated: {0}")]
    InvariantViolation(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
