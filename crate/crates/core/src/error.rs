//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid tripod branch {0}: must be 0, 1 or 2")]
    InvalidBranch(u8),

    #[error("negative tripod radius {0}")]
    NegativeRadius(f64),

    #[error("point does not belong to the space: {0}")]
    SpaceMismatch(String),

    #[error("non-finite coordinate in point")]
    NonFiniteCoordinate,

    #[error("interpolation parameter {0} outside [0, 1]")]
    InterpolationParameter(f64),

    #[error("exponent {0} outside (1, +inf)")]
    InvalidExponent(f64),

    #[error("step {tau} outside the well-posedness window: tau^(p-1) must stay below {limit}")]
    StepOutsideWindow { tau: f64, limit: f64 },

    #[error("empty candidate set for the slope formula")]
    EmptyCandidates,

    #[error("inner minimization failed: {0}")]
    MinimizerDiverged(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("no closed-form flow registered for {0}")]
    UnknownOracle(String),

    #[error("transform hypotheses violated: {0}")]
    HypothesisViolation(String),

    #[error("zero speed at node {index} inside the moving window: cannot raise to negative exponent {alpha}")]
    ZeroSpeed { index: usize, alpha: f64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}
