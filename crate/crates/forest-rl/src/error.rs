//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid rectangle: min {min} > max {max} in dimension {dim}")]
    InvalidRectangle { dim: usize, min: f64, max: f64 },

    #[error("rectangle must have at least one dimension")]
    EmptyRectangle,

    #[error("split value {value} outside [{min}, {max}] in dimension {dim}")]
    SplitOutOfRange {
        dim: usize,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("dimension {dim} out of range for {dims}-dimensional input")]
    DimOutOfRange { dim: usize, dims: usize },

    #[error("projection rectangle is not contained in the tree domain")]
    ProjectionOutsideDomain,

    #[error("weights must be positive (got {0})")]
    NonPositiveWeight(f64),

    #[error("leaf budget must be at least 1")]
    ZeroLeafBudget,

    #[error("forest has no trees")]
    EmptyForest,

    #[error("training set is empty")]
    EmptyTrainingSet,

    #[error("training input {index} lies outside the declared domain")]
    InputOutsideDomain { index: usize },

    #[error("invalid learner parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value in {context}")]
    NonFinite { context: &'static str },

    #[error("{file}:{line}: parse error: {msg}")]
    Parse {
        file: String,
        line: usize,
        msg: String,
    },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("timing requires at least one call")]
    EmptyTiming,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
