use alloc::string::String;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SccError {
    #[error("empty input")]
    EmptyInput,
    #[error("invalid dimension {requested} for ambient dimension {ambient}")]
    InvalidDimension { requested: usize, ambient: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("expected a tuple of {expected} points, got {found}")]
    TupleSize { expected: usize, found: usize },
    #[error("sigma^2 must be positive and finite, got {0}")]
    NonPositiveSigma(f64),
    #[error("need at least {required} points, got {found}")]
    TooFewPoints { required: usize, found: usize },
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("label {label} at index {index} is out of range for {k} clusters")]
    LabelOutOfRange { index: usize, label: usize, k: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("invalid sample set: {0}")]
    InvalidSamples(String),
    #[error("histogram bin edges must be strictly ascending and cover [0, 100]")]
    InvalidBinEdges,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),
    #[error("internal error: {0}")]
    Internal(String),
}
