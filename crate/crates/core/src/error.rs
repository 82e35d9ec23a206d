//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point {index} has dimension {got}, expected {expected}")]
    DimensionMismatch {
        index: usize,
        expected: usize,
        got: usize,
    },

    #[error("negative weight at atom {0}")]
    NegativeWeight(usize),

    #[error("non-finite {what} at index {index}")]
    NonFinite { what: &'static str, index: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("mass mismatch: {a} vs {b}")]
    MassMismatch { a: f64, b: f64 },

    #[error("size mismatch: {n} vs {m}")]
    SizeMismatch { n: usize, m: usize },

    #[error("operation requires uniform weights of equal size")]
    NonUniformWeights,

    #[error("projector incompatible with the input: {0}")]
    UnsupportedProjector(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate direction (zero vector before normalization)")]
    DegenerateDirection,

    #[error("direction-set provenance mismatch: {a:#x} vs {b:#x}")]
    ProvenanceMismatch { a: u64, b: u64 },

    #[error("supports overlap; partial assignment requires disjoint supports")]
    OverlappingSupports,

    #[error("spline fit needs at least 2 distinct atoms")]
    TooFewDistinctAtoms,

    #[error("spline knots must be strictly increasing in t and x")]
    NonIncreasingKnots,

    #[error("requested mass {s} outside (0, {max}]")]
    MassOutOfRange { s: f64, max: f64 },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("corrupt sketch data: {0}")]
    CorruptSketch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
