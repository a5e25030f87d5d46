use thiserror::Error;

/// Errors produced by the dyadica library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("grid depth {0} outside supported range 1..={max}", max = crate::dyadic::MAX_DEPTH)]
    DepthOutOfRange(u32),

    #[error("interval (level {level}, position {position}) is not in a depth-{depth} grid")]
    IntervalOutsideGrid { level: u32, position: usize, depth: u32 },

    #[error("interval (level {level}, position {position}) is a leaf; no children to compare")]
    LeafInterval { level: u32, position: usize },

    #[error("grid mismatch: expected depth {expected}, found depth {found}")]
    GridMismatch { expected: u32, found: u32 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("weight has non-positive mass on a child of interval (level {level}, position {position})")]
    DegenerateMass { level: u32, position: usize },

    #[error("non-finite value at index {0}")]
    NonFinite(usize),

    #[error("negative entry {value} at index {index}")]
    NegativeEntry { index: usize, value: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operator `{0}` has no matrix representation")]
    Unsupported(&'static str),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
