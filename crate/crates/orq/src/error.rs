use thiserror::Error;

/// Errors surfaced by build and query operations across the crate.
#[derive(Debug, Error, PartialEq, Eq, Clone)]
pub enum Error {
    #[error("value overflow: {0} does not fit in {1} bits")]
    ValueOverflow(u64, u32),
    #[error("invalid bit range [{0}, {1}] for width {2}")]
    InvalidBitRange(u32, u32, u32),
    #[error("index out of bounds: {0} >= {1}")]
    IndexOutOfBounds(usize, usize),
    #[error("alphabet too large for this index: {0}")]
    AlphabetTooLarge(u64),
    #[error("alphabet out of regime: width {0} exceeds {1}")]
    AlphabetOutOfRegime(u32, u32),
    #[error("invalid fanout: {0}")]
    InvalidFanout(usize),
    #[error("leaf out of bounds: {0}")]
    LeafOutOfBounds(u64),
    #[error("position out of bounds: {0}")]
    PositionOutOfBounds(usize),
    #[error("invalid range [{0}, {1}]")]
    InvalidRange(usize, usize),
    #[error("input not sorted at index {0}")]
    NotSorted(usize),
    #[error("duplicates not allowed at index {0}")]
    DuplicatesNotAllowed(usize),
    #[error("duplicate point ({0}, {1})")]
    DuplicatePoint(u64, u64),
    #[error("stream order violation: y {0} after y {1}")]
    StreamOrderViolation(u64, u64),
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
