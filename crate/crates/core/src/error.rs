use thiserror::Error;

/// Errors produced by the coding, repair and file-format layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported field width {0} (supported: 4, 8, 16)")]
    UnsupportedWidth(u32),

    #[error("zero has no multiplicative inverse")]
    ZeroInverse,

    #[error("0^0 is undefined")]
    ZeroToZeroPower,

    #[error("index {value} out of range (limit {limit})")]
    OutOfRange { value: usize, limit: usize },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("field of order {order} is too small: need at least {needed} elements")]
    FieldTooSmall { order: usize, needed: usize },

    #[error("code needs {symbols} symbols per codeword, above the limit of {limit}")]
    SizeGuard { symbols: usize, limit: usize },

    #[error("expected {expected} symbols, got {got}")]
    Length { expected: usize, got: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("expected {expected} unknown positions, got {got}")]
    UnknownCount { expected: usize, got: usize },

    #[error("evaluation points are not pairwise distinct and nonzero")]
    BadPoints,

    #[error("linear system is singular")]
    Singular,

    #[error("invalid repair plan: {0}")]
    Plan(String),

    #[error("protocol violation: {0}")]
    Protocol(String),

    #[error("cluster lost: {failed} failed nodes exceed the tolerance of {tolerance}")]
    ClusterLost { failed: usize, tolerance: usize },

    #[error("need {needed} live nodes, only {live} available")]
    NotEnoughLive { needed: usize, live: usize },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
