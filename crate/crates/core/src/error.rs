use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("malformed format string {text:?}: {reason}")]
    MalformedFormat { text: String, reason: String },

    #[error("format {dims:?} has order {order} after dropping singleton modes; at least 3 modes are required")]
    OrderTooSmall { dims: Vec<usize>, order: usize },

    #[error(
        "format {0:?} is not canonical (need every dim >= 2, nondecreasing, at least 3 modes)"
    )]
    NotCanonical(Vec<usize>),

    #[error("format {0:?} is too large: entry count overflows")]
    Overflow(Vec<usize>),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("mode {mode} out of range for a tensor of order {order}")]
    ModeOutOfRange { mode: usize, order: usize },

    #[error("support size {target} outside [{min}, {max}]")]
    SupportSize {
        target: usize,
        min: usize,
        max: usize,
    },

    #[error("format {dims:?} is not perfect: q = {q}, need q <= {largest} <= {product_rest}")]
    NotPerfect {
        dims: Vec<usize>,
        q: u64,
        largest: usize,
        product_rest: u64,
    },

    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("max_r = {max_r} is below the lower rank bound {lower}")]
    MaxRankBelowBound { max_r: usize, lower: u64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed tensor dump: {0}")]
    Dump(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
