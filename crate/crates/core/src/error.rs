use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("multiplier set is empty")]
    EmptyGamma,

    #[error("multiplier {0} is smaller than 2")]
    GammaTooSmall(u64),

    #[error("multiplier {0} appears more than once")]
    DuplicateGamma(u64),

    #[error("{what} must be at least {min}, got {got}")]
    OutOfRange {
        what: &'static str,
        min: u64,
        got: u64,
    },

    #[error("allowed product set is empty")]
    EmptyAllowedSet,

    #[error("exhaustive enumeration needs {symbols}^{cells} assignments, limit is 2^{limit_log2}")]
    TooLarge {
        symbols: u32,
        cells: usize,
        limit_log2: u32,
    },

    #[error("elimination frontier needs {bits} state bits, limit is {limit}")]
    FrontierTooWide { bits: u32, limit: u32 },

    #[error("malformed transition matrix: {0}")]
    MalformedMatrix(String),

    #[error("transition matrix is {got}x{got} but the alphabet has {expected} symbols")]
    MatrixShape { expected: u32, got: usize },

    #[error("constraint system carries a transition matrix; use the coupled engine")]
    UnexpectedMatrix,

    #[error("constraint system has no transition matrix")]
    MissingMatrix,

    #[error("root {root} is divisible by {q}")]
    RootNotInComplement { root: u64, q: u64 },

    #[error("root {root} is too small for q = {q}: successive generations touch")]
    RootTooSmall { root: u64, q: u64 },

    #[error("{0} is divisible by 2 or 3")]
    NotCoprimeToSix(u64),

    #[error("unknown consecutive family ({family}) sub-case {sub}")]
    UnknownFamily { family: u8, sub: u8 },

    #[error("value overflow while {0}")]
    Overflow(&'static str),
}
