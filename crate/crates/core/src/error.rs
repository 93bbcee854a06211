use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid preference: {0}")]
    InvalidPreference(String),

    #[error("matrix is not symmetric positive definite")]
    NotPositiveDefinite,

    #[error("matrix is not symmetric")]
    NotSymmetric,

    #[error("too many constraints: {count} exceeds the enumeration bound {max}")]
    TooManyConstraints { count: usize, max: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("singular linear system")]
    Singular,

    #[error("enumeration size {size} exceeds cap {cap}")]
    EnumerationCap { size: u128, cap: u128 },
}

pub type Result<T> = core::result::Result<T, Error>;
