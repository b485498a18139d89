use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid variety: {0}")]
    InvalidVariety(String),

    #[error("level must be nonzero")]
    ZeroLevel,

    #[error("point is not on the level set f(x) = {level}")]
    NotOnLevel { level: i64 },

    #[error("no real {degree}-th root of level {level}")]
    NoRealRoot { level: i64, degree: u32 },

    #[error("zero vector has no norm or height")]
    ZeroVector,

    #[error("invalid place set: {0}")]
    InvalidPlaces(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("p-adic count did not stabilize by k = {k_max} (p = {p})")]
    Unstabilized { p: u64, k_max: u32 },

    #[error("work bound exceeded: {0}")]
    TooLarge(String),

    #[error("integer overflow in exact arithmetic")]
    Overflow,

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
