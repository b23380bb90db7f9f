//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("generator matrix is singular")]
    SingularGenerator,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("value {value} outside representable range [{min}, {max}]")]
    OutOfRange { value: i64, min: i64, max: i64 },

    #[error("digit {digit} outside the alphabet of base {base}")]
    DigitOutOfAlphabet { digit: i64, base: u32 },

    #[error("{p} is not prime")]
    NotPrime { p: u64 },

    #[error("prime {p} too small for {devices} devices at {levels} levels: need p > {required}")]
    PrimeTooSmall {
        p: u64,
        devices: u32,
        levels: u32,
        required: u64,
    },

    #[error("unknown message {message} for field size {prime}")]
    UnknownMessage { message: u64, prime: u64 },

    #[error("empty signal list")]
    EmptySignals,

    #[error("empty dataset")]
    EmptyDataset,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
