use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid truncation: need at least one coefficient, got {0}")]
    InvalidTruncation(usize),

    #[error("unsupported weight {0}")]
    UnsupportedWeight(i64),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invariant violated at n = {n}: {msg}")]
    Invariant { n: usize, msg: String },

    #[error("{a}/{c} is not a reduced fraction")]
    NotACusp { a: i64, c: i64 },

    #[error("denominator {c} is not divisible by the level {level}")]
    WrongLevel { c: i64, level: u64 },

    #[error("insufficient coefficients: {required} needed, {available} available")]
    InsufficientCoefficients { required: usize, available: usize },

    #[error("argument out of range: {0}")]
    OutOfRange(String),

    #[error("functional-equation sign calibration failed: solved value {0}")]
    Calibration(f64),

    #[error("integer overflow in matrix arithmetic")]
    Overflow,

    #[error("degenerate leading coefficient")]
    DegenerateLeading,

    #[error("root iteration did not converge after {0} iterations")]
    NoConvergence(usize),

    #[error("quadrature did not converge: estimated error {0:e}")]
    Quadrature(f64),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
