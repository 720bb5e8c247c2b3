use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("field degree {0} outside 1..=64")]
    DegreeOutOfRange(u32),
    #[error("reduction polynomial {poly:#x} does not have degree {m}")]
    PolynomialDegree { m: u32, poly: u128 },
    #[error("polynomial {poly:#x} is reducible over GF(2)")]
    ReduciblePolynomial { poly: u128 },
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("transform size {needed} exceeds supported order {max}")]
    TransformTooLarge { needed: usize, max: usize },
    #[error("invalid dimensions: {0}")]
    Dimensions(String),
    #[error("output length {ell} exceeds field degree {m}")]
    OutputTooWide { ell: usize, m: u32 },
    #[error("list size must be at least 1")]
    EmptyList,
    #[error("secret index must be drawn from a substream disjoint from seed sampling")]
    SharedIndexStream,
    #[error("value {value} outside {range}")]
    OutOfRange { value: f64, range: &'static str },
    #[error("enumeration of {0} seeds is too large for exact mode")]
    EnumerationTooLarge(u128),
    #[error("distinct inputs required")]
    IdenticalInputs,
    #[error("source has no mass")]
    EmptySource,
    #[error("malformed input: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
