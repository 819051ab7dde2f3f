//! Crate-wide error type. Variants mirror the failure modes of the public
//! operations; library code never panics on bad user input.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// The requested field order has two distinct prime factors.
    NotPrimePower(u32),
    /// A parameter is outside the supported range (message says which).
    Unsupported(String),
    DivisionByZero,
    /// Field elements from two different field specs were combined.
    SpecMismatch,
    InvalidRepr { repr: u32, q: u32 },
    /// Points or flats from different ambient spaces were combined.
    AmbientMismatch,
    /// The zero vector does not name a projective point.
    ZeroVector,
    DimOutOfRange { dim: i32, ambient: i32 },
    /// `class_rep` was asked for a point inside the quotient flat.
    PointInFlat(u32),
    /// A factor's point set is empty.
    EmptyFactor,
    /// Predicted output size exceeds the hard cap.
    TooLarge { predicted: u128, cap: u128 },
    /// Exact enumeration would visit more tuples than the cap.
    TooLargeForExact { total: u128, cap: u128 },
    WrongArity { expected: usize, got: usize },
    NotAPartition(String),
    BadDims(String),
    /// `refine_to_minimal` was asked to refine an already dominated pattern.
    AlreadyDominated,
    /// The lemma hypothesis needs a larger field.
    QTooSmall(u32),
    NotGeneralPosition,
    BadQueryDim { dim: i32, expected: i32 },
    /// No instance is consistent with the decision trace.
    InconsistentTrace,
    Overflow,
    Io(String),
    Parse(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NotPrimePower(q) => write!(f, "{q} is not a prime power"),
            Error::Unsupported(msg) => write!(f, "unsupported: {msg}"),
            Error::DivisionByZero => write!(f, "division by zero"),
            Error::SpecMismatch => write!(f, "field spec mismatch"),
            Error::InvalidRepr { repr, q } => {
                write!(f, "element repr {repr} out of range for GF({q})")
            }
            Error::AmbientMismatch => write!(f, "ambient space mismatch"),
            Error::ZeroVector => write!(f, "the zero vector is not a projective point"),
            Error::DimOutOfRange { dim, ambient } => {
                write!(f, "dimension {dim} out of range for ambient dimension {ambient}")
            }
            Error::PointInFlat(p) => write!(f, "point {p} lies inside the flat"),
            Error::EmptyFactor => write!(f, "factor has an empty point set"),
            Error::TooLarge { predicted, cap } => {
                write!(f, "predicted size {predicted} exceeds cap {cap}")
            }
            Error::TooLargeForExact { total, cap } => {
                write!(f, "exact enumeration of {total} tuples exceeds cap {cap}")
            }
            Error::WrongArity { expected, got } => {
                write!(f, "expected arity {expected}, got {got}")
            }
            Error::NotAPartition(msg) => write!(f, "not a partition: {msg}"),
            Error::BadDims(msg) => write!(f, "bad dimensions: {msg}"),
            Error::AlreadyDominated => write!(f, "dimension pattern is already dominated"),
            Error::QTooSmall(q) => write!(f, "q = {q} is below the lemma hypothesis"),
            Error::NotGeneralPosition => write!(f, "lines are not in general position"),
            Error::BadQueryDim { dim, expected } => {
                write!(f, "query flat has dimension {dim}, expected {expected}")
            }
            Error::InconsistentTrace => write!(f, "decision trace matches no instance"),
            Error::Overflow => write!(f, "integer overflow in counting formula"),
            Error::Io(msg) => write!(f, "io error: {msg}"),
            Error::Parse(msg) => write!(f, "parse error: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
