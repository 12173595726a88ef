use alloc::string::String;
use core::fmt;

/// Errors raised by the algorithmic core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Two inputs that must share a dimension do not.
    DimensionMismatch { expected: usize, found: usize },
    /// A parameter violates its documented domain.
    InvalidParameter(String),
    /// The KKT system stayed singular after regularization.
    SingularSystem { condition: f64 },
    /// A rollout matrix row count is not `N * N` for any `N`.
    NotPerfectSquare(usize),
    /// More rows were requested than exist.
    TooManySelected { requested: usize, available: usize },
    /// An operation needing at least one sample got none.
    Empty,
    /// Every candidate in a sampling search failed to evaluate.
    AllCandidatesFailed { failures: usize },
    /// Obstacle path length does not match the trajectory horizon.
    HorizonMismatch { expected: usize, found: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::SingularSystem { condition } => {
                write!(
                    f,
                    "singular linear system (condition estimate {condition:.3e})"
                )
            }
            Error::NotPerfectSquare(rows) => {
                write!(f, "row count {rows} is not a perfect square")
            }
            Error::TooManySelected {
                requested,
                available,
            } => write!(f, "cannot select {requested} rows out of {available}"),
            Error::Empty => f.write_str("empty input"),
            Error::AllCandidatesFailed { failures } => {
                write!(f, "all {failures} candidates failed")
            }
            Error::HorizonMismatch { expected, found } => {
                write!(
                    f,
                    "horizon mismatch: expected {expected} steps, found {found}"
                )
            }
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
