//! Error type shared by every module in the crate.

use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Errors surfaced by the numeric kernel, the detectors, and the training
/// loops. Shape problems name both sides so the mismatch is diagnosable
/// without a debugger.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A matrix had the wrong dimensions for the operation.
    ShapeMismatch {
        context: &'static str,
        expected: (usize, usize),
        got: (usize, usize),
    },
    /// A vector had the wrong length for the operation.
    LengthMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },
    /// A feature value was not exactly 0.0 or 1.0.
    NonBinaryValue { row: usize, col: usize, value: f64 },
    /// A probability left the open interval (0, 1).
    ProbabilityOutOfRange { value: f64 },
    /// A hyperparameter or configuration field failed validation.
    InvalidParam { name: &'static str, reason: &'static str },
    /// An operation that needs at least one sample received none.
    EmptyInput { context: &'static str },
    /// Training data contained only one class.
    SingleClassData,
    /// A split would leave one side without samples of some class.
    DegenerateSplit { train: usize, test: usize },
    /// A backward pass was given a cache produced by a different network.
    CacheMismatch,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::ShapeMismatch {
                context,
                expected,
                got,
            } => write!(
                f,
                "{context}: expected {}x{}, got {}x{}",
                expected.0, expected.1, got.0, got.1
            ),
            Error::LengthMismatch {
                context,
                expected,
                got,
            } => write!(f, "{context}: expected length {expected}, got {got}"),
            Error::NonBinaryValue { row, col, value } => {
                write!(f, "non-binary feature value {value} at row {row}, column {col}")
            }
            Error::ProbabilityOutOfRange { value } => {
                write!(f, "probability {value} outside the open interval (0, 1)")
            }
            Error::InvalidParam { name, reason } => write!(f, "invalid {name}: {reason}"),
            Error::EmptyInput { context } => write!(f, "{context}: empty input"),
            Error::SingleClassData => write!(f, "training data contains a single class"),
            Error::DegenerateSplit { train, test } => write!(
                f,
                "degenerate split: {train} train / {test} test rows for some class"
            ),
            Error::CacheMismatch => write!(f, "forward cache does not match this network"),
        }
    }
}

impl core::error::Error for Error {}
