use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Errors raised by estimators and data containers.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Two lengths that must agree do not.
    SizeMismatch { expected: usize, got: usize },
    /// A parameter is outside its admissible range.
    InvalidParameter(&'static str),
    /// A probability level outside the open unit interval.
    InvalidLevel(f64),
    /// A value that must be finite is NaN or infinite.
    NonFinite(&'static str),
    /// Not enough observations for the requested operation.
    TooFewSamples { needed: usize, got: usize },
    /// Every kernel weight vanished at the query point; widen the bandwidth.
    EmptyNeighborhood,
    /// A user-supplied function broke its documented contract.
    ContractViolation(&'static str),
    /// Fewer calibration scores than the conformal order statistic requires.
    InsufficientCalibration { index: usize, n_cal: usize },
    /// A truth oracle was requested for data that has none.
    Unavailable(&'static str),
    /// A linear system could not be factorized even after regularization.
    Singular,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::SizeMismatch { expected, got } => {
                write!(f, "size mismatch: expected {expected}, got {got}")
            }
            Error::InvalidParameter(what) => write!(f, "invalid parameter: {what}"),
            Error::InvalidLevel(a) => write!(f, "probability level {a} is outside (0, 1)"),
            Error::NonFinite(what) => write!(f, "non-finite value in {what}"),
            Error::TooFewSamples { needed, got } => {
                write!(f, "too few samples: need at least {needed}, got {got}")
            }
            Error::EmptyNeighborhood => {
                write!(f, "no training point has positive kernel mass; widen the bandwidth")
            }
            Error::ContractViolation(what) => write!(f, "contract violation: {what}"),
            Error::InsufficientCalibration { index, n_cal } => write!(
                f,
                "conformal order statistic {index} exceeds the {n_cal} calibration scores"
            ),
            Error::Unavailable(what) => write!(f, "unavailable: {what}"),
            Error::Singular => write!(f, "matrix is numerically singular"),
        }
    }
}

impl core::error::Error for Error {}
