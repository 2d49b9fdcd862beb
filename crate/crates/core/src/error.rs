use thiserror::Error;

/// Errors raised by the toolkit. All operations are pure, so every error is a
/// rejected input or a numerical check that did not hold.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("blade bitmask {bits:#b} does not fit in Cl({dim})")]
    InvalidBlade { bits: u32, dim: usize },

    #[error("algebra dimension {0} is outside the supported range 1..=16")]
    UnsupportedDimension(usize),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("expected {expected} coefficients, got {got}")]
    CoefficientCount { expected: usize, got: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("length mismatch in {what}: {left} vs {right}")]
    LengthMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },

    #[error("{what} index {index} out of range (len {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("multivector has non-zero coefficient {coeff} on grade-{grade} blade; not a para-vector")]
    NotParaVector { grade: u32, coeff: f64 },

    #[error("point {point:?} (with stencil margin {margin}) lies outside the field domain")]
    OutsideDomain { point: Vec<f64>, margin: f64 },

    #[error("field does not supply analytic {0}")]
    MissingDerivatives(&'static str),

    #[error("path carries no semimartingale decomposition")]
    MissingDecomposition,

    #[error("time {0} is not a grid time of the path")]
    NotGridTime(f64),

    #[error("field is not monogenic: residual {residual:e} exceeds tolerance {tol:e}")]
    NotMonogenic { residual: f64, tol: f64 },

    #[error("{term} term {value:e} exceeds tolerance {tol:e} for the monogenic reduction")]
    ReductionTermTooLarge {
        term: &'static str,
        value: f64,
        tol: f64,
    },

    #[error("start point {0:?} is not interior to the domain")]
    NotInterior(Vec<f64>),

    #[error("walk did not reach the boundary shell within {0} steps")]
    StepBudgetExceeded(usize),

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
