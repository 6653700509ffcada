use alloc::string::String;

/// Errors raised by the simulation core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("index {index} out of range for {n} spins")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("coupling matrix is not symmetric at ({i}, {j})")]
    Asymmetric { i: usize, j: usize },

    #[error("coupling ({i}, {j}) on the diagonal")]
    SelfLoop { i: usize, j: usize },

    #[error("coefficient {value} at ({i}, {j}) outside [-15, 15]")]
    CoefficientRange { i: usize, j: usize, value: i64 },

    #[error("duplicate edge ({i}, {j})")]
    DuplicateEdge { i: usize, j: usize },

    #[error("spin value {value} at index {index} is not -1 or +1")]
    InvalidSpin { index: usize, value: i8 },

    #[error("non-finite value: {0}")]
    NonFinite(&'static str),

    #[error("LFSR register must be non-zero")]
    ZeroLfsr,

    #[error("too many spins: {n} (limit {limit})")]
    TooManySpins { n: usize, limit: usize },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("schedule step from {from:e} s to {to:e} s spans more than one column dwell")]
    StepTooLong { from: f64, to: f64 },

    #[error("integration invariant violated at t = {t:e} s: {reason}")]
    Integration { t: f64, reason: String },

    #[error("empty input: {0}")]
    Empty(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
