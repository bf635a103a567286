//! Crate-wide error type.
//!
//! Diagnostic magnitudes are reported as `f64` regardless of the working
//! scalar type.

/// Errors raised by constructors and solvers.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("negative entry {value:e} at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("row {row} sums to {sum}, not 1")]
    RowSumViolation { row: usize, sum: f64 },

    #[error("index {index} out of range for {len} states")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("generator list must not be empty")]
    EmptyList,

    #[error("axis {index} has a non-finite component")]
    NonFiniteAxis { index: usize },

    #[error("matrix is not Hermitian (max deviation {max_dev:e})")]
    NotHermitian { max_dev: f64 },

    #[error("resolvent for state {state} is near-singular (condition {condition:e}); reduce the step size")]
    SingularResolvent { state: usize, condition: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("nonzero free block supplied for acausal index pair ({i}, {j})")]
    AcausalInput { i: usize, j: usize },

    #[error("free block at ({i}, {i}) is not the identity")]
    NonIdentityDiagonal { i: usize },

    #[error("dense Dyson system is singular; reduce the step size")]
    SingularSystem,

    #[error("expected vector of length {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("density matrix has eigenvalue {eigenvalue:e} below the physicality guard")]
    NonPhysicalState { eigenvalue: f64 },

    #[error("reference sigma is zero at interior time index {time_index}, component {component}")]
    ZeroSigma { time_index: usize, component: usize },

    #[error("time grids do not align: {0}")]
    GridMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
