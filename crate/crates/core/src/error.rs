use thiserror::Error;

/// Errors raised across the operator, spectral, zeta and simulation layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("sparsity violation: a[({k},{l})][({i},{j})] = {value} must be zero because j != l")]
    SparsityViolation {
        k: u8,
        l: u8,
        i: u8,
        j: u8,
        value: String,
    },

    #[error("size cap exceeded: requested n = {n}, cap for {what} is {cap}")]
    SizeCapExceeded {
        what: &'static str,
        n: usize,
        cap: usize,
    },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("dense form unavailable for this global operator")]
    DenseUnavailable,

    #[error(
        "QR iteration did not converge for active block [{lo}, {hi}] after {iterations} iterations"
    )]
    NoConvergence {
        lo: usize,
        hi: usize,
        iterations: usize,
    },

    #[error("eigenpair residual {worst:e} exceeds tolerance {tol:e}")]
    ResidualTooLarge { worst: f64, tol: f64 },

    #[error("singular factor: 1 - lambda*u vanishes for lambda = {lambda}")]
    SingularFactor { lambda: String },

    #[error("parameter out of range: {0}")]
    ParamOutOfRange(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("no bracket: estimate never crosses threshold {threshold} on the grid")]
    NoBracket {
        threshold: f64,
        points: Vec<crate::dk::ScanPoint>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
