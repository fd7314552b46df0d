use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("matrix is not positive definite: smallest eigenvalue {min_eigenvalue:e} <= tolerance {tolerance:e}")]
    NotPositiveDefinite { min_eigenvalue: f64, tolerance: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("family {0} has no compound-Gaussian texture representation")]
    NotCompoundGaussian(String),

    #[error("moment of order {order} is infinite for {family}")]
    InfiniteMoment { family: String, order: u32 },

    #[error("insufficient data: {n} samples in dimension {m}")]
    InsufficientData { n: usize, m: usize },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("iterate lost positive definiteness at iteration {iteration} (smallest eigenvalue {min_eigenvalue:e})")]
    LostPositiveDefiniteness { iteration: usize, min_eigenvalue: f64 },

    #[error("root not bracketed: {0}")]
    RootNotBracketed(String),

    #[error("quadrature did not converge: estimate {value:e}, error {error:e}")]
    Quadrature { value: f64, error: f64 },

    #[error("{count} zero-norm samples are not allowed for this estimator")]
    ZeroSamples { count: usize },

    #[error("noncircularity coefficient kappa[{index}] = {kappa} is outside [0, 1]")]
    InfeasibleNoncircular { index: usize, kappa: f64 },

    #[error("Fisher information matrix is singular (null direction {null_direction:?})")]
    SingularFim { null_direction: Vec<f64> },

    #[error("jacobian check failed for parameter {param}: relative error {rel_error:e}")]
    JacobianMismatch { param: usize, rel_error: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
