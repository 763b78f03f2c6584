use thiserror::Error;

/// Errors raised anywhere in the laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SceError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("pressure exponent {exponent:.3e} exceeds cap {cap}")]
    ExponentOverflow { exponent: f64, cap: f64 },

    #[error("mass operator solve did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    MassSolve { iterations: usize, residual: f64 },

    #[error("transport step rejected: min density {min_rho:.3e} below floor {floor:.3e}")]
    StepRejected { min_rho: f64, floor: f64 },

    #[error("time step fell below h_min = {h_min:.3e} at t = {t:.6}")]
    StepCascade { h_min: f64, t: f64 },

    #[error("non-finite value detected in {0}")]
    NonFinite(String),

    #[error("statistics refused: {0}")]
    Statistics(String),

    #[error("path law error: {0}")]
    PathLaw(String),

    #[error("io error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl From<std::io::Error> for SceError {
    fn from(e: std::io::Error) -> Self {
        SceError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, SceError>;
