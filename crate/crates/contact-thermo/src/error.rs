use thiserror::Error;

use crate::dynamics::Trajectory;

pub type Result<T> = std::result::Result<T, TpsError>;

#[derive(Debug, Clone, Error)]
pub enum TpsError {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("unsupported dimension n = {n} (maximum {max})")]
    UnsupportedDimension { n: usize, max: usize },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("degenerate metric: eigenvalue {eigenvalue:e} within tolerance of zero")]
    DegenerateMetric { eigenvalue: f64 },
    #[error("gauge factor {omega:e} is numerically zero")]
    GaugeSingular { omega: f64 },
    #[error("legendre breakdown at {at:?}: {reason}")]
    LegendreBreakdown { at: Vec<f64>, reason: String },
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("trajectory diverged at t = {t} after {} samples", partial.len())]
    Divergence { t: f64, partial: Box<Trajectory> },
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("unphysical configuration: {0}")]
    Unphysical(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for TpsError {
    fn from(e: std::io::Error) -> Self {
        TpsError::Io(e.to_string())
    }
}
