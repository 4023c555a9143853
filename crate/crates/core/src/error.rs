use thiserror::Error;

/// Failures reported by the spectral solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum RabiError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("x = {x} lies within {distance:e} of the pole at {pole} (exclusion radius {radius:e})")]
    Pole {
        x: f64,
        pole: f64,
        distance: f64,
        radius: f64,
    },

    #[error("coupling g = 0 is singular for the G-function route; use the closed form or the oracle")]
    SingularCoupling,

    #[error("{what} did not converge after {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },

    #[error("near-zero denominator at depth {depth} in {what}")]
    NearZeroDenominator { what: &'static str, depth: usize },

    #[error("sample z = {z} lies outside the joint convergence disc |z| < {radius}")]
    OutsideDisc { z: f64, radius: f64 },

    #[error("matrix dimension {0} exceeds the dense-storage limit")]
    DimensionOverflow(usize),

    #[error("at g = {g}: {source}")]
    AtCoupling { g: f64, source: Box<RabiError> },

    #[error("unsupported request: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, RabiError>;
