use thiserror::Error;

/// Errors raised by the solver, the flow evaluators and the diagnostics.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum WaveError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("near-stagnation: |dZ/dzeta| = {magnitude:.3e} below threshold {threshold:.3e}")]
    NearStagnation { magnitude: f64, threshold: f64 },

    #[error("stagnation detected: min(u - c) = {min_relative_speed:.3e} below {threshold:.3e}")]
    Stagnation {
        min_relative_speed: f64,
        threshold: f64,
    },

    #[error("Newton iteration failed to converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("continuation failed at height {height} m: {source}")]
    Continuation {
        height: f64,
        #[source]
        source: Box<WaveError>,
    },

    #[error("exponent s = {0} is outside the supported range")]
    UnsupportedExponent(f64),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("map inversion failed at ({x}, {z}): {reason}")]
    Inversion { x: f64, z: f64, reason: String },

    #[error("integrator failure at t = {t:.6e} (step {step:.3e}): {reason}")]
    Integrator { t: f64, step: f64, reason: String },

    #[error("io error: {0}")]
    Io(String),

    #[error("format error: {0}")]
    Format(String),
}

impl From<std::io::Error> for WaveError {
    fn from(e: std::io::Error) -> Self {
        WaveError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for WaveError {
    fn from(e: serde_json::Error) -> Self {
        WaveError::Format(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, WaveError>;
