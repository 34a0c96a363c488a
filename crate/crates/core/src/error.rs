use thiserror::Error;

use crate::noise::SpectrumViolation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("grid of {points} points cannot represent {modes} modes (need at least {})", 2 * modes + 1)]
    GridTooSmall { points: usize, modes: usize },

    #[error("time must be nonnegative and finite, got {0}")]
    InvalidTime(f64),

    #[error("invalid drift polynomial: {0}")]
    InvalidPolynomial(String),

    #[error("noise spectrum violates its bounds: {0}")]
    Spectrum(SpectrumViolation),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("trajectory aborted at t = {time}: norm {norm:e} exceeds blow-up guard {guard:e}; reduce the time step")]
    BlowUp { time: f64, norm: f64, guard: f64 },

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("kernel does not have a unique stationary distribution")]
    NonUniqueStationary,

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
