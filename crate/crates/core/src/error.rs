use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("state not normalized: squared norm {norm_sqr} (tolerance {tolerance})")]
    Unnormalized { norm_sqr: f64, tolerance: f64 },

    #[error("grid of {grid_points} points cannot resolve harmonics up to order {harmonic} (need at least {required})")]
    GridTooCoarse {
        grid_points: usize,
        harmonic: usize,
        required: usize,
    },

    #[error("truncation too small: {0}")]
    Truncation(String),

    #[error("invalid window [{lo}, {hi}]: {reason}")]
    InvalidWindow { lo: f64, hi: f64, reason: String },

    #[error("eigensolver failed to converge for block of size {0}")]
    NoConvergence(usize),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
