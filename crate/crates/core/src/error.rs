use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("non-finite value in {what} at index {index}")]
    NonFinite { what: &'static str, index: usize },

    #[error("multiplier is not finite at |xi| = {xi}")]
    NonFiniteMultiplier { xi: f64 },

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: String,
    },

    #[error(
        "zero mode |c_0| = {c0:e} exceeds {limit:e}; data is outside the class representable in the homogeneous negative Sobolev norm"
    )]
    ZeroModeViolation { c0: f64, limit: f64 },

    #[error("solution became non-finite during the step starting at t = {t}")]
    Blowup { t: f64 },

    #[error("support of width {needed} does not fit in the box half-length {available}")]
    SupportOutsideBox { needed: f64, available: f64 },

    #[error("convolution wraps around the periodic box (value {value:e} near the boundary)")]
    Wraparound { value: f64 },

    #[error("insufficient data: {0}")]
    Insufficient(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("experiment aborted: {0}")]
    Aborted(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, value: f64, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            value,
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad user input rather than numerics.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidGrid(_)
                | Error::GridMismatch(_)
                | Error::InvalidParameter { .. }
                | Error::Config(_)
                | Error::Json(_)
                | Error::SupportOutsideBox { .. }
        )
    }
}
