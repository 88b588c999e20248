use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parabolic: derivative system singular (|1 - rho| = {distance:e})")]
    Parabolic { distance: f64 },

    #[error("superattracting orbit: multiplier vanishes")]
    Superattracting,

    #[error("points do not form a cycle under f_c (residual {residual:e})")]
    NotACycle { residual: f64 },

    #[error("closed form has a pole or branch point at c = {re}{im:+}i")]
    Pole { re: f64, im: f64 },

    #[error("escaped beyond representable range at step {step}")]
    Escaped { step: usize },

    #[error("critically periodic: F_{k}(c) vanishes")]
    CriticallyPeriodic { k: usize },

    #[error("incomplete orbit data for period {period}")]
    IncompleteOrbits { period: usize },

    #[error("missing orbit data for period {period}")]
    MissingPeriod { period: usize },

    #[error("empty hull")]
    EmptyHull,

    #[error("orbit tracking failed: {0}")]
    Tracking(String),

    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    pub(crate) fn io(path: &std::path::Path, err: impl std::fmt::Display) -> Self {
        Error::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }
}
