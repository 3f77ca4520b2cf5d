use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A configuration value failed validation. `key` names the offending
    /// key as it appears in the config file.
    #[error("invalid configuration key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error(transparent)]
    Fit(#[from] FitError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }
}

/// Reasons an exponential fit can be rejected. Every variant that gets far
/// enough to evaluate a model carries the residual RMS of its best attempt.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("curve does not oscillate; found {peaks} envelope peaks")]
    NotOscillating { peaks: usize },

    #[error("no significant decay: amplitude {amplitude:.3e} vs residual rms {residual_rms:.3e}")]
    NoSignificantDecay { amplitude: f64, residual_rms: f64 },

    #[error("decay time {t_decay:.4e} µs outside (0, {limit:.4e}) µs; residual rms {residual_rms:.3e}")]
    OutOfRange {
        t_decay: f64,
        limit: f64,
        residual_rms: f64,
    },

    #[error("non-finite samples in curve")]
    NonFinite,
}
