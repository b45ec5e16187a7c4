use thiserror::Error;

/// Errors raised by the library. Simulation terminations (blow-up, dt
/// underflow) are not errors; they are recorded in [`crate::timestepper::Termination`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid size {n}: must be even and at least 8")]
    InvalidGrid { n: usize },

    #[error("fields live on different grids ({left} vs {right} nodes)")]
    GridMismatch { left: usize, right: usize },

    #[error("expected {expected} samples, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite value encountered in {context}")]
    NonFinite { context: &'static str },

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("fit window has {found} qualifying samples, need at least {needed}")]
    InsufficientWindow { found: usize, needed: usize },

    #[error("field is identically zero")]
    ZeroField,

    #[error("config key `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("{path}: {message}")]
    Io { path: String, message: String },

    #[error("density along the slope trace changes sign or vanishes at t = {t}")]
    SignChange { t: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit status for a failed command: 2 for bad input, 3 for I/O.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Io { .. } => 3,
            _ => 2,
        }
    }
}

pub(crate) fn io_error(path: &std::path::Path, e: impl std::fmt::Display) -> Error {
    Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
