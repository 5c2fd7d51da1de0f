use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum KuramotoError {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("dimension mismatch: {what} has length {found}, expected {expected}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("matrix is not symmetric (max |a_ij - a_ji| = {0:e})")]
    NotSymmetric(f64),

    #[error("graph is disconnected (lambda2 = {lambda2:e} is numerically zero)")]
    Disconnected { lambda2: f64 },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite state encountered at t = {t}")]
    NonFinite { t: f64 },

    #[error("bracket invalid: {0}")]
    InvalidBracket(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for KuramotoError {
    fn from(e: std::io::Error) -> Self {
        KuramotoError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, KuramotoError>;

pub(crate) fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(KuramotoError::DimensionMismatch {
            what,
            expected,
            found,
        })
    }
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> KuramotoError {
    KuramotoError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
