use thiserror::Error;

/// Errors raised while building models, synthesizing gains or running scenarios.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("length mismatch for {what}: expected {expected}, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("gain synthesis failed: {0}")]
    Synthesis(String),

    #[error("stale driver gain: synthesized for lambda_D = {synthesized}, bundle weights carry lambda_D = {current}")]
    StaleGain { synthesized: f64, current: f64 },

    #[error("simulation diverged: non-finite state at step {step}")]
    Diverged { step: usize },

    #[error("trace invariant violated at step {step}: {reason}")]
    TraceInvariant { step: usize, reason: String },

    #[error("empty trace")]
    EmptyTrace,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

pub(crate) fn ensure_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::LengthMismatch {
            what,
            expected,
            got,
        })
    }
}
