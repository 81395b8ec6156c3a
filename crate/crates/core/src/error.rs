use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite propagator entries at time index {step}")]
    NonFinite { step: usize },

    #[error("fundamental matrix singular at time index {step}")]
    SingularFundamental { step: usize },

    #[error("frequency quadrature did not converge (relative change {change:e} after {panels} panels)")]
    QuadratureNotConverged { change: f64, panels: usize },

    #[error("covariance at t = {time} violates {what}: {value:e}")]
    Inadmissible { time: f64, what: &'static str, value: f64 },

    #[error("waveform infeasible: {0}")]
    InfeasibleWaveform(String),

    #[error("objective window invalid: {0}")]
    InvalidWindow(String),

    #[error("all {0} optimizer starts were infeasible or non-finite")]
    AllStartsFailed(usize),

    #[error("composite coupling spans overlap: phase one ends at {cool_end}, phase two starts at {maintain_start}")]
    OverlappingSpans { cool_end: f64, maintain_start: f64 },

    #[error("scenario ({0}) reuses a coupling that was not supplied")]
    MissingReuseSource(&'static str),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures caused by the numerics rather than the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonFinite { .. }
                | Error::SingularFundamental { .. }
                | Error::QuadratureNotConverged { .. }
                | Error::Inadmissible { .. }
                | Error::AllStartsFailed(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
