use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("target outside the front half-plane (theta = {theta} rad, r = {r} m)")]
    OutsideRegion { theta: f64, r: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("signature has zero energy (beam null)")]
    DegenerateSignature,

    #[error("no valid point in the search window")]
    NoValidGridPoint,

    #[error("matrix `{0}` is not symmetric positive semi-definite")]
    NotPsd(&'static str),

    #[error("track lost after {0} consecutive gated-out CPIs")]
    TrackLost(usize),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}
