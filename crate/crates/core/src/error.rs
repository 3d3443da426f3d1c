//! Error type shared by every solver stage.

use thiserror::Error;

/// Failures reported by configuration checks and numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A physical or lattice parameter is out of range.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// The lattice is incompatible with the geometry (e.g. dt does not divide 2a).
    #[error("lattice incompatible with geometry: {0}")]
    LatticeMismatch(String),

    /// A requested time lies outside the stored history.
    #[error("time {t} outside stored range [{t_min}, {t_max}]")]
    OutOfRange { t: f64, t_min: f64, t_max: f64 },

    /// A series was truncated before all active terms were included.
    #[error("series truncated: need at least {needed} terms, got {given}")]
    Truncated { needed: usize, given: usize },

    /// An intermediate quantity overflowed double precision.
    #[error("overflow in {0}")]
    Overflow(&'static str),

    /// A matrix inversion or rate division hit a singular point.
    #[error("singular {what} at t = {t}")]
    Singular { what: &'static str, t: f64 },

    /// Every sample of a rate trajectory was singular.
    #[error("all samples singular")]
    AllSingular,

    /// A qubit state failed the density-matrix checks.
    #[error("invalid state: {0}")]
    InvalidState(String),

    /// Field history required by the operation was not retained.
    #[error("field history not retained; rerun with history enabled")]
    HistoryNotStored,

    /// Residual excitation is too large for an asymptotic quantity.
    #[error("qubit population {p_e:.3e} at t_max exceeds {limit:.1e}")]
    InsufficientDecay { p_e: f64, limit: f64 },
}

/// Convenience alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
