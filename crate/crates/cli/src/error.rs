//! CLI failures and their exit codes.

use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Exit code for a failed validation check.
pub const EXIT_VALIDATION: u8 = 1;
/// Exit code for an invalid configuration.
pub const EXIT_CONFIG: u8 = 2;
/// Exit code for a runtime or numerical failure.
pub const EXIT_RUNTIME: u8 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    /// A configuration key is missing, malformed or out of range.
    #[error("invalid configuration `{key}`: {reason}")]
    Config { key: String, reason: String },

    /// Writing an output file failed.
    #[error("cannot write {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    /// A solver stage failed.
    #[error(transparent)]
    Numerical(#[from] wgscatter::Error),

    /// Some sweep points failed; the others were written.
    #[error("{failed} of {total} points failed")]
    PointsFailed { failed: usize, total: usize },

    /// At least one validation check failed.
    #[error("{0} validation check(s) failed")]
    ValidationFailed(usize),
}

impl CliError {
    pub fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Self::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config { .. } => EXIT_CONFIG,
            Self::ValidationFailed(_) => EXIT_VALIDATION,
            Self::Io { .. } | Self::Numerical(_) | Self::PointsFailed { .. } => EXIT_RUNTIME,
        }
    }
}

/// Maps parameter and lattice errors raised while resolving a configuration
/// onto the key that caused them.
pub fn from_config_check(e: wgscatter::Error) -> CliError {
    match e {
        wgscatter::Error::InvalidParameter { name, reason } => CliError::config(name, reason),
        wgscatter::Error::LatticeMismatch(reason) => CliError::config("dt", reason),
        other => CliError::Numerical(other),
    }
}
