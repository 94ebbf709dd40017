use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

/// Exit status for invalid configuration or preconditions.
pub const EXIT_INVALID: i32 = 2;
/// Exit status for runs that started but could not finish.
pub const EXIT_ABORTED: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read config {}: {source}", path.display())]
    ReadConfig { path: PathBuf, source: io::Error },

    #[error("invalid config {}: {source}", path.display())]
    ParseConfig {
        path: PathBuf,
        source: serde_json::Error,
    },

    #[error("invalid config: {0}")]
    Invalid(String),

    #[error(transparent)]
    Core(#[from] drm_core::Error),

    #[error("cannot write {}: {source}", path.display())]
    Write { path: PathBuf, source: io::Error },

    #[error("cannot write CSV: {0}")]
    Csv(#[from] csv::Error),

    #[error("{0}")]
    Aborted(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use drm_core::Error as E;
        match self {
            CliError::ReadConfig { .. } | CliError::ParseConfig { .. } | CliError::Invalid(_) => {
                EXIT_INVALID
            }
            CliError::Core(E::NonFiniteLoss { .. } | E::Io(_) | E::SingularSystem(_)) => {
                EXIT_ABORTED
            }
            CliError::Core(_) => EXIT_INVALID,
            CliError::Write { .. } | CliError::Csv(_) | CliError::Aborted(_) => EXIT_ABORTED,
        }
    }
}
