use std::path::PathBuf;

use thiserror::Error;

/// Failures of a run or a verification, each with a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),

    #[error(transparent)]
    Core(#[from] expsieve_core::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("checksum mismatch: {}", .0.join(", "))]
    ChecksumMismatch(Vec<String>),

    #[error("missing artifact: {}", .0.join(", "))]
    MissingArtifact(Vec<String>),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use expsieve_core::Error as E;
        match self {
            CliError::Validation(_) => 2,
            CliError::Core(e) => match e {
                E::ResourceCap { .. } => 3,
                E::Precision { .. } => 4,
                E::Io(_) => 1,
                _ => 2,
            },
            CliError::Io { .. } => 1,
            CliError::ChecksumMismatch(_) => 5,
            CliError::MissingArtifact(_) => 6,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}

pub(crate) fn invalid(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("{field}: {msg}"))
}
