use std::path::Path;
use std::process::ExitCode;

use fluxlattice::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("check failed: {0}")]
    CheckFailed(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// 2 for bad configuration, 3 for numerical failure, 1 for a failed
    /// verification.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) | Self::Io { .. } => 2,
            Self::CheckFailed(_) => 1,
            Self::Core(e) => match e {
                CoreError::TraceDrift { .. }
                | CoreError::GapClosure { .. }
                | CoreError::NonPhysicalState(_)
                | CoreError::IllConditioned(_)
                | CoreError::NoRoot { .. }
                | CoreError::NotDispersive(_) => 3,
                _ => 2,
            },
        }
    }
}

impl From<CliError> for ExitCode {
    fn from(e: CliError) -> Self {
        ExitCode::from(e.exit_code())
    }
}
