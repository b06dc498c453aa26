use std::path::Path;

use dnls_core::DnlsError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Core(#[from] DnlsError),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io { path: path.display().to_string(), source }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Self::InvalidSpec(_) | Self::InvalidInput(_) | Self::Io { .. } => 2,
            Self::Core(DnlsError::MalformedTrajectory(_) | DnlsError::Csv(_) | DnlsError::Json(_)) => 2,
            Self::Core(_) => 1,
        }
    }
}
