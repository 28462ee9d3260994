use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Check(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Check(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
        })
    }
}

/// Library errors come from invalid physical inputs.
impl From<qfi_radar::Error> for CliError {
    fn from(e: qfi_radar::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}
