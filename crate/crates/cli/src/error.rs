use std::path::Path;
use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad arguments, unreadable files, schema violations, invalid configs.
    #[error("{0}")]
    Input(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("internal error: {0}")]
    Internal(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Input(_) => ExitCode::from(2),
            CliError::InsufficientData(_) => ExitCode::from(3),
            CliError::Internal(_) => ExitCode::from(1),
        }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Input(format!("{}: {e}", path.display()))
    }
}

impl From<fusetrack::Error> for CliError {
    fn from(e: fusetrack::Error) -> Self {
        use fusetrack::Error as E;
        match e {
            e if e.is_insufficient_data() => CliError::InsufficientData(e.to_string()),
            E::Degenerate { .. } | E::NonConvergence { .. } => CliError::Internal(e.to_string()),
            e => CliError::Input(e.to_string()),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Internal(e.to_string())
    }
}
