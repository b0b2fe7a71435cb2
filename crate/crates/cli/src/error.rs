use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("solver failure: {0}")]
    Structural(String),

    #[error("{path}: {reason}")]
    Artifact { path: PathBuf, reason: String },

    #[error("verification failed")]
    VerificationFailed,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Structural(_) => 3,
            CliError::Artifact { .. } => 4,
            CliError::VerificationFailed => 1,
        }
    }

    pub fn missing(field: &str) -> Self {
        CliError::Validation(format!("`{field}` is required"))
    }

    pub fn artifact(path: impl Into<PathBuf>, reason: impl ToString) -> Self {
        CliError::Artifact {
            path: path.into(),
            reason: reason.to_string(),
        }
    }
}

impl From<secquant::Error> for CliError {
    fn from(e: secquant::Error) -> Self {
        if e.is_structural() {
            CliError::Structural(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
