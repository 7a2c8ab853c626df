use std::fmt;
use std::path::Path;

use raformer_core::Error;

/// Stable process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Ok = 0,
    Io = 2,
    Config = 3,
    Alignment = 4,
    Schema = 5,
}

#[derive(Debug)]
pub struct CliError {
    pub code: ExitCode,
    pub message: String,
}

impl CliError {
    pub fn new(code: ExitCode, message: impl Into<String>) -> Self {
        CliError {
            code,
            message: message.into(),
        }
    }

    pub fn io(path: &Path, err: impl fmt::Display) -> Self {
        CliError::new(ExitCode::Io, format!("{}: {err}", path.display()))
    }

    pub fn config(message: impl Into<String>) -> Self {
        CliError::new(ExitCode::Config, message)
    }

    pub fn alignment(message: impl Into<String>) -> Self {
        CliError::new(ExitCode::Alignment, message)
    }

    pub fn schema(message: impl Into<String>) -> Self {
        CliError::new(ExitCode::Schema, message)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        let code = match err {
            Error::Io { .. } | Error::Format { .. } => ExitCode::Io,
            Error::Config(_)
            | Error::Argument(_)
            | Error::Dimension(_)
            | Error::Parse { .. }
            | Error::Validation(_)
            | Error::DegenerateMask(_) => ExitCode::Config,
        };
        CliError::new(code, err.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
