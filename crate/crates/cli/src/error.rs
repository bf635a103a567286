//! CLI error categories mapped to process exit codes: 2 for configuration
//! problems, 3 for numeric failures, 4 for I/O failures.

use std::fmt;

#[derive(Debug)]
pub enum CliError {
    Parse(serde_json::Error),
    Validation { field: String, msg: String },
    Numeric(spectraldiff::Error),
    Io(std::io::Error),
}

impl CliError {
    pub fn validation(field: impl Into<String>, msg: impl Into<String>) -> Self {
        Self::Validation {
            field: field.into(),
            msg: msg.into(),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Parse(_) | Self::Validation { .. } => 2,
            Self::Numeric(_) => 3,
            Self::Io(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Parse(e) => write!(f, "config parse error: {e}"),
            Self::Validation { field, msg } => write!(f, "config error at `{field}`: {msg}"),
            Self::Numeric(e) => write!(f, "numeric failure: {e}"),
            Self::Io(e) => write!(f, "i/o failure: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<spectraldiff::Error> for CliError {
    fn from(e: spectraldiff::Error) -> Self {
        Self::Numeric(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e)
    }
}
