use std::fmt;
use std::process::ExitCode;

use tripgym::catalog::CatalogError;
use tripgym::dataset::DatasetError;

/// A failed command. The message already carries the machine code where one
/// exists (`UNSUPPORTED_COMPOSITION: ...`).
#[derive(Debug)]
pub struct CliError {
    pub kind: Kind,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Failed,
    Invalid,
    NotFound,
}

impl CliError {
    pub fn failed(message: impl fmt::Display) -> Self {
        Self { kind: Kind::Failed, message: message.to_string() }
    }

    pub fn invalid(message: impl fmt::Display) -> Self {
        Self { kind: Kind::Invalid, message: message.to_string() }
    }

    pub fn not_found(message: impl fmt::Display) -> Self {
        Self { kind: Kind::NotFound, message: message.to_string() }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self.kind {
            Kind::Failed => 1,
            Kind::Invalid => 3,
            Kind::NotFound => 4,
        })
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::NotFound(_) => CliError::not_found(e),
            DatasetError::Io { .. } => CliError::failed(e),
            _ => CliError::invalid(e),
        }
    }
}

impl From<CatalogError> for CliError {
    fn from(e: CatalogError) -> Self {
        CliError::invalid(e)
    }
}

pub type CliResult<T = ()> = Result<T, CliError>;
