use std::fmt;
use std::io;
use std::path::Path;

use nsflow_core::analytics::AnalyticsError;
use nsflow_core::flowmap::StoreError;
use nsflow_core::ingest::IngestError;
use nsflow_core::ip2as::CacheError;
use nsflow_core::resolver::FixtureError;

/// Exit status contract: 0 success, 1 runtime failure, 2 bad path or
/// arguments, 3 dataset format error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Runtime = 1,
    Usage = 2,
    Format = 3,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn runtime(message: impl Into<String>) -> Self {
        CliError { kind: ErrorKind::Runtime, message: message.into() }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        CliError { kind: ErrorKind::Usage, message: message.into() }
    }

    pub fn format(message: impl Into<String>) -> Self {
        CliError { kind: ErrorKind::Format, message: message.into() }
    }

    pub fn exit_code(&self) -> i32 {
        self.kind as i32
    }

    /// A failed open: a missing or unreadable path is a usage error.
    pub fn open(path: &Path, err: io::Error) -> Self {
        match err.kind() {
            io::ErrorKind::NotFound | io::ErrorKind::PermissionDenied | io::ErrorKind::IsADirectory => {
                CliError::usage(format!("{}: {err}", path.display()))
            }
            _ => CliError::runtime(format!("{}: {err}", path.display())),
        }
    }

    pub fn ingest(path: &Path, err: IngestError) -> Self {
        match err {
            IngestError::Format(_) => CliError::format(format!("{}: {err}", path.display())),
            IngestError::Io(e) => CliError::open(path, e),
        }
    }

    pub fn fixture(path: &Path, err: FixtureError) -> Self {
        match err {
            FixtureError::Invalid { .. } => CliError::format(format!("{}: {err}", path.display())),
            FixtureError::Io(e) => CliError::open(path, e),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<io::Error> for CliError {
    fn from(err: io::Error) -> Self {
        CliError::runtime(err.to_string())
    }
}

impl From<StoreError> for CliError {
    fn from(err: StoreError) -> Self {
        match err {
            StoreError::NotFound(_) => CliError::usage(err.to_string()),
            _ => CliError::runtime(err.to_string()),
        }
    }
}

impl From<AnalyticsError> for CliError {
    fn from(err: AnalyticsError) -> Self {
        match err {
            AnalyticsError::ZeroK | AnalyticsError::Mismatch(_) | AnalyticsError::InvalidThreshold(_) => {
                CliError::usage(err.to_string())
            }
            _ => CliError::runtime(err.to_string()),
        }
    }
}

impl From<CacheError> for CliError {
    fn from(err: CacheError) -> Self {
        CliError::runtime(err.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(err: csv::Error) -> Self {
        CliError::runtime(err.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(err: serde_json::Error) -> Self {
        CliError::runtime(err.to_string())
    }
}
