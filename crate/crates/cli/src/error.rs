use std::io;
use std::path::PathBuf;

use bidmatch_core::query::{ParseError, QueryError};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags, malformed query text or a query that does not fit the store.
    #[error("{0}")]
    Usage(String),
    #[error("{}:{line}: {message}", path.display())]
    Format { path: PathBuf, line: usize, message: String },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }

    pub fn data(e: impl std::fmt::Display) -> CliError {
        CliError::Data(e.to_string())
    }
}

impl From<ParseError> for CliError {
    fn from(e: ParseError) -> Self {
        CliError::Usage(format!("query: {e}"))
    }
}

impl From<QueryError> for CliError {
    fn from(e: QueryError) -> Self {
        CliError::Usage(format!("query: {e}"))
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
