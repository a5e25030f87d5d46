use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed report: {0}")]
    Report(String),
    #[error("no row with id {0} in the report")]
    MissingRow(usize),
    #[error(transparent)]
    Library(#[from] dyadica::Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::Report(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
