use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] nfmcc_core::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("no cluster of size {lo}-{hi} after {attempts} draws")]
    BinExhausted { lo: usize, hi: usize, attempts: usize },
    #[error("{0}")]
    Usage(String),
}

impl Error {
    /// Problems with the invocation or its input files, as opposed to
    /// failures of the computation itself.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::Io { .. } | Error::Json { .. } | Error::Usage(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
