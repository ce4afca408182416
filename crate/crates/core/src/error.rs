use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the clustering library.
#[derive(Debug, Error)]
pub enum Error {
    /// Input data is malformed or violates a dataset invariant.
    #[error("data error: {0}")]
    Data(String),

    /// A caller-supplied parameter is out of range.
    #[error("usage error: {0}")]
    Usage(String),

    /// The k-nearest-neighbour graph has more than one connected component.
    #[error("disconnected graph: component sizes {sizes:?}")]
    DisconnectedGraph { sizes: Vec<usize> },

    /// A numerical routine could not produce a result.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Synthetic data generation gave up.
    #[error("generation error: {0}")]
    Generation(String),

    /// An archive did not match the expected schema.
    #[error("schema error: {0}")]
    Schema(String),

    /// A workspace file no longer matches its manifest entry.
    #[error("integrity error: {name} ({path}) checksum mismatch")]
    Integrity { name: String, path: PathBuf },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
