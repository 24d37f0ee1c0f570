use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed embedding record at line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },

    #[error("embedding file is empty: {}", .0.display())]
    EmptyFile(PathBuf),

    #[error("schema error: {0}")]
    SchemaError(String),

    #[error("row {row}: {reason}")]
    RowError { row: usize, reason: String },

    #[error("cannot roll up code {code:?} to level {target_level}")]
    InvalidRollup { code: String, target_level: usize },

    #[error("no taxonomy entries at the requested levels {0:?}")]
    EmptySelection(Vec<u8>),

    #[error("corpus has no documents")]
    EmptyCorpus,

    #[error("vector dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("empty input")]
    EmptyInput,

    #[error("invalid stopword {word:?} at line {line}")]
    InvalidStopword { line: usize, word: String },

    #[error("index file: {0}")]
    IndexFormat(String),

    #[error("index was built against different embeddings (expected fingerprint {expected}, got {actual})")]
    IndexMismatch { expected: String, actual: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::FileNotFound(path)
        } else {
            Error::Io { path, source }
        }
    }
}
