use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("{}: i/o failure", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("word id {id} out of range for vocabulary of size {size}")]
    WordOutOfRange { id: usize, size: usize },
    #[error("document id {id} out of range for {count} documents")]
    DocOutOfRange { id: usize, count: usize },
    #[error("invalid vocabulary: {0}")]
    Vocabulary(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("zero-norm topic vector")]
    ZeroNorm,
    #[error("topic {0} is not active")]
    InactiveTopic(usize),
    #[error("empty selection")]
    EmptySelection,
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
