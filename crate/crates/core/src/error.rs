use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the pipeline stages and their building blocks.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Schema or syntax problem in an input file, with the offending line.
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("classifier training needs examples from both classes")]
    SingleClassTraining,

    #[error("knowledge base has zero total plausibility; nothing to rank")]
    EmptyDistribution,

    #[error("factorization diverged (non-finite loss) at learning rate {learning_rate}")]
    Diverged { learning_rate: f64 },

    #[error("{0}")]
    InvalidInput(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
