use std::path::PathBuf;

use thiserror::Error;

use crate::data::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("invalid dataset: {}", summarize_violations(.0))]
    Validation(Vec<Violation>),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("model state violates constraint: {0}")]
    Constraint(String),

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("unknown observation coordinate {0}")]
    UnknownCoordinate(String),

    #[error("sample {0} has no observations")]
    EmptySample(String),

    #[error("{0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

fn summarize_violations(v: &[Violation]) -> String {
    let shown: Vec<String> = v.iter().take(5).map(|x| x.to_string()).collect();
    if v.len() > 5 {
        format!("{} (and {} more)", shown.join("; "), v.len() - 5)
    } else {
        shown.join("; ")
    }
}
