use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid group index {group} (world has {groups} groups)")]
    InvalidGroup { group: usize, groups: usize },

    #[error("non-finite value in {0}")]
    Numeric(&'static str),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("cost accumulation out of sequence: got t={got} after t={last}")]
    Sequencing { last: u64, got: u64 },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("could not place robot {robot} after {attempts} attempts")]
    Placement { robot: usize, attempts: usize },

    #[error("no data: {0}")]
    NoData(&'static str),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
