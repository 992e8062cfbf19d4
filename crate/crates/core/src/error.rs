use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid point: {0}")]
    InvalidPoint(String),

    #[error("invalid trip {trip}: {reason}")]
    InvalidTrip { trip: String, reason: String },

    #[error("duplicate trip id {0}")]
    DuplicateTrip(String),

    #[error("ground-truth labels do not cover exactly the dataset's trips")]
    GroundTruthMismatch,

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("point ({lat}, {lon}) lies outside the grid bounding box")]
    OutsideGrid { lat: f64, lon: f64 },

    #[error("{path}: {message}")]
    Parse { path: String, message: String },

    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("evaluation requires labels")]
    MissingLabels,

    #[error("degenerate regressor: x is constant")]
    DegenerateRegressor,

    #[error("{0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }
}
