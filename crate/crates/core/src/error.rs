use std::path::PathBuf;

use thiserror::Error;

use crate::domain::Location;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("location {0} is not present in the panel")]
    UnknownLocation(Location),

    #[error("location {0} has no coefficients in the M4 spec")]
    MissingCoefficients(Location),

    #[error("region must contain at least one location")]
    EmptyRegion,

    #[error("region lists location {0} more than once")]
    DuplicateLocation(Location),

    #[error("regions overlap at {}", format_locations(.0))]
    OverlappingRegions(Vec<Location>),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid M4 spec: {0}")]
    InvalidSpec(String),

    #[error("invalid panel: {0}")]
    InvalidPanel(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error(
        "known-margin estimator needs unit-Frechet margins; use the empirical-margin estimator for raw data"
    )]
    RawMargins,

    #[error("at least {required} replications are required, got {got}")]
    TooFewReplications { required: usize, got: usize },

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },

    #[error("unknown station id {0:?}")]
    UnknownStation(String),

    #[error("station {station:?} has no value for year {year}")]
    MissingYear { station: String, year: i32 },

    #[error("no year is shared by every station")]
    EmptyIntersection,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}

fn format_locations(locs: &[Location]) -> String {
    locs.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}
