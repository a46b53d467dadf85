use std::path::PathBuf;

use thiserror::Error;

use crate::behaviour::BehaviourError;
use crate::geodesy::GeodesyError;
use crate::nmea::NmeaError;
use crate::quality::QualityError;
use crate::simulate::SimulateError;
use crate::track::TrackError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Umbrella error for the pipeline and for callers that mix modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Nmea(#[from] NmeaError),
    #[error(transparent)]
    Geodesy(#[from] GeodesyError),
    #[error(transparent)]
    Track(#[from] TrackError),
    #[error(transparent)]
    Quality(#[from] QualityError),
    #[error(transparent)]
    Behaviour(#[from] BehaviourError),
    #[error(transparent)]
    Simulate(#[from] SimulateError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("malformed CSV: {0}")]
    Csv(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable machine-readable name of the failure, used in reports and on stderr.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Nmea(e) => e.kind(),
            Error::Geodesy(e) => e.kind(),
            Error::Track(e) => e.kind(),
            Error::Quality(e) => e.kind(),
            Error::Behaviour(e) => e.kind(),
            Error::Simulate(e) => e.kind(),
            Error::Io { .. } => "Io",
            Error::Config(_) => "Config",
            Error::Csv(_) => "MalformedCsv",
        }
    }
}
