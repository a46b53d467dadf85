use std::path::PathBuf;

use thiserror::Error;

use crate::catalog::SurveyStatus;

pub type Result<T, E = ServiceError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("unreadable file: {0}")]
    UnreadableFile(String),
    #[error("unknown survey {0}")]
    UnknownSurvey(String),
    #[error("survey {id} has no report yet (status {status})")]
    ReportNotReady { id: String, status: String },
    #[error("no analyzed survey matches the filter")]
    NoAnalyzedSurveys,
    #[error("survey {id}: cannot move from {from} to {to}")]
    InvalidTransition {
        id: String,
        from: SurveyStatus,
        to: SurveyStatus,
    },
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("upload exceeds {limit} bytes")]
    TooLarge { limit: usize },
    #[error("missing or wrong bearer token")]
    Unauthorized,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("catalog entry {path} is corrupt: {reason}")]
    Corrupt { path: PathBuf, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] gardentrack_core::Error),
}

impl ServiceError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        ServiceError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ServiceError::UnreadableFile(_) => "UnreadableFile",
            ServiceError::UnknownSurvey(_) => "UnknownSurvey",
            ServiceError::ReportNotReady { .. } => "ReportNotReady",
            ServiceError::NoAnalyzedSurveys => "NoAnalyzedSurveys",
            ServiceError::InvalidTransition { .. } => "InvalidTransition",
            ServiceError::BadRequest(_) => "BadRequest",
            ServiceError::TooLarge { .. } => "PayloadTooLarge",
            ServiceError::Unauthorized => "Unauthorized",
            ServiceError::Config(_) => "Config",
            ServiceError::Corrupt { .. } => "CorruptCatalog",
            ServiceError::Io { .. } => "Io",
            ServiceError::Core(e) => e.kind(),
        }
    }
}
