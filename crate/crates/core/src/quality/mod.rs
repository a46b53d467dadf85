//! Static-window precision and temporal autocorrelation.

mod acf;
mod precision;

use thiserror::Error;

pub use acf::{
    acf, acf_regular, coordinate_acf, residual_acf, AcfComponent, AcfSeries, MAX_GAP_FRACTION,
};
pub use precision::{
    extract_static_windows, static_precision, Placement, PrecisionReport, StaticWindow,
    StaticWindowConfig, WindowLabel,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QualityError {
    #[error("survey lasts {duration_s} s, needs more than {required_s} s")]
    SurveyTooShort { duration_s: i64, required_s: i64 },
    #[error("need at least {needed} samples, have {found}")]
    InsufficientData { found: usize, needed: usize },
    #[error("irregular sampling: {0}")]
    IrregularSampling(String),
    #[error("series of {n} samples is too short for lag {max_lag} (needs more than {})", 3 * max_lag)]
    SeriesTooShort { n: usize, max_lag: usize },
    #[error("series has zero variance")]
    DegenerateSeries,
}

impl QualityError {
    pub fn kind(&self) -> &'static str {
        match self {
            QualityError::SurveyTooShort { .. } => "SurveyTooShort",
            QualityError::InsufficientData { .. } => "InsufficientData",
            QualityError::IrregularSampling(_) => "IrregularSampling",
            QualityError::SeriesTooShort { .. } => "SeriesTooShort",
            QualityError::DegenerateSeries => "DegenerateSeries",
        }
    }
}
