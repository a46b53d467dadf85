//! Reference track, closest-point residuals and accuracy statistics.

mod load;
mod polyline;
mod residuals;
mod stats;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geodesy::{GeodesyError, TransverseMercator};
use crate::nmea::GnssFix;
use crate::scalar::Scalar;

pub use crate::geodesy::PlanarPoint;
pub use load::{load_polyline, parse_polyline_csv, parse_polyline_geojson, PolylineFormat};
pub use polyline::{closest_point_on_polyline, Polyline, SegmentLine, TrackProjection};
pub use residuals::{residual_series, residuals_against_truth, Gap, ResidualEpoch, ResidualSeries};
pub use stats::{
    accuracy_stats, chi_square_quantile_2dof, ConfidenceEllipse, AccuracyStats,
    CONFIDENCE_LEVELS,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrackError {
    #[error("malformed geometry: {0}")]
    MalformedGeometry(String),
    #[error("too few vertices: {found} (need {needed})")]
    TooFewVertices { found: usize, needed: usize },
    #[error("no usable fixes to build a residual series")]
    EmptySeries,
    #[error("need at least {needed} residuals, have {found}")]
    InsufficientData { found: usize, needed: usize },
    #[error(transparent)]
    Geodesy(#[from] GeodesyError),
    #[error("cannot read polyline: {0}")]
    Read(String),
}

impl TrackError {
    pub fn kind(&self) -> &'static str {
        match self {
            TrackError::MalformedGeometry(_) => "MalformedGeometry",
            TrackError::TooFewVertices { .. } => "TooFewVertices",
            TrackError::EmptySeries => "EmptySeries",
            TrackError::InsufficientData { .. } => "InsufficientData",
            TrackError::Geodesy(e) => e.kind(),
            TrackError::Read(_) => "Read",
        }
    }
}

/// A fix in the projected frame. `position` is `None` for excluded epochs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectedFix<T> {
    pub timestamp: DateTime<Utc>,
    pub position: Option<PlanarPoint<T>>,
}

impl<T: Scalar> ProjectedFix<T> {
    pub fn new(timestamp: DateTime<Utc>, position: PlanarPoint<T>) -> Self {
        Self {
            timestamp,
            position: Some(position),
        }
    }
}

/// Projects every fix; excluded epochs keep their slot with no position.
pub fn project_fixes<T: Scalar>(
    fixes: &[GnssFix],
    tm: &TransverseMercator<T>,
) -> Result<Vec<ProjectedFix<T>>, GeodesyError> {
    fixes
        .iter()
        .map(|f| {
            let position = match f.position() {
                Some(c) => Some(tm.forward(T::lit(c.latitude), T::lit(c.longitude))?),
                None => None,
            };
            Ok(ProjectedFix {
                timestamp: f.timestamp,
                position,
            })
        })
        .collect()
}

/// Only the epochs that carry a position.
pub fn usable_points<T: Scalar>(fixes: &[ProjectedFix<T>]) -> Vec<(DateTime<Utc>, PlanarPoint<T>)> {
    fixes
        .iter()
        .filter_map(|f| f.position.map(|p| (f.timestamp, p)))
        .collect()
}
