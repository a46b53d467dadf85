use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{PlanarPoint, Polyline, ProjectedFix, TrackError, TrackProjection};
use crate::scalar::Scalar;

/// Residual of one epoch: fix minus reference point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualEpoch<T> {
    pub timestamp: DateTime<Utc>,
    pub fix: PlanarPoint<T>,
    pub east: T,
    pub north: T,
    /// Present when the reference point came from a track projection.
    pub projection: Option<TrackProjection<T>>,
}

impl<T: Scalar> ResidualEpoch<T> {
    pub fn distance(&self) -> T {
        self.east.hypot(self.north)
    }
}

/// Missing epochs inside a series: `missing` seconds starting at `start`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gap {
    pub start: DateTime<Utc>,
    pub missing: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualSeries<T> {
    pub epochs: Vec<ResidualEpoch<T>>,
    pub gaps: Vec<Gap>,
}

impl<T: Scalar> ResidualSeries<T> {
    /// Builds a series from epochs, deriving gap markers from the 1 s grid.
    pub fn from_epochs(epochs: Vec<ResidualEpoch<T>>) -> Result<Self, TrackError> {
        if epochs.is_empty() {
            return Err(TrackError::EmptySeries);
        }
        let gaps = epochs
            .windows(2)
            .filter_map(|w| {
                let dt = (w[1].timestamp - w[0].timestamp).num_seconds();
                (dt > 1).then(|| Gap {
                    start: w[0].timestamp + chrono::Duration::seconds(1),
                    missing: dt - 1,
                })
            })
            .collect();
        Ok(Self { epochs, gaps })
    }

    pub fn len(&self) -> usize {
        self.epochs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epochs.is_empty()
    }

    pub fn east(&self) -> Vec<(DateTime<Utc>, T)> {
        self.epochs.iter().map(|e| (e.timestamp, e.east)).collect()
    }

    pub fn north(&self) -> Vec<(DateTime<Utc>, T)> {
        self.epochs.iter().map(|e| (e.timestamp, e.north)).collect()
    }

    pub fn distances(&self) -> Vec<T> {
        self.epochs.iter().map(ResidualEpoch::distance).collect()
    }

    /// Drops epochs inside any of the closed time intervals.
    pub fn excluding(&self, windows: &[(DateTime<Utc>, DateTime<Utc>)]) -> Result<Self, TrackError> {
        let kept = self
            .epochs
            .iter()
            .filter(|e| !windows.iter().any(|(s, t)| e.timestamp >= *s && e.timestamp <= *t))
            .copied()
            .collect();
        Self::from_epochs(kept)
    }
}

/// Projects every usable fix onto the track. No-fix epochs are skipped and
/// show up as gaps.
pub fn residual_series<T: Scalar>(
    fixes: &[ProjectedFix<T>],
    poly: &Polyline<T>,
) -> Result<ResidualSeries<T>, TrackError> {
    let epochs = fixes
        .iter()
        .filter_map(|f| f.position.map(|p| (f.timestamp, p)))
        .map(|(timestamp, fix)| {
            let pr = poly.closest_point(&fix);
            ResidualEpoch {
                timestamp,
                fix,
                east: pr.residual_east,
                north: pr.residual_north,
                projection: Some(pr),
            }
        })
        .collect();
    ResidualSeries::from_epochs(epochs)
}

/// Residuals against known true positions (simulation), pairing epochs by index.
pub fn residuals_against_truth<T: Scalar>(
    fixes: &[ProjectedFix<T>],
    truth: &[PlanarPoint<T>],
) -> Result<ResidualSeries<T>, TrackError> {
    let epochs = fixes
        .iter()
        .zip(truth)
        .filter_map(|(f, t)| {
            f.position.map(|p| ResidualEpoch {
                timestamp: f.timestamp,
                fix: p,
                east: p.easting - t.easting,
                north: p.northing - t.northing,
                projection: None,
            })
        })
        .collect();
    ResidualSeries::from_epochs(epochs)
}
