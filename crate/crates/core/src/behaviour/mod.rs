//! Speed, median filtering, stop detection and cross-survey hotspots.

mod hotspots;
mod speed;
mod stops;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use hotspots::{cluster_hotspots, Hotspot};
pub use speed::{median_filter, speed_series, SpeedSeries};
pub use stops::{detect_stops, StopEvent};

/// Filtered speed below which an epoch counts as stationary, m/s.
pub const DEFAULT_SPEED_THRESHOLD: f64 = 0.9;
pub const DEFAULT_MIN_DURATION_S: f64 = 10.0;
pub const DEFAULT_FILTER_WINDOW: usize = 5;
pub const DEFAULT_MERGE_RADIUS_M: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BehaviourError {
    #[error("need at least 2 fixes, have {found}")]
    TooFewFixes { found: usize },
    #[error("timestamps must strictly increase (epoch {index})")]
    NonIncreasingTime { index: usize },
    #[error("median window {window} exceeds series length {len}")]
    WindowTooLarge { window: usize, len: usize },
    #[error("median window must be odd and at least 3, got {window}")]
    InvalidWindow { window: usize },
}

impl BehaviourError {
    pub fn kind(&self) -> &'static str {
        match self {
            BehaviourError::TooFewFixes { .. } => "TooFewFixes",
            BehaviourError::NonIncreasingTime { .. } => "NonIncreasingTime",
            BehaviourError::WindowTooLarge { .. } => "WindowTooLarge",
            BehaviourError::InvalidWindow { .. } => "InvalidWindow",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StopConfig {
    pub speed_threshold: f64,
    pub min_duration_s: f64,
    /// Median window in samples; `None` or 0 disables filtering.
    pub filter_window: Option<usize>,
}

impl Default for StopConfig {
    fn default() -> Self {
        Self {
            speed_threshold: DEFAULT_SPEED_THRESHOLD,
            min_duration_s: DEFAULT_MIN_DURATION_S,
            filter_window: Some(DEFAULT_FILTER_WINDOW),
        }
    }
}
