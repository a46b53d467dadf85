use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::BehaviourError;
use crate::geodesy::PlanarPoint;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedSeries<T> {
    pub timestamps: Vec<DateTime<Utc>>,
    pub positions: Vec<PlanarPoint<T>>,
    /// m/s; entry i covers the interval ending at epoch i.
    pub raw_speed: Vec<T>,
    pub filtered_speed: Option<Vec<T>>,
    /// Samples; odd.
    pub filter_window: Option<usize>,
}

impl<T: Scalar> SpeedSeries<T> {
    pub fn len(&self) -> usize {
        self.raw_speed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw_speed.is_empty()
    }

    /// Filtered speed when present, raw otherwise.
    pub fn effective_speed(&self) -> &[T] {
        self.filtered_speed.as_deref().unwrap_or(&self.raw_speed)
    }
}

/// First difference of planar position over time. Epoch 0 copies epoch 1.
pub fn speed_series<T: Scalar>(
    fixes: &[(DateTime<Utc>, PlanarPoint<T>)],
) -> Result<SpeedSeries<T>, BehaviourError> {
    if fixes.len() < 2 {
        return Err(BehaviourError::TooFewFixes { found: fixes.len() });
    }
    let mut raw = Vec::with_capacity(fixes.len());
    raw.push(T::zero());
    for (i, w) in fixes.windows(2).enumerate() {
        let dt_ms = (w[1].0 - w[0].0).num_milliseconds();
        if dt_ms <= 0 {
            return Err(BehaviourError::NonIncreasingTime { index: i + 1 });
        }
        let dt = T::lit(dt_ms as f64 / 1000.0);
        raw.push(w[1].1.distance(&w[0].1) / dt);
    }
    raw[0] = raw[1];
    Ok(SpeedSeries {
        timestamps: fixes.iter().map(|f| f.0).collect(),
        positions: fixes.iter().map(|f| f.1).collect(),
        raw_speed: raw,
        filtered_speed: None,
        filter_window: None,
    })
}

/// Sliding median; near the edges the window shrinks symmetrically.
pub fn median_filter<T: Scalar>(
    s: &SpeedSeries<T>,
    window: usize,
) -> Result<SpeedSeries<T>, BehaviourError> {
    if window < 3 || window.is_multiple_of(2) {
        return Err(BehaviourError::InvalidWindow { window });
    }
    let n = s.raw_speed.len();
    if window > n {
        return Err(BehaviourError::WindowTooLarge { window, len: n });
    }
    let half = window / 2;
    let mut buf = Vec::with_capacity(window);
    let filtered = (0..n)
        .map(|i| {
            let h = half.min(i).min(n - 1 - i);
            buf.clear();
            buf.extend_from_slice(&s.raw_speed[i - h..=i + h]);
            buf.sort_by(|a, b| a.partial_cmp(b).expect("finite speed"));
            buf[h]
        })
        .collect();
    Ok(SpeedSeries {
        filtered_speed: Some(filtered),
        filter_window: Some(window),
        ..s.clone()
    })
}
