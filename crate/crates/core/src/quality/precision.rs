use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};

use super::QualityError;
use crate::geodesy::PlanarPoint;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowLabel {
    SurveyStart,
    SurveyEnd,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    Start,
    End,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StaticWindowConfig {
    pub duration_s: i64,
    pub placement: Placement,
    /// Keep only the first N epochs of each window; `None` or 0 keeps the whole window.
    pub epoch_limit: Option<usize>,
}

impl Default for StaticWindowConfig {
    fn default() -> Self {
        Self {
            duration_s: 180,
            placement: Placement::Both,
            epoch_limit: Some(100),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticWindow<T> {
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
    pub fixes: Vec<(DateTime<Utc>, PlanarPoint<T>)>,
    pub label: WindowLabel,
}

impl<T: Scalar> StaticWindow<T> {
    pub fn custom(fixes: Vec<(DateTime<Utc>, PlanarPoint<T>)>) -> Option<Self> {
        let start = fixes.first()?.0;
        let end = fixes.last()?.0;
        Some(Self {
            start,
            end,
            fixes,
            label: WindowLabel::Custom,
        })
    }

    pub fn truncated(mut self, epochs: usize) -> Self {
        self.fixes.truncate(epochs);
        if let Some(last) = self.fixes.last() {
            self.end = last.0;
        }
        self
    }
}

/// 1σ spread of one static window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecisionReport<T> {
    pub label: WindowLabel,
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
    pub n: usize,
    pub sigma_east: T,
    pub sigma_north: T,
    pub mean: PlanarPoint<T>,
}

/// Cuts the first and/or last `duration_s` seconds of a time-ordered fix series.
pub fn extract_static_windows<T: Scalar>(
    fixes: &[(DateTime<Utc>, PlanarPoint<T>)],
    config: &StaticWindowConfig,
) -> Result<Vec<StaticWindow<T>>, QualityError> {
    let (first, last) = match (fixes.first(), fixes.last()) {
        (Some(f), Some(l)) => (f.0, l.0),
        _ => {
            return Err(QualityError::SurveyTooShort {
                duration_s: 0,
                required_s: config.duration_s,
            })
        }
    };
    let span = (last - first).num_seconds();
    let required = match config.placement {
        Placement::Both => 2 * config.duration_s,
        _ => config.duration_s,
    };
    if config.duration_s <= 0 || span <= required {
        return Err(QualityError::SurveyTooShort {
            duration_s: span,
            required_s: required,
        });
    }
    let dur = Duration::seconds(config.duration_s);
    let mut windows = Vec::new();
    let limit = |w: StaticWindow<T>| match config.epoch_limit {
        Some(n) if n > 0 => w.truncated(n),
        _ => w,
    };
    if matches!(config.placement, Placement::Start | Placement::Both) {
        let end = first + dur;
        let sel: Vec<_> = fixes.iter().copied().filter(|(t, _)| *t < end).collect();
        windows.push(limit(StaticWindow {
            start: first,
            end: sel.last().map(|f| f.0).unwrap_or(first),
            fixes: sel,
            label: WindowLabel::SurveyStart,
        }));
    }
    if matches!(config.placement, Placement::End | Placement::Both) {
        let start = last - dur;
        let sel: Vec<_> = fixes.iter().copied().filter(|(t, _)| *t > start).collect();
        windows.push(limit(StaticWindow {
            start: sel.first().map(|f| f.0).unwrap_or(last),
            end: last,
            fixes: sel,
            label: WindowLabel::SurveyEnd,
        }));
    }
    Ok(windows)
}

/// Sample standard deviation (n − 1) of easting and northing.
pub fn static_precision<T: Scalar>(w: &StaticWindow<T>) -> Result<PrecisionReport<T>, QualityError> {
    let n = w.fixes.len();
    if n < 2 {
        return Err(QualityError::InsufficientData {
            found: n,
            needed: 2,
        });
    }
    let nf = T::from_usize_lossy(n);
    // offsets from the first fix keep UTM magnitudes out of the sums
    let origin = w.fixes[0].1;
    let me = w.fixes.iter().map(|(_, p)| p.easting - origin.easting).sum::<T>() / nf;
    let mn = w.fixes.iter().map(|(_, p)| p.northing - origin.northing).sum::<T>() / nf;
    let (se, sn) = w.fixes.iter().fold((T::zero(), T::zero()), |(a, b), (_, p)| {
        (
            a + (p.easting - origin.easting - me).powi(2),
            b + (p.northing - origin.northing - mn).powi(2),
        )
    });
    let dof = T::from_usize_lossy(n - 1);
    Ok(PrecisionReport {
        label: w.label,
        start: w.start,
        end: w.end,
        n,
        sigma_east: (se / dof).sqrt(),
        sigma_north: (sn / dof).sqrt(),
        mean: PlanarPoint::new(origin.easting + me, origin.northing + mn),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;
    use proptest::prelude::*;

    fn t(s: i64) -> DateTime<Utc> {
        Utc.timestamp_opt(1_612_351_860 + s, 0).unwrap()
    }

    fn static_series(n: i64) -> Vec<(DateTime<Utc>, PlanarPoint<f64>)> {
        (0..n)
            .map(|i| (t(i), PlanarPoint::new(728_000.0, 5_061_000.0)))
            .collect()
    }

    #[test]
    fn twenty_six_minute_survey_both_windows() {
        let cfg = StaticWindowConfig {
            epoch_limit: None,
            ..Default::default()
        };
        let ws = extract_static_windows(&static_series(26 * 60), &cfg).unwrap();
        assert_eq!(ws.len(), 2);
        assert_eq!(ws[0].label, WindowLabel::SurveyStart);
        assert_eq!(ws[1].label, WindowLabel::SurveyEnd);
        assert_eq!(ws[0].fixes.len(), 180);
        assert_eq!(ws[1].fixes.len(), 180);
        assert!(ws[0].fixes.iter().all(|(ts, _)| *ts >= ws[0].start && *ts <= ws[0].end));
    }

    #[test]
    fn default_truncates_to_one_hundred() {
        let ws = extract_static_windows(&static_series(26 * 60), &Default::default()).unwrap();
        assert!(ws.iter().all(|w| w.fixes.len() == 100));
        // end window keeps its first 100 epochs
        assert_eq!(ws[1].start, t(26 * 60 - 180));
    }

    #[test]
    fn short_survey_rejected() {
        assert!(matches!(
            extract_static_windows(&static_series(100), &Default::default()),
            Err(QualityError::SurveyTooShort { .. })
        ));
    }

    #[test]
    fn start_only() {
        let cfg = StaticWindowConfig {
            placement: Placement::Start,
            ..Default::default()
        };
        let ws = extract_static_windows(&static_series(600), &cfg).unwrap();
        assert_eq!(ws.len(), 1);
        assert_eq!(ws[0].label, WindowLabel::SurveyStart);
    }

    #[test]
    fn identical_fixes_have_zero_sigma() {
        let w = StaticWindow::custom(static_series(100)).unwrap();
        let r = static_precision(&w).unwrap();
        assert_eq!(r.sigma_east, 0.0);
        assert_eq!(r.sigma_north, 0.0);
    }

    #[test]
    fn alternating_east_closed_form() {
        for n in [2usize, 10, 100] {
            let fixes = (0..n)
                .map(|i| {
                    let de = if i % 2 == 0 { 0.5 } else { -0.5 };
                    (t(i as i64), PlanarPoint::new(100.0 + de, 200.0))
                })
                .collect();
            let r = static_precision(&StaticWindow::custom(fixes).unwrap()).unwrap();
            let expected = 0.5 * (n as f64 / (n as f64 - 1.0)).sqrt();
            assert!((r.sigma_east - expected).abs() < 1e-12);
            assert_eq!(r.sigma_north, 0.0);
        }
    }

    #[test]
    fn single_fix_is_insufficient() {
        let w = StaticWindow::custom(static_series(1)).unwrap();
        assert!(matches!(
            static_precision(&w),
            Err(QualityError::InsufficientData { .. })
        ));
    }

    proptest! {
        #[test]
        fn translation_invariant_and_rotation_equivariant(
            pts in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 2..50),
            de in -1e3f64..1e3, dn in -1e3f64..1e3,
        ) {
            let mk = |f: &dyn Fn(f64, f64) -> (f64, f64)| {
                let fixes = pts.iter().enumerate()
                    .map(|(i, &(e, n))| { let (e, n) = f(e, n); (t(i as i64), PlanarPoint::new(e, n)) })
                    .collect();
                static_precision(&StaticWindow::custom(fixes).unwrap()).unwrap()
            };
            let base = mk(&|e, n| (e, n));
            let shifted = mk(&|e, n| (e + de, n + dn));
            prop_assert!((base.sigma_east - shifted.sigma_east).abs() < 1e-6);
            prop_assert!((base.sigma_north - shifted.sigma_north).abs() < 1e-6);
            // quarter turn swaps the components
            let turned = mk(&|e, n| (-n, e));
            prop_assert!((base.sigma_east - turned.sigma_north).abs() < 1e-9);
            prop_assert!((base.sigma_north - turned.sigma_east).abs() < 1e-9);
        }
    }
}
