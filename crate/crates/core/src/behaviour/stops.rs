use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::SpeedSeries;
use crate::geodesy::PlanarPoint;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StopEvent<T> {
    pub survey_id: String,
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
    pub duration_s: T,
    pub centroid: PlanarPoint<T>,
    /// RMS distance of member fixes to the centroid, m.
    pub dispersion: T,
    pub n_fixes: usize,
}

/// Maximal runs of speed below `speed_threshold` lasting at least
/// `min_duration_s`. The fix preceding a run is where the stop begins, so a
/// run of k slow intervals spans k seconds and k + 1 fixes. Uses the filtered
/// speed when present.
pub fn detect_stops<T: Scalar>(
    s: &SpeedSeries<T>,
    speed_threshold: T,
    min_duration_s: T,
    survey_id: &str,
) -> Vec<StopEvent<T>> {
    let speed = s.effective_speed();
    let mut events = Vec::new();
    let mut i = 0;
    while i < speed.len() {
        if speed[i] >= speed_threshold {
            i += 1;
            continue;
        }
        let run_start = i;
        while i < speed.len() && speed[i] < speed_threshold {
            i += 1;
        }
        let first = run_start.saturating_sub(1);
        let last = i - 1;
        let duration_s =
            T::lit((s.timestamps[last] - s.timestamps[first]).num_milliseconds() as f64 / 1000.0);
        if duration_s < min_duration_s || last == first {
            continue;
        }
        let members = &s.positions[first..=last];
        let nf = T::from_usize_lossy(members.len());
        let centroid = PlanarPoint::new(
            members.iter().map(|p| p.easting).sum::<T>() / nf,
            members.iter().map(|p| p.northing).sum::<T>() / nf,
        );
        let dispersion = (members
            .iter()
            .map(|p| p.distance(&centroid).powi(2))
            .sum::<T>()
            / nf)
            .sqrt();
        events.push(StopEvent {
            survey_id: survey_id.to_owned(),
            start: s.timestamps[first],
            end: s.timestamps[last],
            duration_s,
            centroid,
            dispersion,
            n_fixes: members.len(),
        });
    }
    events
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behaviour::{median_filter, speed_series};
    use chrono::TimeZone;
    use proptest::prelude::*;

    fn t(s: i64) -> DateTime<Utc> {
        Utc.timestamp_opt(1_612_351_860 + s, 0).unwrap()
    }

    /// Walk north at 1.4 m/s, pausing `stop_len` seconds after `walk_before` seconds.
    fn walk_with_stop(walk_before: i64, stop_len: i64, walk_after: i64) -> Vec<(DateTime<Utc>, PlanarPoint<f64>)> {
        let mut out = Vec::new();
        let mut y = 0.0;
        let mut ts = 0;
        for _ in 0..walk_before {
            out.push((t(ts), PlanarPoint::new(0.0, y)));
            y += 1.4;
            ts += 1;
        }
        for _ in 0..=stop_len {
            out.push((t(ts), PlanarPoint::new(0.0, y)));
            ts += 1;
        }
        for _ in 0..walk_after {
            y += 1.4;
            out.push((t(ts), PlanarPoint::new(0.0, y)));
            ts += 1;
        }
        out
    }

    fn stops_of(fixes: &[(DateTime<Utc>, PlanarPoint<f64>)], min: f64) -> Vec<StopEvent<f64>> {
        let s = median_filter(&speed_series(fixes).unwrap(), 5).unwrap();
        detect_stops(&s, 0.5, min, "s")
    }

    #[test]
    fn twelve_second_stop_detected_exactly() {
        let ev = stops_of(&walk_with_stop(30, 12, 30), 10.0);
        assert_eq!(ev.len(), 1);
        assert_eq!(ev[0].duration_s, 12.0);
        assert_eq!(ev[0].start, t(30));
        assert_eq!(ev[0].n_fixes, 13);
        assert!(ev[0].dispersion < 1e-9);
        assert!((ev[0].centroid.northing - 42.0).abs() < 1e-9);
    }

    #[test]
    fn ten_second_boundary() {
        assert_eq!(stops_of(&walk_with_stop(30, 10, 30), 10.0).len(), 1);
        assert!(stops_of(&walk_with_stop(30, 9, 30), 10.0).is_empty());
    }

    #[test]
    fn constant_walk_has_no_stops() {
        assert!(stops_of(&walk_with_stop(60, 0, 0), 10.0).is_empty());
    }

    #[test]
    fn leading_static_starts_at_first_fix() {
        let ev = stops_of(&walk_with_stop(0, 180, 60), 10.0);
        assert_eq!(ev.len(), 1);
        assert_eq!(ev[0].start, t(0));
        assert_eq!(ev[0].duration_s, 180.0);
    }

    #[test]
    fn falls_back_to_raw_speed() {
        let fixes = walk_with_stop(30, 12, 30);
        let raw = speed_series(&fixes).unwrap();
        assert_eq!(detect_stops(&raw, 0.5, 10.0, "s").len(), 1);
    }

    proptest! {
        #[test]
        fn non_overlapping_sorted_and_monotone(
            speeds in prop::collection::vec(prop_oneof![Just(0.0f64), Just(0.2), Just(1.4)], 5..200),
            d1 in 1.0f64..15.0, extra in 0.0f64..15.0,
        ) {
            let mut fixes = Vec::new();
            let mut y = 0.0;
            for (i, v) in speeds.iter().enumerate() {
                y += v;
                fixes.push((t(i as i64), PlanarPoint::new(0.0, y)));
            }
            let s = speed_series(&fixes).unwrap();
            let a = detect_stops(&s, 0.5, d1, "s");
            let b = detect_stops(&s, 0.5, d1 + extra, "s");
            for w in a.windows(2) {
                prop_assert!(w[0].end < w[1].start);
            }
            for e in &a {
                prop_assert!(e.duration_s >= d1);
                prop_assert!(e.dispersion.is_finite());
            }
            for e in &b {
                prop_assert!(a.contains(e));
            }
        }

        #[test]
        fn translation_invariant(de in -1e4f64..1e4, dn in -1e4f64..1e4) {
            let fixes = walk_with_stop(20, 15, 20);
            let moved: Vec<_> = fixes.iter().map(|(ts, p)| (*ts, p.offset(de, dn))).collect();
            let a = stops_of(&fixes, 10.0);
            let b = stops_of(&moved, 10.0);
            prop_assert_eq!(a.len(), b.len());
            for (x, y) in a.iter().zip(&b) {
                prop_assert_eq!(x.duration_s, y.duration_s);
                prop_assert!((x.centroid.easting + de - y.centroid.easting).abs() < 1e-6);
                prop_assert!((x.centroid.northing + dn - y.centroid.northing).abs() < 1e-6);
            }
        }
    }
}
