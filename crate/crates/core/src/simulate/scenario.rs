use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};

use super::{ErrorModel, GaussMarkov, SimulateError};
use crate::geodesy::{PlanarPoint, ProjectionParams, TransverseMercator};
use crate::nmea::{quantize_degrees, FixQuality, GeoCoord, GnssFix};
use crate::track::{Polyline, ProjectedFix};

/// Start time of generated surveys unless configured otherwise.
pub const DEFAULT_START: &str = "2021-06-15T09:00:00Z";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopSpec {
    /// Arc length from the first vertex, m.
    pub along_m: f64,
    pub duration_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub polyline: Polyline<f64>,
    pub walk_speed: f64,
    pub stops: Vec<StopSpec>,
    pub static_lead_s: f64,
    pub static_tail_s: f64,
    pub sample_rate_hz: f64,
    pub start: DateTime<Utc>,
    pub projection: ProjectionParams,
}

/// Closed elliptical loop with vertices about 1 m apart, roughly 1.67 km long,
/// inside UTM 32N near 45.67° N, 11.93° E.
pub fn default_loop() -> Polyline<f64> {
    let (ce, cn, ae, an) = (728_000.0, 5_061_700.0, 180.0, 340.0);
    let count = 1672;
    let vertices = (0..count)
        .map(|i| {
            let t = std::f64::consts::TAU * i as f64 / count as f64;
            PlanarPoint::new(ce + ae * t.cos(), cn + an * t.sin())
        })
        .collect();
    Polyline::new(vertices, true).expect("static geometry")
}

impl Scenario {
    /// Three-minute statics at both ends, one lap at 1.4 m/s, and `stops`
    /// evenly spaced 12 s pauses.
    pub fn with_even_stops(polyline: Polyline<f64>, stops: usize) -> Self {
        let len = polyline.length();
        let stops = (1..=stops)
            .map(|k| StopSpec {
                along_m: len * k as f64 / (stops + 1) as f64,
                duration_s: 12.0,
            })
            .collect();
        Self {
            polyline,
            walk_speed: 1.4,
            stops,
            static_lead_s: 180.0,
            static_tail_s: 180.0,
            sample_rate_hz: 1.0,
            start: DEFAULT_START.parse().expect("constant"),
            projection: ProjectionParams::utm32n_etrs89(),
        }
    }

    /// The default loop with two mid-track pauses.
    pub fn field_protocol() -> Self {
        Self::with_even_stops(default_loop(), 2)
    }

    pub fn validate(&self) -> Result<(), SimulateError> {
        let bad = |m: &str| Err(SimulateError::InvalidScenario(m.to_string()));
        if !(self.walk_speed > 0.0 && self.walk_speed.is_finite()) {
            return bad("walk_speed must be > 0");
        }
        if self.sample_rate_hz != 1.0 {
            return bad("only 1 Hz sampling is supported");
        }
        if !(self.static_lead_s >= 0.0 && self.static_tail_s >= 0.0) {
            return bad("static durations must be >= 0");
        }
        let len = self.polyline.length();
        let mut prev = 0.0;
        for s in &self.stops {
            if !(s.along_m > 0.0 && s.along_m < len) {
                return bad("stop position outside the polyline");
            }
            if !(s.duration_s > 0.0) {
                return bad("stop duration must be > 0");
            }
            if s.along_m < prev {
                return bad("stops must be ordered along the track");
            }
            prev = s.along_m;
        }
        Ok(())
    }

    /// Breakpoints of arc length against elapsed time: (t, along) pairs,
    /// piecewise linear in between.
    fn timeline(&self) -> Vec<(f64, f64)> {
        let mut knots = vec![(0.0, 0.0), (self.static_lead_s, 0.0)];
        let mut t = self.static_lead_s;
        let mut along = 0.0;
        for s in &self.stops {
            t += (s.along_m - along) / self.walk_speed;
            along = s.along_m;
            knots.push((t, along));
            t += s.duration_s;
            knots.push((t, along));
        }
        let len = self.polyline.length();
        t += (len - along) / self.walk_speed;
        knots.push((t, len));
        knots.push((t + self.static_tail_s, len));
        knots
    }

    pub fn duration_s(&self) -> f64 {
        self.timeline().last().map(|k| k.0).unwrap_or(0.0)
    }

    /// Dwell periods including the end statics, in time order.
    pub fn truth_stops(&self) -> Vec<TruthStop> {
        let knots = self.timeline();
        let at = |secs: f64| self.start + Duration::milliseconds((secs * 1000.0).round() as i64);
        let mut out = Vec::new();
        for w in knots.windows(2) {
            let ((t0, a0), (t1, a1)) = (w[0], w[1]);
            if a0 == a1 && t1 > t0 {
                out.push(TruthStop {
                    start: at(t0),
                    end: at(t1),
                    duration_s: t1 - t0,
                    position: self.polyline.point_at(a0),
                });
            }
        }
        out
    }

    /// Noise-free position at each epoch.
    pub fn true_path(&self) -> Vec<(DateTime<Utc>, PlanarPoint<f64>)> {
        let knots = self.timeline();
        let total = knots.last().map(|k| k.0).unwrap_or(0.0);
        let epochs = total.floor() as i64;
        let mut k = 0;
        (0..=epochs)
            .map(|i| {
                let t = i as f64;
                while k + 2 < knots.len() && knots[k + 1].0 <= t {
                    k += 1;
                }
                let ((t0, a0), (t1, a1)) = (knots[k], knots[k + 1]);
                let along = if t1 > t0 {
                    a0 + (a1 - a0) * ((t - t0) / (t1 - t0)).clamp(0.0, 1.0)
                } else {
                    a1
                };
                (self.start + Duration::seconds(i), self.polyline.point_at(along))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthStop {
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
    pub duration_s: f64,
    pub position: PlanarPoint<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedSurvey {
    pub truth: Vec<PlanarPoint<f64>>,
    pub fixes: Vec<GnssFix>,
    /// `fixes` in the scenario projection.
    pub projected: Vec<ProjectedFix<f64>>,
    pub truth_stops: Vec<TruthStop>,
}

/// Generates the true path and its noisy, optionally quantized, observation.
/// Without quantization the projected fixes are truth plus noise exactly.
pub fn simulate_survey(sc: &Scenario, em: &ErrorModel) -> Result<SimulatedSurvey, SimulateError> {
    sc.validate()?;
    let tm = TransverseMercator::<f64>::new(&sc.projection)?;
    let mut noise = GaussMarkov::new(em, 1.0 / sc.sample_rate_hz)?;
    let path = sc.true_path();
    let mut fixes = Vec::with_capacity(path.len());
    let mut projected = Vec::with_capacity(path.len());
    for (ts, p) in &path {
        let (de, dn) = noise.next_offset();
        let noisy = p.offset(de, dn);
        let (mut lat, mut lon) = tm.inverse(&noisy)?;
        let planar = if em.quantize {
            lat = quantize_degrees(lat);
            lon = quantize_degrees(lon);
            tm.forward(lat, lon)?
        } else {
            noisy
        };
        fixes.push(GnssFix {
            timestamp: *ts,
            coord: Some(GeoCoord {
                latitude: lat,
                longitude: lon,
            }),
            fix_quality: FixQuality::Sps,
            satellites_used: 9,
            hdop: Some(0.9),
            altitude_m: Some(45.0),
        });
        projected.push(ProjectedFix::new(*ts, planar));
    }
    Ok(SimulatedSurvey {
        truth: path.into_iter().map(|(_, p)| p).collect(),
        fixes,
        projected,
        truth_stops: sc.truth_stops(),
    })
}
