use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{default_loop, ErrorModel, Scenario, SimulateError, StopSpec, DEFAULT_START};
use crate::geodesy::{ProjectionRegistry, TransverseMercator, DEFAULT_PROJECTION};
use crate::track::load_polyline;

/// A pause given either as arc length or as a fraction of the track length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StopConfigEntry {
    pub along_m: Option<f64>,
    pub fraction: Option<f64>,
    pub duration_s: f64,
}

/// TOML form of a scenario plus error model. Every key is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub device_model: String,
    pub start_time: DateTime<Utc>,
    pub projection: String,
    /// Reference track; the built-in loop when absent. Relative to the config file.
    pub polyline: Option<PathBuf>,
    pub walk_speed: f64,
    pub static_lead_s: f64,
    pub static_tail_s: f64,
    /// Evenly spaced pauses, used when `stops` is empty.
    pub stop_count: usize,
    pub stop_duration_s: f64,
    pub stops: Vec<StopConfigEntry>,
    pub error_model: ErrorModel,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            device_model: "Xiaomi - Redmi Note 8T".into(),
            start_time: DEFAULT_START.parse().expect("constant"),
            projection: DEFAULT_PROJECTION.into(),
            polyline: None,
            walk_speed: 1.4,
            static_lead_s: 180.0,
            static_tail_s: 180.0,
            stop_count: 2,
            stop_duration_s: 12.0,
            stops: Vec::new(),
            error_model: ErrorModel::default(),
        }
    }
}

impl SimulationConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, SimulateError> {
        toml::from_str(text).map_err(|e| SimulateError::Config(e.to_string()))
    }

    /// Builds the scenario; relative polyline paths resolve against `base_dir`.
    pub fn to_scenario(&self, base_dir: &Path) -> Result<Scenario, SimulateError> {
        let params = ProjectionRegistry::bundled().get(&self.projection)?.clone();
        let polyline = match &self.polyline {
            None => default_loop(),
            Some(p) => {
                let tm = TransverseMercator::<f64>::new(&params)?;
                load_polyline(&base_dir.join(p), &tm)
                    .map_err(|e| SimulateError::InvalidScenario(e.to_string()))?
            }
        };
        let len = polyline.length();
        let mut sc = Scenario::with_even_stops(polyline, self.stop_count);
        for s in &mut sc.stops {
            s.duration_s = self.stop_duration_s;
        }
        if !self.stops.is_empty() {
            sc.stops = self
                .stops
                .iter()
                .map(|e| match (e.along_m, e.fraction) {
                    (Some(a), None) => Ok(StopSpec { along_m: a, duration_s: e.duration_s }),
                    (None, Some(f)) => Ok(StopSpec { along_m: f * len, duration_s: e.duration_s }),
                    _ => Err(SimulateError::Config(
                        "each stop needs exactly one of along_m or fraction".into(),
                    )),
                })
                .collect::<Result<_, _>>()?;
        }
        sc.walk_speed = self.walk_speed;
        sc.static_lead_s = self.static_lead_s;
        sc.static_tail_s = self.static_tail_s;
        sc.start = self.start_time;
        sc.projection = params;
        sc.validate()?;
        Ok(sc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_field_protocol() {
        let cfg = SimulationConfig::from_toml_str("").unwrap();
        let sc = cfg.to_scenario(Path::new(".")).unwrap();
        assert_eq!(sc, Scenario::field_protocol());
    }

    #[test]
    fn explicit_stops_and_model() {
        let cfg = SimulationConfig::from_toml_str(
            r#"
            walk_speed = 1.2
            static_lead_s = 60
            stops = [{ fraction = 0.5, duration_s = 20 }, { along_m = 1200.0, duration_s = 15 }]
            [error_model]
            sigma = 0.5
            seed = 9
            "#,
        )
        .unwrap();
        assert_eq!(cfg.error_model.seed, 9);
        assert_eq!(cfg.error_model.correlation_time_s, 30.0);
        let sc = cfg.to_scenario(Path::new(".")).unwrap();
        assert_eq!(sc.stops.len(), 2);
        assert!((sc.stops[0].along_m - sc.polyline.length() / 2.0).abs() < 1e-9);
        assert_eq!(sc.stops[1].duration_s, 15.0);
    }

    #[test]
    fn rejects_unknown_keys_and_ambiguous_stops() {
        assert!(SimulationConfig::from_toml_str("walk_sped = 1").is_err());
        let cfg = SimulationConfig::from_toml_str(
            "stops = [{ fraction = 0.5, along_m = 3.0, duration_s = 20 }]",
        )
        .unwrap();
        assert!(cfg.to_scenario(Path::new(".")).is_err());
        let cfg = SimulationConfig::from_toml_str("projection = \"EPSG:1\"").unwrap();
        assert!(cfg.to_scenario(Path::new(".")).is_err());
    }

    #[test]
    fn polyline_relative_to_config() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("track.csv"),
            "728000,5061000\n728100,5061000\n728100,5061100\n728000,5061100\n728000,5061000\n",
        )
        .unwrap();
        let cfg = SimulationConfig::from_toml_str("polyline = \"track.csv\"").unwrap();
        let sc = cfg.to_scenario(dir.path()).unwrap();
        assert_eq!(sc.polyline.length(), 400.0);
    }
}
