use std::path::{Path, PathBuf};

use gardentrack_core::behaviour::DEFAULT_MERGE_RADIUS_M;
use gardentrack_core::pipeline::PipelineConfig;
use gardentrack_core::simulate::SimulationConfig;
use serde::Deserialize;

use crate::args::{AcfFlags, Common, Format, StopFlags, WindowFlags};
use crate::error::CliError;

/// `[run]` table: settings that only the CLI reads.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub polyline: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub format: Option<Format>,
    pub merge_radius_m: Option<f64>,
    pub workers: Option<usize>,
}

/// The shared config file. `[service]` is validated by the service itself.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub run: RunSection,
    pub pipeline: PipelineConfig,
    pub simulate: SimulationConfig,
    pub service: Option<toml::Table>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ConfigFile {
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self, CliError> {
        let mut cfg: ConfigFile =
            toml::from_str(text).map_err(|e| CliError::config(e.message().to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Ok(ConfigFile {
                base_dir: PathBuf::from("."),
                ..Default::default()
            }),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::config(format!("{}: {e}", p.display())))?;
                Self::from_toml_str(&text, p.parent().unwrap_or(Path::new(".")))
            }
        }
    }

    /// Config-file paths are relative to the config file.
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_relative() {
            self.base_dir.join(p)
        } else {
            p.to_path_buf()
        }
    }
}

/// Everything one command needs, assembled from defaults, the config file
/// and flags (in increasing priority) and validated before any work.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub inputs: Vec<PathBuf>,
    pub polyline: Option<PathBuf>,
    pub pipeline: PipelineConfig,
    pub merge_radius_m: f64,
    pub output_dir: PathBuf,
    pub format: Format,
    pub workers: usize,
}

#[derive(Default)]
pub struct Overrides<'a> {
    pub common: Option<&'a Common>,
    pub polyline: Option<&'a PathBuf>,
    pub stops: Option<&'a StopFlags>,
    pub windows: Option<&'a WindowFlags>,
    pub acf: Option<&'a AcfFlags>,
    pub merge_radius_m: Option<f64>,
    pub format: Option<Format>,
    pub workers: Option<usize>,
}

impl RunConfig {
    pub fn assemble(file: &ConfigFile, inputs: &[PathBuf], o: &Overrides) -> Result<Self, CliError> {
        let mut pipeline = file.pipeline.clone();
        if let Some(c) = o.common {
            if let Some(p) = &c.projection {
                pipeline.projection = p.clone();
            }
            if c.fallback_date.is_some() {
                pipeline.fallback_date = c.fallback_date;
            }
        }
        if let Some(s) = o.stops {
            if let Some(v) = s.speed_threshold {
                pipeline.stops.speed_threshold = v;
            }
            if let Some(v) = s.min_duration {
                pipeline.stops.min_duration_s = v;
            }
            if let Some(v) = s.filter_window {
                pipeline.stops.filter_window = Some(v);
            }
            if s.no_filter {
                pipeline.stops.filter_window = None;
            }
        }
        if let Some(w) = o.windows {
            if let Some(v) = w.window_s {
                pipeline.static_windows.duration_s = v;
            }
            if let Some(v) = w.placement {
                pipeline.static_windows.placement = v.into();
            }
            if let Some(v) = w.epochs {
                pipeline.static_windows.epoch_limit = Some(v);
            }
        }
        if let Some(a) = o.acf {
            if let Some(v) = a.max_lag {
                pipeline.max_lag_s = v;
            }
            if let Some(v) = a.mode {
                pipeline.acf_mode = v.into();
            }
        }
        let polyline = o
            .polyline
            .cloned()
            .or_else(|| file.run.polyline.as_ref().map(|p| file.resolve(p)));
        let output_dir = o
            .common
            .and_then(|c| c.out_dir.clone())
            .or_else(|| file.run.output_dir.as_ref().map(|p| file.resolve(p)))
            .unwrap_or_else(|| PathBuf::from("."));
        let cfg = RunConfig {
            inputs: inputs.to_vec(),
            polyline,
            pipeline,
            merge_radius_m: o
                .merge_radius_m
                .or(file.run.merge_radius_m)
                .unwrap_or(DEFAULT_MERGE_RADIUS_M),
            output_dir,
            format: o.format.or(file.run.format).unwrap_or(Format::Geojson),
            workers: o.workers.or(file.run.workers).unwrap_or_else(default_workers),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        for p in &self.inputs {
            if !p.is_file() {
                return Err(CliError::config(format!("input {} does not exist", p.display())));
            }
        }
        if let Some(p) = &self.polyline {
            if !p.is_file() {
                return Err(CliError::config(format!("polyline {} does not exist", p.display())));
            }
        }
        if !(self.merge_radius_m > 0.0 && self.merge_radius_m.is_finite()) {
            return Err(CliError::config("merge radius must be > 0"));
        }
        if self.workers == 0 {
            return Err(CliError::config("workers must be >= 1"));
        }
        self.pipeline.validate()?;
        Ok(())
    }
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}
