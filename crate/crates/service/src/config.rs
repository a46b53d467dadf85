use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use gardentrack_core::behaviour::DEFAULT_MERGE_RADIUS_M;
use gardentrack_core::pipeline::PipelineConfig;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ServiceError};
use crate::metadata::HeaderPatterns;

pub const DEFAULT_MAX_UPLOAD_BYTES: usize = 32 * 1024 * 1024;

/// `[service]` table of the shared TOML config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub catalog_root: PathBuf,
    pub bind: SocketAddr,
    /// Reference track; without it accuracy and residual ACF are reported unavailable.
    pub polyline: Option<PathBuf>,
    /// Surveys processed at the same time.
    pub worker_budget: usize,
    /// Static bearer token; `None` leaves the API open.
    pub token: Option<String>,
    pub max_upload_bytes: usize,
    pub merge_radius_m: f64,
    /// Directory the bot webhook may read `file_path` references from.
    pub bot_inbox: Option<PathBuf>,
    pub headers: HeaderPatterns,
    /// Read from the top-level `[pipeline]` table shared with the CLI.
    #[serde(skip)]
    pub pipeline: PipelineConfig,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            catalog_root: PathBuf::from("catalog"),
            bind: SocketAddr::from(([127, 0, 0, 1], 8080)),
            polyline: None,
            worker_budget: 2,
            token: None,
            max_upload_bytes: DEFAULT_MAX_UPLOAD_BYTES,
            merge_radius_m: DEFAULT_MERGE_RADIUS_M,
            bot_inbox: None,
            headers: HeaderPatterns::default(),
            pipeline: PipelineConfig::default(),
        }
    }
}

#[derive(Deserialize)]
struct Envelope {
    #[serde(default)]
    service: ServiceConfig,
    #[serde(default)]
    pipeline: PipelineConfig,
}

impl ServiceConfig {
    /// Reads the `[service]` and `[pipeline]` tables; other top-level tables are ignored.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let env: Envelope =
            toml::from_str(text).map_err(|e| ServiceError::Config(e.message().to_string()))?;
        Ok(ServiceConfig {
            pipeline: env.pipeline,
            ..env.service
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| ServiceError::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text)?;
        cfg.resolve_relative(path.parent().unwrap_or(Path::new(".")));
        Ok(cfg)
    }

    /// Paths in a config file are relative to that file.
    pub fn resolve_relative(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.catalog_root);
        if let Some(p) = self.polyline.as_mut() {
            fix(p);
        }
        if let Some(p) = self.bot_inbox.as_mut() {
            fix(p);
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.worker_budget == 0 {
            return Err(ServiceError::Config("worker_budget must be >= 1".into()));
        }
        if !(self.merge_radius_m > 0.0 && self.merge_radius_m.is_finite()) {
            return Err(ServiceError::Config("merge_radius_m must be > 0".into()));
        }
        if self.max_upload_bytes == 0 {
            return Err(ServiceError::Config("max_upload_bytes must be > 0".into()));
        }
        if matches!(&self.token, Some(t) if t.is_empty()) {
            return Err(ServiceError::Config("token must not be empty".into()));
        }
        if let Some(p) = &self.polyline {
            if !p.is_file() {
                return Err(ServiceError::Config(format!(
                    "polyline {} does not exist",
                    p.display()
                )));
            }
        }
        self.headers.compile()?;
        self.pipeline.validate()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        assert_eq!(ServiceConfig::from_toml_str("").unwrap(), ServiceConfig::default());
    }

    #[test]
    fn nested_tables() {
        let cfg = ServiceConfig::from_toml_str(
            r#"
            [simulate]
            seed = 4

            [service]
            worker_budget = 4
            token = "s3cret"

            [pipeline.stops]
            speed_threshold = 0.8

            [service.headers]
            device_model = ['^#\s*phone=(?P<value>.+)$']
            "#,
        )
        .unwrap();
        assert_eq!(cfg.worker_budget, 4);
        assert_eq!(cfg.token.as_deref(), Some("s3cret"));
        assert_eq!(cfg.pipeline.stops.speed_threshold, 0.8);
        assert_eq!(cfg.headers.device_model.len(), 1);
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(ServiceConfig::from_toml_str("[service]\nworkers = 3\n").is_err());
    }

    #[test]
    fn zero_workers_rejected() {
        let cfg = ServiceConfig {
            worker_budget: 0,
            ..Default::default()
        };
        assert_eq!(cfg.validate().unwrap_err().kind(), "Config");
    }

    #[test]
    fn relative_paths_follow_the_file() {
        let mut cfg = ServiceConfig {
            polyline: Some("track.csv".into()),
            ..Default::default()
        };
        cfg.resolve_relative(Path::new("/srv/garden"));
        assert_eq!(cfg.catalog_root, Path::new("/srv/garden/catalog"));
        assert_eq!(cfg.polyline.unwrap(), Path::new("/srv/garden/track.csv"));
    }
}
