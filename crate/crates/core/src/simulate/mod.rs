//! Synthetic surveys with first-order Gauss-Markov positioning error.
//!
//! Randomness comes from ChaCha8 (`rand_chacha`) seeded with
//! `seed_from_u64`, and normal deviates from `rand_distr::StandardNormal`.
//! Both are specified independently of the platform, so a seed yields the
//! same survey everywhere.

mod config;
mod emit;
mod noise;
mod scenario;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geodesy::GeodesyError;

pub use config::{SimulationConfig, StopConfigEntry};
pub use emit::{emit_nmea, EMITTER_NAME};
pub use noise::GaussMarkov;
pub use scenario::{
    default_loop, simulate_survey, Scenario, SimulatedSurvey, StopSpec, TruthStop, DEFAULT_START,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimulateError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("invalid error model: {0}")]
    InvalidModel(String),
    #[error(transparent)]
    Geodesy(#[from] GeodesyError),
    #[error("simulation config: {0}")]
    Config(String),
}

impl SimulateError {
    pub fn kind(&self) -> &'static str {
        match self {
            SimulateError::InvalidScenario(_) => "InvalidScenario",
            SimulateError::InvalidModel(_) => "InvalidModel",
            SimulateError::Geodesy(e) => e.kind(),
            SimulateError::Config(_) => "Config",
        }
    }
}

/// Per-axis stationary AR(1) error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ErrorModel {
    /// Stationary standard deviation per axis, m.
    pub sigma: f64,
    pub correlation_time_s: f64,
    pub seed: u64,
    /// Snap output to the `ddmm.mmmm` grid.
    pub quantize: bool,
}

impl Default for ErrorModel {
    fn default() -> Self {
        Self {
            sigma: 1.2,
            correlation_time_s: 30.0,
            seed: 0,
            quantize: true,
        }
    }
}

impl ErrorModel {
    pub fn validate(&self) -> Result<(), SimulateError> {
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(SimulateError::InvalidModel("sigma must be >= 0".into()));
        }
        if !(self.correlation_time_s > 0.0) {
            return Err(SimulateError::InvalidModel(
                "correlation_time_s must be > 0".into(),
            ));
        }
        Ok(())
    }
}
