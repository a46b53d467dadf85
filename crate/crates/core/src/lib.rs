//! Smartphone GNSS survey analysis.
//!
//! The crate turns NMEA 0183 logs into projected fixes, measures them against
//! a surveyed reference track, estimates static precision and temporal
//! autocorrelation of the residuals, and finds places where the carrier
//! lingered. A seeded simulator produces synthetic surveys with first-order
//! Gauss-Markov positioning error for end-to-end checks.
//!
//! The numeric modules are generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the crate root fix them to `f64`, which is what the pipeline
//! and the file formats use.

pub mod behaviour;
pub mod error;
pub mod geodesy;
pub mod nmea;
pub mod pipeline;
pub mod quality;
pub mod report;
pub mod scalar;
pub mod simulate;
pub mod track;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use geodesy::{Ellipsoid, ProjectionParams, TransverseMercator};
pub use nmea::{FixQuality, GnssFix, ParseReport, RawSentence};
pub use track::{PlanarPoint, ProjectedFix};

/// Easting/northing in metres.
pub type ProjectedPoint = track::PlanarPoint<f64>;
/// Reference track in projected coordinates.
pub type ReferencePolyline = track::Polyline<f64>;
pub type SegmentLine = track::SegmentLine<f64>;
pub type TrackProjection = track::TrackProjection<f64>;
pub type ResidualSeries = track::ResidualSeries<f64>;
pub type AccuracyStats = track::AccuracyStats<f64>;
pub type StaticWindow = quality::StaticWindow<f64>;
pub type PrecisionReport = quality::PrecisionReport<f64>;
pub type AcfSeries = quality::AcfSeries<f64>;
pub type SpeedSeries = behaviour::SpeedSeries<f64>;
pub type StopEvent = behaviour::StopEvent<f64>;
pub type Hotspot = behaviour::Hotspot<f64>;
/// Transverse Mercator at double precision; the only precision that meets
/// the millimetre contract.
pub type Projection = geodesy::TransverseMercator<f64>;
