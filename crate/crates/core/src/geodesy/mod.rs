//! Ellipsoids, projection parameters and the transverse Mercator map.
//!
//! ETRS89 and WGS84 are treated as the same datum. Their offset is a few
//! decimetres, an order of magnitude below smartphone positioning error.

mod registry;
mod tmerc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

pub use registry::{ProjectionRegistry, BUNDLED_REGISTRY, DEFAULT_PROJECTION};
pub use tmerc::TransverseMercator;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeodesyError {
    #[error("({lat}, {lon}) is outside the projection window of {code}")]
    OutOfZone { lat: f64, lon: f64, code: String },
    #[error("invalid projection parameters: {0}")]
    InvalidParams(String),
    #[error("unknown projection {0:?}")]
    UnknownProjection(String),
    #[error("registry: {0}")]
    Registry(String),
}

impl GeodesyError {
    pub fn kind(&self) -> &'static str {
        match self {
            GeodesyError::OutOfZone { .. } => "OutOfZone",
            GeodesyError::InvalidParams(_) => "InvalidParams",
            GeodesyError::UnknownProjection(_) => "UnknownProjection",
            GeodesyError::Registry(_) => "Registry",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipsoid<T> {
    pub semi_major_axis: T,
    pub inverse_flattening: T,
}

impl<T: Scalar> Ellipsoid<T> {
    pub fn new(semi_major_axis: T, inverse_flattening: T) -> Self {
        Self {
            semi_major_axis,
            inverse_flattening,
        }
    }

    pub fn grs80() -> Self {
        Self::new(T::lit(6_378_137.0), T::lit(298.257_222_101))
    }

    pub fn wgs84() -> Self {
        Self::new(T::lit(6_378_137.0), T::lit(298.257_223_563))
    }

    pub fn flattening(&self) -> T {
        T::one() / self.inverse_flattening
    }

    /// First eccentricity squared.
    pub fn e2(&self) -> T {
        let f = self.flattening();
        f * (T::lit(2.0) - f)
    }

    /// Third flattening n = f / (2 - f).
    pub fn third_flattening(&self) -> T {
        let f = self.flattening();
        f / (T::lit(2.0) - f)
    }

    /// Radius of curvature in the meridian at geodetic latitude `phi` (radians).
    pub fn meridian_radius(&self, phi: T) -> T {
        let e2 = self.e2();
        let w = T::one() - e2 * phi.sin().powi(2);
        self.semi_major_axis * (T::one() - e2) / (w * w.sqrt())
    }

    /// Radius of curvature in the prime vertical at `phi` (radians).
    pub fn prime_vertical_radius(&self, phi: T) -> T {
        let w = T::one() - self.e2() * phi.sin().powi(2);
        self.semi_major_axis / w.sqrt()
    }
}

/// Transverse Mercator definition as stored in the registry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionParams {
    #[serde(default)]
    pub registry_code: String,
    #[serde(default)]
    pub name: Option<String>,
    pub semi_major_axis: f64,
    pub inverse_flattening: f64,
    pub central_meridian: f64,
    pub latitude_of_origin: f64,
    pub scale_factor: f64,
    pub false_easting: f64,
    pub false_northing: f64,
}

impl ProjectionParams {
    /// ETRS89 / UTM zone 32N from the bundled registry.
    pub fn utm32n_etrs89() -> Self {
        ProjectionRegistry::bundled()
            .get(DEFAULT_PROJECTION)
            .expect("bundled registry carries the default projection")
            .clone()
    }

    pub fn validate(&self) -> Result<(), GeodesyError> {
        let bad = |m: &str| Err(GeodesyError::InvalidParams(format!("{}: {m}", self.registry_code)));
        let all = [
            self.semi_major_axis,
            self.inverse_flattening,
            self.central_meridian,
            self.latitude_of_origin,
            self.scale_factor,
            self.false_easting,
            self.false_northing,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return bad("non-finite value");
        }
        if self.semi_major_axis <= 0.0 {
            return bad("semi-major axis must be positive");
        }
        if self.inverse_flattening <= 0.0 {
            return bad("inverse flattening must be positive");
        }
        if !(self.scale_factor > 0.0 && self.scale_factor <= 1.001) {
            return bad("scale factor must be in (0, 1.001]");
        }
        if self.latitude_of_origin.abs() >= 84.0 || self.central_meridian.abs() > 180.0 {
            return bad("origin out of range");
        }
        Ok(())
    }

    pub fn ellipsoid<T: Scalar>(&self) -> Ellipsoid<T> {
        Ellipsoid::new(
            T::lit(self.semi_major_axis),
            T::lit(self.inverse_flattening),
        )
    }
}

/// Easting/northing pair in a projected frame, metres.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PlanarPoint<T> {
    pub easting: T,
    pub northing: T,
}

impl<T: Scalar> PlanarPoint<T> {
    pub fn new(easting: T, northing: T) -> Self {
        Self { easting, northing }
    }

    pub fn is_finite(&self) -> bool {
        self.easting.is_finite() && self.northing.is_finite()
    }

    pub fn distance(&self, other: &Self) -> T {
        planar_distance(self, other)
    }

    pub fn offset(&self, de: T, dn: T) -> Self {
        Self::new(self.easting + de, self.northing + dn)
    }
}

/// Euclidean distance in the projected plane.
pub fn planar_distance<T: Scalar>(a: &PlanarPoint<T>, b: &PlanarPoint<T>) -> T {
    (a.easting - b.easting).hypot(a.northing - b.northing)
}

/// Projects with a one-off [`TransverseMercator`]. Build the projection once
/// when converting many points.
pub fn geodetic_to_projected<T: Scalar>(
    lat: T,
    lon: T,
    params: &ProjectionParams,
) -> Result<PlanarPoint<T>, GeodesyError> {
    TransverseMercator::new(params)?.forward(lat, lon)
}

pub fn projected_to_geodetic<T: Scalar>(
    pt: &PlanarPoint<T>,
    params: &ProjectionParams,
) -> Result<(T, T), GeodesyError> {
    TransverseMercator::new(params)?.inverse(pt)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planar_distance_examples() {
        let p = PlanarPoint::new(3.0, 4.0);
        assert_eq!(planar_distance(&p, &p), 0.0);
        assert_eq!(planar_distance(&PlanarPoint::new(0.0, 0.0), &p), 5.0);
        assert_eq!(
            planar_distance(
                &PlanarPoint::new(500_000.0, 5_056_000.0),
                &PlanarPoint::new(500_010.0, 5_056_000.0)
            ),
            10.0
        );
    }

    #[test]
    fn validation_rejects_bad_params() {
        let good = ProjectionParams::utm32n_etrs89();
        assert!(good.validate().is_ok());
        for mutate in [
            (|p: &mut ProjectionParams| p.semi_major_axis = 0.0) as fn(&mut ProjectionParams),
            |p| p.inverse_flattening = -1.0,
            |p| p.scale_factor = 1.01,
            |p| p.scale_factor = 0.0,
            |p| p.false_easting = f64::NAN,
        ] {
            let mut p = good.clone();
            mutate(&mut p);
            assert!(matches!(p.validate(), Err(GeodesyError::InvalidParams(_))));
        }
    }

    #[test]
    fn ellipsoid_radii() {
        let e = Ellipsoid::<f64>::grs80();
        // at the equator N = a, M = a(1 - e2)
        assert!((e.prime_vertical_radius(0.0) - 6_378_137.0).abs() < 1e-6);
        assert!((e.meridian_radius(0.0) - 6_378_137.0 * (1.0 - e.e2())).abs() < 1e-6);
    }
}
