use std::collections::BTreeMap;
use std::path::Path;
use std::sync::OnceLock;

use super::{GeodesyError, ProjectionParams};

/// Registry shipped with the crate.
pub const BUNDLED_REGISTRY: &str = include_str!("../../data/projections.toml");

/// Code used when nothing else is configured.
pub const DEFAULT_PROJECTION: &str = "EPSG:25832";

/// Registry code → projection parameters, read from a TOML file.
#[derive(Debug, Clone, Default)]
pub struct ProjectionRegistry {
    entries: BTreeMap<String, ProjectionParams>,
}

impl ProjectionRegistry {
    pub fn bundled() -> &'static ProjectionRegistry {
        static REGISTRY: OnceLock<ProjectionRegistry> = OnceLock::new();
        REGISTRY.get_or_init(|| {
            ProjectionRegistry::from_toml_str(BUNDLED_REGISTRY).expect("bundled registry is valid")
        })
    }

    pub fn from_toml_str(text: &str) -> Result<Self, GeodesyError> {
        let raw: BTreeMap<String, ProjectionParams> =
            toml::from_str(text).map_err(|e| GeodesyError::Registry(e.to_string()))?;
        let mut entries = BTreeMap::new();
        for (code, mut params) in raw {
            params.registry_code = code.clone();
            params.validate()?;
            entries.insert(code, params);
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self, GeodesyError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| GeodesyError::Registry(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn get(&self, code: &str) -> Result<&ProjectionParams, GeodesyError> {
        self.entries
            .get(code)
            .ok_or_else(|| GeodesyError::UnknownProjection(code.to_string()))
    }

    pub fn codes(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_zone_32n_matches_registry_values() {
        let p = ProjectionRegistry::bundled().get("EPSG:25832").unwrap();
        assert_eq!(p.semi_major_axis, 6_378_137.0);
        assert_eq!(p.inverse_flattening, 298.257_222_101);
        assert_eq!(p.central_meridian, 9.0);
        assert_eq!(p.latitude_of_origin, 0.0);
        assert_eq!(p.scale_factor, 0.9996);
        assert_eq!(p.false_easting, 500_000.0);
        assert_eq!(p.false_northing, 0.0);
        assert_eq!(p.registry_code, "EPSG:25832");
    }

    #[test]
    fn unknown_code() {
        assert!(matches!(
            ProjectionRegistry::bundled().get("EPSG:4326"),
            Err(GeodesyError::UnknownProjection(_))
        ));
    }

    #[test]
    fn invalid_entry_rejected() {
        let text = r#"
            ["X:1"]
            semi_major_axis = 6378137.0
            inverse_flattening = 298.0
            central_meridian = 0.0
            latitude_of_origin = 0.0
            scale_factor = 2.0
            false_easting = 0.0
            false_northing = 0.0
        "#;
        assert!(matches!(
            ProjectionRegistry::from_toml_str(text),
            Err(GeodesyError::InvalidParams(_))
        ));
        assert!(ProjectionRegistry::from_toml_str("not toml [").is_err());
    }
}
