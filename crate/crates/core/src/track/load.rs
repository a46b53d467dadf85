use std::path::Path;

use serde_json::Value;

use super::{PlanarPoint, Polyline, TrackError};
use crate::geodesy::TransverseMercator;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolylineFormat {
    GeoJson,
    Csv,
}

impl PolylineFormat {
    /// Guesses from the extension, then from the first non-blank character.
    pub fn detect(path: &Path, text: &str) -> Self {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase) {
            Some(ext) if ext == "geojson" || ext == "json" => PolylineFormat::GeoJson,
            Some(ext) if ext == "csv" => PolylineFormat::Csv,
            _ if text.trim_start().starts_with('{') => PolylineFormat::GeoJson,
            _ => PolylineFormat::Csv,
        }
    }
}

/// Reads a reference track from GeoJSON or headerless two-column CSV.
/// Geodetic input is projected with `tm`; planar input is taken as is.
pub fn load_polyline(
    path: &Path,
    tm: &TransverseMercator<f64>,
) -> Result<Polyline<f64>, TrackError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| TrackError::Read(format!("{}: {e}", path.display())))?;
    match PolylineFormat::detect(path, &text) {
        PolylineFormat::GeoJson => parse_polyline_geojson(&text, tm),
        PolylineFormat::Csv => parse_polyline_csv(&text, tm),
    }
}

fn malformed(msg: impl Into<String>) -> TrackError {
    TrackError::MalformedGeometry(msg.into())
}

/// Rows are `lat,lon` when every value fits geodetic ranges, else `easting,northing`.
pub fn parse_polyline_csv(
    text: &str,
    tm: &TransverseMercator<f64>,
) -> Result<Polyline<f64>, TrackError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| malformed(format!("row {}: {e}", i + 1)))?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        if rec.len() != 2 {
            return Err(malformed(format!("row {}: expected 2 columns", i + 1)));
        }
        let parse = |s: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| malformed(format!("row {}: non-numeric {s:?}", i + 1)))
        };
        rows.push((parse(&rec[0])?, parse(&rec[1])?));
    }
    let geodetic = rows.iter().all(|(a, b)| a.abs() <= 90.0 && b.abs() <= 180.0);
    let vertices = rows
        .into_iter()
        .map(|(a, b)| {
            if geodetic {
                Ok(tm.forward(a, b)?)
            } else {
                Ok(PlanarPoint::new(a, b))
            }
        })
        .collect::<Result<Vec<_>, TrackError>>()?;
    Polyline::from_vertices(vertices)
}

fn find_geometry(v: &Value) -> Option<&Value> {
    match v.get("type")?.as_str()? {
        "FeatureCollection" => v
            .get("features")?
            .as_array()?
            .iter()
            .find_map(find_geometry),
        "Feature" => find_geometry(v.get("geometry")?),
        "LineString" | "Polygon" => Some(v),
        _ => None,
    }
}

fn position(v: &Value) -> Result<(f64, f64), TrackError> {
    let arr = v
        .as_array()
        .filter(|a| a.len() >= 2)
        .ok_or_else(|| malformed("position must be an array of at least two numbers"))?;
    match (arr[0].as_f64(), arr[1].as_f64()) {
        (Some(x), Some(y)) if x.is_finite() && y.is_finite() => Ok((x, y)),
        _ => Err(malformed("non-numeric position")),
    }
}

/// LineString, or the outer ring of a Polygon, as a bare geometry or inside
/// a Feature / FeatureCollection (first usable feature).
pub fn parse_polyline_geojson(
    text: &str,
    tm: &TransverseMercator<f64>,
) -> Result<Polyline<f64>, TrackError> {
    let doc: Value = serde_json::from_str(text).map_err(|e| malformed(e.to_string()))?;
    let geom = find_geometry(&doc).ok_or_else(|| malformed("no LineString or Polygon found"))?;
    let coords = geom
        .get("coordinates")
        .and_then(Value::as_array)
        .ok_or_else(|| malformed("missing coordinates"))?;
    let ring = if geom["type"] == "Polygon" {
        coords
            .first()
            .and_then(Value::as_array)
            .ok_or_else(|| malformed("polygon without outer ring"))?
    } else {
        coords
    };
    let xy = ring.iter().map(position).collect::<Result<Vec<_>, _>>()?;
    let geodetic = xy.iter().all(|(x, y)| x.abs() <= 180.0 && y.abs() <= 90.0);
    let vertices = xy
        .into_iter()
        .map(|(x, y)| {
            if geodetic {
                Ok(tm.forward(y, x)?)
            } else {
                Ok(PlanarPoint::new(x, y))
            }
        })
        .collect::<Result<Vec<_>, TrackError>>()?;
    Polyline::from_vertices(vertices)
}
