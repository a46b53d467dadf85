//! Plot-ready CSV and GeoJSON output. All writers are deterministic: the same
//! input always gives the same bytes.

use std::fs;
use std::io::Write;
use std::sync::atomic::{AtomicU64, Ordering};
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use serde_json::{json, Value};

use crate::behaviour::{Hotspot, StopEvent};
use crate::error::{Error, Result};
use crate::geodesy::{PlanarPoint, TransverseMercator};
use crate::nmea::{FixQuality, GeoCoord, GnssFix};
use crate::pipeline::{Section, SurveyAnalysis};
use crate::quality::{AcfSeries, PrecisionReport, WindowLabel};
use crate::track::{AccuracyStats, ProjectedFix};

pub const REPORT_JSON: &str = "report.json";
pub const PRECISION_CSV: &str = "precision.csv";
pub const ACF_EAST_CSV: &str = "acf_east.csv";
pub const ACF_NORTH_CSV: &str = "acf_north.csv";
pub const ELLIPSES_CSV: &str = "ellipses.csv";
pub const STOPS_GEOJSON: &str = "stops.geojson";
pub const STOPS_CSV: &str = "stops.csv";

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

/// Writes through a synced sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::Config(format!("{} has no file name", path.display())))?;
    let tmp = path.with_file_name(format!(
        ".{}.tmp-{}-{}",
        name.to_string_lossy(),
        std::process::id(),
        TMP_COUNTER.fetch_add(1, Ordering::Relaxed)
    ));
    let written = fs::File::create(&tmp).and_then(|mut f| {
        f.write_all(bytes)?;
        f.sync_all()
    });
    if let Err(e) = written {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(&tmp, e));
    }
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

fn m(v: f64) -> String {
    format!("{v:.6}")
}

fn label(l: WindowLabel) -> &'static str {
    match l {
        WindowLabel::SurveyStart => "survey_start",
        WindowLabel::SurveyEnd => "survey_end",
        WindowLabel::Custom => "custom",
    }
}

pub fn precision_csv(reports: &[PrecisionReport<f64>]) -> Vec<u8> {
    csv_bytes(
        &["window", "start", "end", "n", "sigma_east_m", "sigma_north_m", "mean_easting", "mean_northing"],
        reports.iter().map(|r| {
            vec![
                label(r.label).into(),
                r.start.to_rfc3339(),
                r.end.to_rfc3339(),
                r.n.to_string(),
                m(r.sigma_east),
                m(r.sigma_north),
                m(r.mean.easting),
                m(r.mean.northing),
            ]
        }),
    )
}

pub fn acf_csv(series: &AcfSeries<f64>) -> Vec<u8> {
    let bound = m(series.significance_bound);
    csv_bytes(
        &["lag_s", "value", "significance_bound"],
        series
            .lags
            .iter()
            .zip(&series.values)
            .map(|(l, v)| vec![l.to_string(), format!("{v:.9}"), bound.clone()]),
    )
}

/// One row per (subset, level).
pub fn ellipses_csv(sets: &[(&str, &AccuracyStats<f64>)]) -> Vec<u8> {
    csv_bytes(
        &["subset", "level", "scale", "semi_major_m", "semi_minor_m", "orientation_deg", "rmse_m", "n"],
        sets.iter().flat_map(|(name, st)| {
            st.ellipses.iter().map(move |e| {
                vec![
                    name.to_string(),
                    format!("{:.2}", e.level),
                    m(e.scale),
                    m(e.semi_major),
                    m(e.semi_minor),
                    m(e.orientation_deg),
                    m(st.rmse),
                    st.n.to_string(),
                ]
            })
        }),
    )
}

pub fn stops_csv(events: &[StopEvent<f64>]) -> Vec<u8> {
    csv_bytes(
        &["survey_id", "start", "end", "duration_s", "easting", "northing", "dispersion_m", "n_fixes"],
        events.iter().map(|e| {
            vec![
                e.survey_id.clone(),
                e.start.to_rfc3339(),
                e.end.to_rfc3339(),
                format!("{:.3}", e.duration_s),
                m(e.centroid.easting),
                m(e.centroid.northing),
                m(e.dispersion),
                e.n_fixes.to_string(),
            ]
        }),
    )
}

pub fn hotspots_csv(hotspots: &[Hotspot<f64>]) -> Vec<u8> {
    csv_bytes(
        &["hotspot", "easting", "northing", "radius_m", "total_dwell_s", "survey_count", "member_count"],
        hotspots.iter().enumerate().map(|(i, h)| {
            vec![
                i.to_string(),
                m(h.centroid.easting),
                m(h.centroid.northing),
                m(h.radius),
                format!("{:.3}", h.total_dwell_s),
                h.survey_count.to_string(),
                h.members.len().to_string(),
            ]
        }),
    )
}

fn round(v: f64, digits: i32) -> f64 {
    let s = 10f64.powi(digits);
    (v * s).round() / s
}

/// GeoJSON position `[lon, lat]`; falls back to `null` geometry when the
/// point cannot be inverted.
fn point_geometry(p: &PlanarPoint<f64>, tm: &TransverseMercator<f64>) -> Value {
    match tm.inverse(p) {
        Ok((lat, lon)) => json!({"type": "Point", "coordinates": [round(lon, 9), round(lat, 9)]}),
        Err(_) => Value::Null,
    }
}

fn to_bytes(v: &Value) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(v).expect("json value");
    out.push(b'\n');
    out
}

pub fn stops_geojson(events: &[StopEvent<f64>], tm: &TransverseMercator<f64>) -> Vec<u8> {
    let features: Vec<Value> = events
        .iter()
        .map(|e| {
            json!({
                "type": "Feature",
                "geometry": point_geometry(&e.centroid, tm),
                "properties": {
                    "survey_id": e.survey_id,
                    "start": e.start.to_rfc3339(),
                    "end": e.end.to_rfc3339(),
                    "duration_s": e.duration_s,
                    "dispersion_m": round(e.dispersion, 6),
                    "easting": round(e.centroid.easting, 6),
                    "northing": round(e.centroid.northing, 6),
                    "n_fixes": e.n_fixes,
                }
            })
        })
        .collect();
    to_bytes(&json!({"type": "FeatureCollection", "features": features}))
}

pub fn hotspots_geojson(hotspots: &[Hotspot<f64>], tm: &TransverseMercator<f64>) -> Vec<u8> {
    let features: Vec<Value> = hotspots
        .iter()
        .map(|h| {
            let mut surveys: Vec<&str> = h.members.iter().map(|e| e.survey_id.as_str()).collect();
            surveys.sort_unstable();
            surveys.dedup();
            json!({
                "type": "Feature",
                "geometry": point_geometry(&h.centroid, tm),
                "properties": {
                    "total_dwell_s": h.total_dwell_s,
                    "survey_count": h.survey_count,
                    "member_count": h.members.len(),
                    "radius_m": round(h.radius, 6),
                    "easting": round(h.centroid.easting, 6),
                    "northing": round(h.centroid.northing, 6),
                    "surveys": surveys,
                }
            })
        })
        .collect();
    to_bytes(&json!({"type": "FeatureCollection", "features": features}))
}

const FIXES_HEADER: [&str; 9] = [
    "timestamp", "latitude", "longitude", "fix_quality", "satellites", "hdop", "altitude_m",
    "easting", "northing",
];

/// One row per epoch; planar columns are empty for excluded epochs. Geodetic
/// values use the shortest exact decimal form so [`read_fixes_csv`] restores
/// them bit for bit.
pub fn fixes_csv(fixes: &[GnssFix], projected: &[ProjectedFix<f64>]) -> Vec<u8> {
    let exact = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let planar = |v: Option<f64>| v.map(m).unwrap_or_default();
    csv_bytes(
        &FIXES_HEADER,
        fixes.iter().zip(projected).map(|(f, p)| {
            vec![
                f.timestamp.to_rfc3339_opts(SecondsFormat::AutoSi, true),
                exact(f.coord.map(|c| c.latitude)),
                exact(f.coord.map(|c| c.longitude)),
                f.fix_quality.code().to_string(),
                f.satellites_used.to_string(),
                exact(f.hdop),
                exact(f.altitude_m),
                planar(p.position.map(|q| q.easting)),
                planar(p.position.map(|q| q.northing)),
            ]
        }),
    )
}

/// Reads the output of [`fixes_csv`]; planar columns are ignored.
pub fn read_fixes_csv(text: &str) -> Result<Vec<GnssFix>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| Error::Csv(e.to_string()))?.clone();
    if header.iter().take(7).ne(FIXES_HEADER.iter().take(7).copied()) {
        return Err(Error::Csv(format!("unexpected header {:?}", header.iter().collect::<Vec<_>>())));
    }
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| Error::Csv(format!("row {row}: {e}")))?;
        let bad = |col: &str, e: &dyn std::fmt::Display| Error::Csv(format!("row {row}, {col}: {e}"));
        let num = |idx: usize, col: &str| -> Result<Option<f64>> {
            match rec.get(idx).unwrap_or_default() {
                "" => Ok(None),
                v => v.parse::<f64>().map(Some).map_err(|e| bad(col, &e)),
            }
        };
        let timestamp = DateTime::parse_from_rfc3339(rec.get(0).unwrap_or_default())
            .map_err(|e| bad("timestamp", &e))?
            .with_timezone(&Utc);
        let coord = match (num(1, "latitude")?, num(2, "longitude")?) {
            (Some(latitude), Some(longitude)) => Some(GeoCoord { latitude, longitude }),
            (None, None) => None,
            _ => return Err(Error::Csv(format!("row {row}: latitude and longitude must both be set"))),
        };
        let code: u8 = rec.get(3).unwrap_or_default().parse().map_err(|e| bad("fix_quality", &e))?;
        let satellites_used: u8 = rec.get(4).unwrap_or_default().parse().map_err(|e| bad("satellites", &e))?;
        out.push(GnssFix {
            timestamp,
            coord,
            fix_quality: FixQuality::from_code(code),
            satellites_used,
            hdop: num(5, "hdop")?,
            altitude_m: num(6, "altitude_m")?,
        });
    }
    if out.is_empty() {
        return Err(Error::Csv("no rows".into()));
    }
    Ok(out)
}

pub fn analysis_json(a: &SurveyAnalysis) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(a).expect("serializable analysis");
    out.push(b'\n');
    out
}

/// Writes the report bundle into `dir` (created if missing) and returns the
/// file names written, in a fixed order.
pub fn write_bundle(
    dir: &Path,
    a: &SurveyAnalysis,
    tm: &TransverseMercator<f64>,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files: Vec<(&str, Vec<u8>)> = vec![(REPORT_JSON, analysis_json(a))];
    if let Some(p) = a.precision.available() {
        files.push((PRECISION_CSV, precision_csv(p)));
    }
    if let Some(acf) = a.acf.available() {
        files.push((ACF_EAST_CSV, acf_csv(&acf.east)));
        files.push((ACF_NORTH_CSV, acf_csv(&acf.north)));
    }
    if let Section::Available { value } = &a.accuracy {
        let mut sets = vec![("all_epochs", &value.all_epochs)];
        if let Some(ex) = &value.excluding_static {
            sets.push(("excluding_static", ex));
        }
        files.push((ELLIPSES_CSV, ellipses_csv(&sets)));
    }
    files.push((STOPS_GEOJSON, stops_geojson(&a.stops, tm)));
    files.push((STOPS_CSV, stops_csv(&a.stops)));
    let mut written = Vec::with_capacity(files.len());
    for (name, bytes) in files {
        let path = dir.join(name);
        write_atomic(&path, &bytes)?;
        written.push(PathBuf::from(name));
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodesy::ProjectionParams;
    use crate::pipeline::{analyze_text, PipelineConfig};
    use crate::simulate::{emit_nmea, simulate_survey, ErrorModel, Scenario};
    use chrono::{TimeZone, Utc};

    fn tm() -> TransverseMercator<f64> {
        TransverseMercator::new(&ProjectionParams::utm32n_etrs89()).unwrap()
    }

    fn event() -> StopEvent<f64> {
        let t = Utc.timestamp_opt(1_623_747_600, 0).unwrap();
        StopEvent {
            survey_id: "a".into(),
            start: t,
            end: t + chrono::Duration::seconds(12),
            duration_s: 12.0,
            centroid: PlanarPoint::new(728_055.525_435, 5_061_775.784_038),
            dispersion: 0.25,
            n_fixes: 13,
        }
    }

    #[test]
    fn stops_geojson_is_lon_lat() {
        let v: Value = serde_json::from_slice(&stops_geojson(&[event()], &tm())).unwrap();
        let c = &v["features"][0]["geometry"]["coordinates"];
        assert!((c[0].as_f64().unwrap() - 11.928).abs() < 1e-7);
        assert!((c[1].as_f64().unwrap() - 45.672).abs() < 1e-7);
        assert_eq!(v["features"][0]["properties"]["duration_s"], 12.0);
    }

    #[test]
    fn csv_layouts() {
        let text = String::from_utf8(stops_csv(&[event()])).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next(),
            Some("survey_id,start,end,duration_s,easting,northing,dispersion_m,n_fixes")
        );
        assert!(lines.next().unwrap().starts_with("a,2021-06-15T09:00:00+00:00,"));
    }

    #[test]
    fn bundle_is_byte_identical_across_runs() {
        let sc = Scenario::field_protocol();
        let sim = simulate_survey(&sc, &ErrorModel { seed: 4, ..Default::default() }).unwrap();
        let text = emit_nmea(&sim.fixes, "Pixel 4", sc.start);
        let cfg = PipelineConfig::default();
        let a = analyze_text(&text, Some(&sc.polyline), &cfg, "s").unwrap();
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        let f1 = write_bundle(d1.path(), &a, &tm()).unwrap();
        let f2 = write_bundle(d2.path(), &a, &tm()).unwrap();
        assert_eq!(f1.len(), 7);
        assert_eq!(f1, f2);
        for f in &f1 {
            assert_eq!(
                fs::read(d1.path().join(f)).unwrap(),
                fs::read(d2.path().join(f)).unwrap()
            );
        }
        let leftovers = fs::read_dir(d1.path())
            .unwrap()
            .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().starts_with('.'))
            .count();
        assert_eq!(leftovers, 0);
    }

    #[test]
    fn fixes_csv_round_trips_exactly() {
        let sc = Scenario::field_protocol();
        let sim = simulate_survey(&sc, &ErrorModel { seed: 5, ..Default::default() }).unwrap();
        let mut fixes = sim.fixes.clone();
        fixes[10].coord = None;
        fixes[10].fix_quality = crate::nmea::FixQuality::NoFix;
        let projected = crate::track::project_fixes(&fixes, &tm()).unwrap();
        let text = String::from_utf8(fixes_csv(&fixes, &projected)).unwrap();
        assert_eq!(read_fixes_csv(&text).unwrap(), fixes);
    }

    #[test]
    fn fixes_csv_errors() {
        assert_eq!(read_fixes_csv("a,b\n1,2\n").unwrap_err().kind(), "MalformedCsv");
        let head = "timestamp,latitude,longitude,fix_quality,satellites,hdop,altitude_m,easting,northing\n";
        assert_eq!(read_fixes_csv(head).unwrap_err().kind(), "MalformedCsv");
        let row = format!("{head}2021-06-15T09:00:00Z,45.6,,1,8,,,,\n");
        assert_eq!(read_fixes_csv(&row).unwrap_err().kind(), "MalformedCsv");
    }
}
