use std::path::{Path, PathBuf};

use gardentrack_core::behaviour::{cluster_hotspots, StopEvent};
use gardentrack_core::nmea::{GnssFix, ParseReport};
use gardentrack_core::pipeline::{analyze_fixes, parse_text, stops_for, Section, SurveyAnalysis};
use gardentrack_core::quality::{PrecisionReport, WindowLabel};
use gardentrack_core::report::{
    self, acf_csv, ellipses_csv, fixes_csv, hotspots_csv, hotspots_geojson, precision_csv,
    read_fixes_csv, stops_csv, stops_geojson, write_atomic, write_bundle,
};
use gardentrack_core::simulate::{emit_nmea, simulate_survey, SimulatedSurvey};
use gardentrack_core::track::{load_polyline, project_fixes, Polyline};
use gardentrack_core::TransverseMercator;
use gardentrack_service::{HeaderPatterns, ServiceConfig, SurveyMetadata};
use serde_json::{json, Value};

use crate::args::Command;
use crate::config::{ConfigFile, Overrides, RunConfig};
use crate::error::CliError;

pub const FIXES_CSV: &str = "fixes.csv";
pub const PARSE_REPORT_JSON: &str = "parse_report.json";
pub const ACCURACY_JSON: &str = "accuracy.json";
pub const PRECISION_TABLE_CSV: &str = "precision_table.csv";
pub const HOTSPOTS_GEOJSON: &str = "hotspots.geojson";
pub const HOTSPOTS_CSV: &str = "hotspots.csv";
pub const SURVEY_NMEA: &str = "survey.nmea";

/// Loaded survey: fixes, line accounting and the raw header metadata.
struct Survey {
    id: String,
    fixes: Vec<GnssFix>,
    parse: ParseReport,
    metadata: SurveyMetadata,
}

fn read_text(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::new("Io", format!("{}: {e}", path.display())))?;
    String::from_utf8(bytes)
        .map_err(|e| CliError::new("UnreadableFile", format!("{}: not UTF-8 text: {e}", path.display())))
}

fn survey_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// NMEA logs, or fixes CSV written by `parse`.
fn load_survey(path: &Path, cfg: &RunConfig) -> Result<Survey, CliError> {
    let text = read_text(path)?;
    let is_csv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let (fixes, parse) = if is_csv {
        let fixes = read_fixes_csv(&text)?;
        let parse = ParseReport {
            total_lines: fixes.len(),
            accepted: fixes.len(),
            first_timestamp: fixes.first().map(|f| f.timestamp),
            last_timestamp: fixes.last().map(|f| f.timestamp),
            ..Default::default()
        };
        (fixes, parse)
    } else {
        parse_text(&text, &cfg.pipeline)?
    };
    let metadata = HeaderPatterns::default()
        .compile()
        .map(|h| h.extract(&text))
        .unwrap_or_default();
    Ok(Survey {
        id: survey_id(path),
        fixes,
        parse,
        metadata,
    })
}

fn polyline(cfg: &RunConfig, tm: &TransverseMercator<f64>) -> Result<Option<Polyline<f64>>, CliError> {
    cfg.polyline
        .as_ref()
        .map(|p| load_polyline(p, tm).map_err(|e| CliError::from(gardentrack_core::Error::from(e))))
        .transpose()
}

fn analyze(s: &Survey, poly: Option<&Polyline<f64>>, cfg: &RunConfig) -> Result<SurveyAnalysis, CliError> {
    Ok(analyze_fixes(&s.fixes, s.parse.clone(), poly, &cfg.pipeline, &s.id)?)
}

fn section<T: Clone>(s: &Section<T>) -> Result<T, CliError> {
    match s {
        Section::Available { value } => Ok(value.clone()),
        Section::Unavailable { kind, reason } => Err(CliError::new(kind.clone(), reason.clone())),
    }
}

/// Collects output files and writes each one atomically.
struct Outputs {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::new("Io", format!("{}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn put(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        self.put_path(self.dir.join(name), bytes)
    }

    fn put_path(&mut self, path: PathBuf, bytes: &[u8]) -> Result<(), CliError> {
        write_atomic(&path, bytes)?;
        self.written.push(path);
        Ok(())
    }

    fn list(&self) -> Value {
        json!(self.written.iter().map(|p| p.display().to_string()).collect::<Vec<_>>())
    }
}

fn pretty(v: &impl serde::Serialize) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(v).expect("serializable");
    out.push(b'\n');
    out
}

/// Start/end sigma per survey, the layout of a field precision table.
pub fn precision_table_csv(rows: &[(String, String, Vec<PrecisionReport<f64>>)]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["survey", "sensor", "start_x_m", "start_y_m", "end_x_m", "end_y_m"])
        .expect("in-memory write");
    for (survey, sensor, reports) in rows {
        let pick = |label: WindowLabel| {
            reports
                .iter()
                .find(|r| r.label == label)
                .map(|r| (format!("{:.3}", r.sigma_east), format!("{:.3}", r.sigma_north)))
                .unwrap_or_default()
        };
        let (sx, sy) = pick(WindowLabel::SurveyStart);
        let (ex, ey) = pick(WindowLabel::SurveyEnd);
        w.write_record([survey.as_str(), sensor.as_str(), &sx, &sy, &ex, &ey])
            .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

/// Runs one command and returns the JSON summary for stdout.
pub fn run(command: Command, file: &ConfigFile, config_path: Option<&Path>) -> Result<Value, CliError> {
    match command {
        Command::Parse { input, common } => {
            let cfg = RunConfig::assemble(
                file,
                std::slice::from_ref(&input),
                &Overrides {
                    common: Some(&common),
                    ..Default::default()
                },
            )?;
            let text = read_text(&input)?;
            let (fixes, report) = parse_text(&text, &cfg.pipeline)?;
            let tm = cfg.pipeline.projection()?;
            let projected = project_fixes(&fixes, &tm).map_err(gardentrack_core::Error::from)?;
            let mut out = Outputs::new(&cfg.output_dir)?;
            out.put(FIXES_CSV, &fixes_csv(&fixes, &projected))?;
            out.put(PARSE_REPORT_JSON, &pretty(&report))?;
            Ok(json!({"command": "parse", "fixes": fixes.len(), "parse": report, "outputs": out.list()}))
        }
        Command::Accuracy {
            input,
            polyline: poly_flag,
            windows,
            common,
        } => {
            let cfg = RunConfig::assemble(
                file,
                std::slice::from_ref(&input),
                &Overrides {
                    common: Some(&common),
                    polyline: poly_flag.as_ref(),
                    windows: Some(&windows),
                    ..Default::default()
                },
            )?;
            if cfg.polyline.is_none() {
                return Err(CliError::config("accuracy needs --polyline or run.polyline"));
            }
            let tm = cfg.pipeline.projection()?;
            let poly = polyline(&cfg, &tm)?;
            let s = load_survey(&input, &cfg)?;
            let a = analyze(&s, poly.as_ref(), &cfg)?;
            let acc = section(&a.accuracy)?;
            let mut sets = vec![("all_epochs", &acc.all_epochs)];
            if let Some(ex) = &acc.excluding_static {
                sets.push(("excluding_static", ex));
            }
            let mut out = Outputs::new(&cfg.output_dir)?;
            out.put(ACCURACY_JSON, &pretty(&acc))?;
            out.put(report::ELLIPSES_CSV, &ellipses_csv(&sets))?;
            Ok(json!({"command": "accuracy", "accuracy": acc, "outputs": out.list()}))
        }
        Command::Precision { input, windows, common } => {
            let cfg = RunConfig::assemble(
                file,
                std::slice::from_ref(&input),
                &Overrides {
                    common: Some(&common),
                    windows: Some(&windows),
                    ..Default::default()
                },
            )?;
            let s = load_survey(&input, &cfg)?;
            let a = analyze(&s, None, &cfg)?;
            let reports = section(&a.precision)?;
            let start = s.metadata.start_time.or(a.first_fix);
            let label = start.map(|t| t.format("%Y-%m-%d %H:%M").to_string()).unwrap_or_default();
            let sensor = s.metadata.device_model.clone().unwrap_or_default();
            let mut out = Outputs::new(&cfg.output_dir)?;
            out.put(report::PRECISION_CSV, &precision_csv(&reports))?;
            out.put(
                PRECISION_TABLE_CSV,
                &precision_table_csv(&[(label, sensor, reports.clone())]),
            )?;
            Ok(json!({"command": "precision", "precision": reports, "outputs": out.list()}))
        }
        Command::Acf {
            input,
            polyline: poly_flag,
            acf,
            common,
        } => {
            let cfg = RunConfig::assemble(
                file,
                std::slice::from_ref(&input),
                &Overrides {
                    common: Some(&common),
                    polyline: poly_flag.as_ref(),
                    acf: Some(&acf),
                    ..Default::default()
                },
            )?;
            let tm = cfg.pipeline.projection()?;
            let poly = polyline(&cfg, &tm)?;
            let s = load_survey(&input, &cfg)?;
            let a = analyze(&s, poly.as_ref(), &cfg)?;
            let report = section(&a.acf)?;
            let mut out = Outputs::new(&cfg.output_dir)?;
            out.put(report::ACF_EAST_CSV, &acf_csv(&report.east))?;
            out.put(report::ACF_NORTH_CSV, &acf_csv(&report.north))?;
            let lag30 = |s: &gardentrack_core::AcfSeries| s.at(30);
            Ok(json!({
                "command": "acf",
                "mode": report.mode,
                "n": report.east.n,
                "significance_bound": report.east.significance_bound,
                "east_lag_30": lag30(&report.east),
                "north_lag_30": lag30(&report.north),
                "outputs": out.list(),
            }))
        }
        Command::Stops {
            input,
            stops,
            format,
            common,
        } => {
            let cfg = RunConfig::assemble(
                file,
                std::slice::from_ref(&input),
                &Overrides {
                    common: Some(&common),
                    stops: Some(&stops),
                    format,
                    ..Default::default()
                },
            )?;
            let tm = cfg.pipeline.projection()?;
            let s = load_survey(&input, &cfg)?;
            let events = survey_stops(&s, &cfg, &tm)?;
            let mut out = Outputs::new(&cfg.output_dir)?;
            if cfg.format.geojson() {
                out.put(report::STOPS_GEOJSON, &stops_geojson(&events, &tm))?;
            }
            if cfg.format.csv() {
                out.put(report::STOPS_CSV, &stops_csv(&events))?;
            }
            Ok(json!({"command": "stops", "stops": events, "outputs": out.list()}))
        }
        Command::Hotspots {
            inputs,
            stops,
            merge_radius,
            workers,
            format,
            common,
        } => {
            let cfg = RunConfig::assemble(
                file,
                &inputs,
                &Overrides {
                    common: Some(&common),
                    stops: Some(&stops),
                    merge_radius_m: merge_radius,
                    workers,
                    format,
                    ..Default::default()
                },
            )?;
            let tm = cfg.pipeline.projection()?;
            let events = stops_in_parallel(&cfg, &tm)?;
            let hs = cluster_hotspots(&events, cfg.merge_radius_m);
            let mut out = Outputs::new(&cfg.output_dir)?;
            if cfg.format.geojson() {
                out.put(HOTSPOTS_GEOJSON, &hotspots_geojson(&hs, &tm))?;
            }
            if cfg.format.csv() {
                out.put(HOTSPOTS_CSV, &hotspots_csv(&hs))?;
            }
            let summary: Vec<_> = hs
                .iter()
                .map(|h| {
                    json!({
                        "easting": h.centroid.easting,
                        "northing": h.centroid.northing,
                        "radius_m": h.radius,
                        "total_dwell_s": h.total_dwell_s,
                        "survey_count": h.survey_count,
                        "member_count": h.members.len(),
                    })
                })
                .collect();
            Ok(json!({"command": "hotspots", "surveys": inputs.len(), "stop_events": events.len(), "hotspots": summary, "outputs": out.list()}))
        }
        Command::Analyze {
            input,
            polyline: poly_flag,
            stops,
            windows,
            acf,
            common,
        } => {
            let cfg = RunConfig::assemble(
                file,
                std::slice::from_ref(&input),
                &Overrides {
                    common: Some(&common),
                    polyline: poly_flag.as_ref(),
                    stops: Some(&stops),
                    windows: Some(&windows),
                    acf: Some(&acf),
                    ..Default::default()
                },
            )?;
            let tm = cfg.pipeline.projection()?;
            let poly = polyline(&cfg, &tm)?;
            let s = load_survey(&input, &cfg)?;
            let a = analyze(&s, poly.as_ref(), &cfg)?;
            let files = write_bundle(&cfg.output_dir, &a, &tm)?;
            let unavailable: Vec<_> = [
                ("accuracy", unavailable_kind(&a.accuracy)),
                ("precision", unavailable_kind(&a.precision)),
                ("acf", unavailable_kind(&a.acf)),
            ]
            .into_iter()
            .filter_map(|(name, k)| k.map(|k| json!({"section": name, "kind": k})))
            .collect();
            Ok(json!({
                "command": "analyze",
                "survey_id": a.survey_id,
                "fixes": a.fix_count,
                "stops": a.stops.len(),
                "unavailable": unavailable,
                "outputs": files.iter().map(|f| cfg.output_dir.join(f).display().to_string()).collect::<Vec<_>>(),
            }))
        }
        Command::Simulate {
            out: out_path,
            seed,
            sigma,
            tau,
            no_quantize,
            device,
            stop_count,
            start_time,
            common,
        } => {
            let mut sim_cfg = file.simulate.clone();
            if let Some(v) = seed {
                sim_cfg.error_model.seed = v;
            }
            if let Some(v) = sigma {
                sim_cfg.error_model.sigma = v;
            }
            if let Some(v) = tau {
                sim_cfg.error_model.correlation_time_s = v;
            }
            if no_quantize {
                sim_cfg.error_model.quantize = false;
            }
            if let Some(v) = device {
                sim_cfg.device_model = v;
            }
            if let Some(v) = stop_count {
                sim_cfg.stop_count = v;
            }
            if let Some(v) = start_time {
                sim_cfg.start_time = v;
            }
            if let Some(p) = &common.projection {
                sim_cfg.projection = p.clone();
            }
            sim_cfg
                .error_model
                .validate()
                .map_err(|e| CliError::config(e.to_string()))?;
            let scenario = sim_cfg
                .to_scenario(&file.base_dir)
                .map_err(|e| CliError::config(e.to_string()))?;
            let out_dir = common
                .out_dir
                .clone()
                .or_else(|| file.run.output_dir.as_ref().map(|p| file.resolve(p)))
                .unwrap_or_else(|| PathBuf::from("."));
            let nmea_path = out_path.unwrap_or_else(|| out_dir.join(SURVEY_NMEA));
            let sim = simulate_survey(&scenario, &sim_cfg.error_model)
                .map_err(gardentrack_core::Error::from)?;
            let text = emit_nmea(&sim.fixes, &sim_cfg.device_model, scenario.start);
            let tm = TransverseMercator::<f64>::new(&scenario.projection).map_err(gardentrack_core::Error::from)?;
            let dir = nmea_path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
            let stem = survey_id(&nmea_path);
            let mut out = Outputs::new(dir)?;
            out.put_path(nmea_path.clone(), text.as_bytes())?;
            out.put(&format!("{stem}.truth.csv"), &truth_csv(&sim, &tm)?)?;
            out.put(&format!("{stem}.truth_stops.csv"), &truth_stops_csv(&sim))?;
            out.put(&format!("{stem}.track.csv"), &track_csv(&scenario.polyline))?;
            Ok(json!({
                "command": "simulate",
                "fixes": sim.fixes.len(),
                "truth_stops": sim.truth_stops.len(),
                "seed": sim_cfg.error_model.seed,
                "outputs": out.list(),
            }))
        }
        Command::Serve {
            bind,
            catalog,
            polyline,
            workers,
            token,
        } => {
            let mut cfg = match config_path {
                Some(p) => ServiceConfig::load(p)?,
                None => ServiceConfig::default(),
            };
            if let Some(v) = bind {
                cfg.bind = v;
            }
            if let Some(v) = catalog {
                cfg.catalog_root = v;
            }
            if let Some(v) = polyline {
                cfg.polyline = Some(v);
            }
            if let Some(v) = workers {
                cfg.worker_budget = v;
            }
            if token.is_some() {
                cfg.token = token;
            }
            cfg.validate()?;
            let rt = tokio::runtime::Builder::new_multi_thread()
                .enable_all()
                .build()
                .map_err(|e| CliError::new("Io", e.to_string()))?;
            rt.block_on(gardentrack_service::serve(cfg))?;
            Ok(json!({"command": "serve", "status": "stopped"}))
        }
    }
}

fn unavailable_kind<T>(s: &Section<T>) -> Option<String> {
    match s {
        Section::Available { .. } => None,
        Section::Unavailable { kind, .. } => Some(kind.clone()),
    }
}

fn survey_stops(s: &Survey, cfg: &RunConfig, tm: &TransverseMercator<f64>) -> Result<Vec<StopEvent<f64>>, CliError> {
    let projected = project_fixes(&s.fixes, tm).map_err(gardentrack_core::Error::from)?;
    Ok(stops_for(&projected, &cfg.pipeline.stops, &s.id)?)
}

/// Per-survey stop detection spread over `cfg.workers` threads; results keep input order.
fn stops_in_parallel(cfg: &RunConfig, tm: &TransverseMercator<f64>) -> Result<Vec<StopEvent<f64>>, CliError> {
    let mut ids: Vec<String> = Vec::new();
    for p in &cfg.inputs {
        let base = survey_id(p);
        let mut id = base.clone();
        let mut k = 2;
        while ids.contains(&id) {
            id = format!("{base}-{k}");
            k += 1;
        }
        ids.push(id);
    }
    let chunk = cfg.inputs.len().div_ceil(cfg.workers).max(1);
    let results: Vec<Result<Vec<StopEvent<f64>>, CliError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = cfg
            .inputs
            .chunks(chunk)
            .zip(ids.chunks(chunk))
            .map(|(paths, ids)| {
                scope.spawn(move || {
                    paths
                        .iter()
                        .zip(ids)
                        .map(|(p, id)| {
                            let mut s = load_survey(p, cfg)?;
                            s.id = id.clone();
                            survey_stops(&s, cfg, tm)
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker thread"))
            .collect()
    });
    let mut events = Vec::new();
    for r in results {
        events.extend(r?);
    }
    Ok(events)
}

fn truth_csv(sim: &SimulatedSurvey, tm: &TransverseMercator<f64>) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["timestamp", "easting", "northing", "latitude", "longitude"])
        .expect("in-memory write");
    for (fix, p) in sim.fixes.iter().zip(&sim.truth) {
        let (lat, lon) = tm.inverse(p).map_err(gardentrack_core::Error::from)?;
        w.write_record([
            fix.timestamp.to_rfc3339_opts(chrono::SecondsFormat::AutoSi, true),
            format!("{:.4}", p.easting),
            format!("{:.4}", p.northing),
            format!("{lat:.9}"),
            format!("{lon:.9}"),
        ])
        .expect("in-memory write");
    }
    Ok(w.into_inner().expect("in-memory flush"))
}

/// Reference polyline in the CSV form `load_polyline` reads back exactly.
fn track_csv(poly: &Polyline<f64>) -> Vec<u8> {
    let mut out = String::from("# easting,northing\n");
    let v = poly.vertices();
    let ring = poly.is_closed().then(|| v[0]);
    for p in v.iter().chain(ring.as_ref()) {
        out.push_str(&format!("{},{}\n", p.easting, p.northing));
    }
    out.into_bytes()
}

fn truth_stops_csv(sim: &SimulatedSurvey) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["start", "end", "duration_s", "easting", "northing"])
        .expect("in-memory write");
    for s in &sim.truth_stops {
        w.write_record([
            s.start.to_rfc3339_opts(chrono::SecondsFormat::AutoSi, true),
            s.end.to_rfc3339_opts(chrono::SecondsFormat::AutoSi, true),
            format!("{:.1}", s.duration_s),
            format!("{:.4}", s.position.easting),
            format!("{:.4}", s.position.northing),
        ])
        .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}
