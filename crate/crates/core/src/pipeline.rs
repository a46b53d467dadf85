//! Single-survey analysis: parse → project → residuals → accuracy, precision,
//! ACF → stops.

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use crate::behaviour::{detect_stops, median_filter, speed_series, StopConfig, StopEvent};
use crate::error::{Error, Result};
use crate::geodesy::{ProjectionRegistry, TransverseMercator, DEFAULT_PROJECTION};
use crate::nmea::{parse_stream_with, GnssFix, ParseOptions, ParseReport};
use crate::quality::{
    coordinate_acf, extract_static_windows, residual_acf, static_precision, AcfSeries,
    PrecisionReport, StaticWindowConfig,
};
use crate::track::{
    accuracy_stats, project_fixes, residual_series, usable_points, AccuracyStats, Polyline,
    ProjectedFix,
};

pub const DEFAULT_MAX_LAG_S: usize = 120;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AcfMode {
    /// Residual components against the reference track.
    #[default]
    Residual,
    /// Raw easting and northing series.
    Coordinate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub projection: String,
    pub stops: StopConfig,
    pub static_windows: StaticWindowConfig,
    pub max_lag_s: usize,
    pub acf_mode: AcfMode,
    /// Date for logs without RMC sentences.
    pub fallback_date: Option<NaiveDate>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            projection: DEFAULT_PROJECTION.into(),
            stops: StopConfig::default(),
            static_windows: StaticWindowConfig::default(),
            max_lag_s: DEFAULT_MAX_LAG_S,
            acf_mode: AcfMode::default(),
            fallback_date: None,
        }
    }
}

impl PipelineConfig {
    /// Rejects non-positive thresholds and unknown projections before any work.
    pub fn validate(&self) -> Result<()> {
        let s = &self.stops;
        if !(s.speed_threshold > 0.0 && s.speed_threshold.is_finite()) {
            return Err(Error::Config("stops.speed_threshold must be > 0".into()));
        }
        if !(s.min_duration_s > 0.0 && s.min_duration_s.is_finite()) {
            return Err(Error::Config("stops.min_duration_s must be > 0".into()));
        }
        if let Some(w) = s.filter_window.filter(|&w| w > 0) {
            if w < 3 || w % 2 == 0 {
                return Err(Error::Config("stops.filter_window must be 0 or odd and >= 3".into()));
            }
        }
        if self.static_windows.duration_s <= 0 {
            return Err(Error::Config("static_windows.duration_s must be > 0".into()));
        }
        if self.max_lag_s == 0 {
            return Err(Error::Config("max_lag_s must be > 0".into()));
        }
        ProjectionRegistry::bundled().get(&self.projection)?;
        Ok(())
    }

    pub fn projection(&self) -> Result<TransverseMercator<f64>> {
        let params = ProjectionRegistry::bundled().get(&self.projection)?;
        Ok(TransverseMercator::new(params)?)
    }
}

/// Optional report section: present, or absent with the reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Section<T> {
    Available { value: T },
    Unavailable { kind: String, reason: String },
}

impl<T> Section<T> {
    fn from_result<E: Into<Error>>(r: std::result::Result<T, E>) -> Self {
        match r {
            Ok(value) => Section::Available { value },
            Err(e) => {
                let e: Error = e.into();
                Section::Unavailable {
                    kind: e.kind().into(),
                    reason: e.to_string(),
                }
            }
        }
    }

    fn missing(kind: &str, reason: &str) -> Self {
        Section::Unavailable {
            kind: kind.into(),
            reason: reason.into(),
        }
    }

    pub fn available(&self) -> Option<&T> {
        match self {
            Section::Available { value } => Some(value),
            Section::Unavailable { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub all_epochs: AccuracyStats<f64>,
    /// Same statistics without the static windows.
    pub excluding_static: Option<AccuracyStats<f64>>,
    pub gap_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcfReport {
    pub mode: AcfMode,
    pub east: AcfSeries<f64>,
    pub north: AcfSeries<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyAnalysis {
    pub survey_id: String,
    pub projection: String,
    pub parse: ParseReport,
    pub fix_count: usize,
    pub usable_fix_count: usize,
    pub first_fix: Option<DateTime<Utc>>,
    pub last_fix: Option<DateTime<Utc>>,
    pub accuracy: Section<AccuracyReport>,
    pub precision: Section<Vec<PrecisionReport<f64>>>,
    pub acf: Section<AcfReport>,
    pub stops: Vec<StopEvent<f64>>,
}

/// Parses an NMEA document; fails only when it yields no fixes.
pub fn parse_text(text: &str, cfg: &PipelineConfig) -> Result<(Vec<GnssFix>, ParseReport)> {
    let opts = ParseOptions {
        fallback_date: cfg.fallback_date,
    };
    Ok(parse_stream_with(text.lines(), &opts)?)
}

pub fn analyze_text(
    text: &str,
    polyline: Option<&Polyline<f64>>,
    cfg: &PipelineConfig,
    survey_id: &str,
) -> Result<SurveyAnalysis> {
    cfg.validate()?;
    let (fixes, report) = parse_text(text, cfg)?;
    analyze_fixes(&fixes, report, polyline, cfg, survey_id)
}

/// Stop events of a fix series under `cfg`.
pub fn stops_for(
    projected: &[ProjectedFix<f64>],
    cfg: &StopConfig,
    survey_id: &str,
) -> Result<Vec<StopEvent<f64>>> {
    let mut speed = speed_series(&usable_points(projected))?;
    if let Some(w) = cfg.filter_window.filter(|&w| w > 0) {
        speed = median_filter(&speed, w)?;
    }
    Ok(detect_stops(
        &speed,
        cfg.speed_threshold,
        cfg.min_duration_s,
        survey_id,
    ))
}

pub fn analyze_fixes(
    fixes: &[GnssFix],
    parse: ParseReport,
    polyline: Option<&Polyline<f64>>,
    cfg: &PipelineConfig,
    survey_id: &str,
) -> Result<SurveyAnalysis> {
    cfg.validate()?;
    let tm = cfg.projection()?;
    let projected = project_fixes(fixes, &tm)?;
    let points = usable_points(&projected);

    let windows = extract_static_windows(&points, &cfg.static_windows);
    let precision = Section::from_result(windows.clone().and_then(|ws| {
        ws.iter().map(static_precision).collect::<std::result::Result<Vec<_>, _>>()
    }));

    let residuals = polyline.map(|p| residual_series(&projected, p));
    let accuracy = match &residuals {
        None => Section::missing("NoPolyline", "no reference polyline configured"),
        Some(rs) => Section::from_result(rs.clone().map_err(Error::from).and_then(|rs| {
            let all_epochs = accuracy_stats(&rs)?;
            let full = StaticWindowConfig {
                epoch_limit: None,
                ..cfg.static_windows.clone()
            };
            let excluding_static = match extract_static_windows(&points, &full) {
                Ok(ws) => {
                    let spans: Vec<_> = ws.iter().map(|w| (w.start, w.end)).collect();
                    rs.excluding(&spans)
                        .ok()
                        .and_then(|r| accuracy_stats(&r).ok())
                }
                Err(_) => None,
            };
            Ok(AccuracyReport {
                all_epochs,
                excluding_static,
                gap_count: rs.gaps.len(),
            })
        })),
    };

    let acf = match (cfg.acf_mode, &residuals) {
        (AcfMode::Coordinate, _) => Section::from_result(
            coordinate_acf(&points, cfg.max_lag_s).map(|(east, north)| AcfReport {
                mode: AcfMode::Coordinate,
                east,
                north,
            }),
        ),
        (AcfMode::Residual, None) => {
            Section::missing("NoPolyline", "residual ACF needs a reference polyline")
        }
        (AcfMode::Residual, Some(rs)) => Section::from_result(
            rs.clone()
                .map_err(Error::from)
                .and_then(|rs| Ok(residual_acf(&rs, cfg.max_lag_s)?))
                .map(|(east, north)| AcfReport {
                    mode: AcfMode::Residual,
                    east,
                    north,
                }),
        ),
    };

    let stops = stops_for(&projected, &cfg.stops, survey_id)?;

    Ok(SurveyAnalysis {
        survey_id: survey_id.into(),
        projection: cfg.projection.clone(),
        parse,
        fix_count: fixes.len(),
        usable_fix_count: points.len(),
        first_fix: points.first().map(|p| p.0),
        last_fix: points.last().map(|p| p.0),
        accuracy,
        precision,
        acf,
        stops,
    })
}
