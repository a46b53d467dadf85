use chrono::{DateTime, NaiveDateTime, Utc};
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ServiceError};

/// Regexes tried against the leading non-`$` lines of an upload. The named
/// group `value`, or else group 1, is the extracted text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeaderPatterns {
    pub device_model: Vec<String>,
    pub start_time: Vec<String>,
    /// chrono formats tried after RFC 3339; naive values are UTC.
    pub start_time_formats: Vec<String>,
}

impl Default for HeaderPatterns {
    fn default() -> Self {
        Self {
            device_model: vec![
                r"^#\s*device_model\s*[:=]\s*(?P<value>.+?)\s*$".into(),
                r"(?i)^#?\s*(?:smartphone|device|model)\s*[:=]\s*(?P<value>.+?)\s*$".into(),
            ],
            start_time: vec![
                r"^#\s*start_time\s*[:=]\s*(?P<value>.+?)\s*$".into(),
                r"(?i)^#?\s*(?:start|survey start|date)\s*[:=]\s*(?P<value>.+?)\s*$".into(),
            ],
            start_time_formats: vec![
                "%Y-%m-%d %H:%M:%S".into(),
                "%Y/%m/%d %H:%M:%S".into(),
                "%d/%m/%Y %H:%M:%S".into(),
            ],
        }
    }
}

#[derive(Debug, Clone)]
pub struct HeaderExtractor {
    device_model: Vec<Regex>,
    start_time: Vec<Regex>,
    formats: Vec<String>,
}

/// Metadata supplied by the submitter or read from the header.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SurveyMetadata {
    pub device_model: Option<String>,
    pub start_time: Option<DateTime<Utc>>,
}

/// Field where declared and header metadata disagreed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetadataConflict {
    pub field: String,
    pub declared: String,
    pub header: String,
}

impl HeaderPatterns {
    pub fn compile(&self) -> Result<HeaderExtractor> {
        let build = |pats: &[String]| {
            pats.iter()
                .map(|p| {
                    Regex::new(p)
                        .map_err(|e| ServiceError::Config(format!("header pattern {p:?}: {e}")))
                })
                .collect::<Result<Vec<_>>>()
        };
        Ok(HeaderExtractor {
            device_model: build(&self.device_model)?,
            start_time: build(&self.start_time)?,
            formats: self.start_time_formats.clone(),
        })
    }
}

fn capture(patterns: &[Regex], line: &str) -> Option<String> {
    patterns.iter().find_map(|re| {
        let caps = re.captures(line)?;
        let m = caps.name("value").or_else(|| caps.get(1))?;
        let v = m.as_str().trim();
        (!v.is_empty()).then(|| v.to_string())
    })
}

impl HeaderExtractor {
    pub fn parse_time(&self, text: &str) -> Option<DateTime<Utc>> {
        if let Ok(t) = DateTime::parse_from_rfc3339(text) {
            return Some(t.with_timezone(&Utc));
        }
        self.formats.iter().find_map(|f| {
            NaiveDateTime::parse_from_str(text, f)
                .ok()
                .map(|n| n.and_utc())
        })
    }

    /// Scans header lines up to the first sentence; the first match per field wins.
    pub fn extract(&self, text: &str) -> SurveyMetadata {
        let mut out = SurveyMetadata::default();
        for line in text.lines() {
            let line = line.trim_end_matches('\r');
            if line.trim_start().starts_with('$') {
                break;
            }
            if out.device_model.is_none() {
                out.device_model = capture(&self.device_model, line);
            }
            if out.start_time.is_none() {
                out.start_time = capture(&self.start_time, line).and_then(|v| self.parse_time(&v));
            }
        }
        out
    }
}

impl SurveyMetadata {
    /// Declared values override header values; each disagreement is returned.
    pub fn merge(declared: &SurveyMetadata, header: &SurveyMetadata) -> (SurveyMetadata, Vec<MetadataConflict>) {
        let mut conflicts = Vec::new();
        if let (Some(d), Some(h)) = (&declared.device_model, &header.device_model) {
            if d != h {
                conflicts.push(MetadataConflict {
                    field: "device_model".into(),
                    declared: d.clone(),
                    header: h.clone(),
                });
            }
        }
        if let (Some(d), Some(h)) = (declared.start_time, header.start_time) {
            if d != h {
                conflicts.push(MetadataConflict {
                    field: "start_time".into(),
                    declared: d.to_rfc3339(),
                    header: h.to_rfc3339(),
                });
            }
        }
        let merged = SurveyMetadata {
            device_model: declared.device_model.clone().or_else(|| header.device_model.clone()),
            start_time: declared.start_time.or(header.start_time),
        };
        (merged, conflicts)
    }
}
