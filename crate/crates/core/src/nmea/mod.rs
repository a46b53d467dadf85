//! NMEA 0183 sentence framing, GGA/RMC decoding and stream assembly.
//!
//! GGA is the source of every fix (it carries fix quality, satellite count
//! and HDOP); RMC only contributes the calendar date, which GGA lacks.

mod coord;
mod sentence;
mod stream;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use coord::{
    ddmm_to_degrees, degrees_to_ddmm, quantization_step, quantization_step_on, quantize_degrees,
    CoordinateAxis, MINUTE_FRACTION_DIGITS,
};
pub use sentence::{checksum, parse_sentence, parse_sentence_at, with_checksum, RawSentence, SentenceKind};
pub use stream::{parse_stream, parse_stream_with, ParseOptions};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NmeaError {
    #[error("line {line}: malformed sentence: {reason}")]
    MalformedSentence { line: usize, reason: String },
    #[error("line {line}: checksum mismatch (computed {computed:02X}, declared {declared:02X})")]
    ChecksumMismatch {
        line: usize,
        computed: u8,
        declared: u8,
    },
    #[error("malformed coordinate {field:?}: {reason}")]
    MalformedCoordinate { field: String, reason: String },
    #[error("stream contained no usable sentences ({} lines read)", report.total_lines)]
    EmptyStream { report: ParseReport },
}

impl NmeaError {
    pub fn kind(&self) -> &'static str {
        match self {
            NmeaError::MalformedSentence { .. } => "MalformedSentence",
            NmeaError::ChecksumMismatch { .. } => "ChecksumMismatch",
            NmeaError::MalformedCoordinate { .. } => "MalformedCoordinate",
            NmeaError::EmptyStream { .. } => "EmptyStream",
        }
    }
}

/// GGA fix quality indicator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixQuality {
    NoFix,
    Sps,
    Differential,
    Other(u8),
}

impl FixQuality {
    pub fn from_code(code: u8) -> Self {
        match code {
            0 => FixQuality::NoFix,
            1 => FixQuality::Sps,
            2 => FixQuality::Differential,
            n => FixQuality::Other(n),
        }
    }

    pub fn code(self) -> u8 {
        match self {
            FixQuality::NoFix => 0,
            FixQuality::Sps => 1,
            FixQuality::Differential => 2,
            FixQuality::Other(n) => n,
        }
    }
}

/// Geodetic position in decimal degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoCoord {
    pub latitude: f64,
    pub longitude: f64,
}

/// One GGA epoch.
///
/// `coord` is absent only for no-fix epochs whose coordinate fields were
/// empty. A no-fix epoch is kept in the fix list so gaps stay visible, but
/// [`GnssFix::position`] hides it from every analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GnssFix {
    pub timestamp: DateTime<Utc>,
    pub coord: Option<GeoCoord>,
    pub fix_quality: FixQuality,
    pub satellites_used: u8,
    pub hdop: Option<f64>,
    pub altitude_m: Option<f64>,
}

impl GnssFix {
    pub fn excluded(&self) -> bool {
        self.fix_quality == FixQuality::NoFix || self.coord.is_none()
    }

    /// Position usable for analysis, `None` for excluded epochs.
    pub fn position(&self) -> Option<GeoCoord> {
        if self.excluded() {
            None
        } else {
            self.coord
        }
    }
}

/// Line accounting for one stream. Every line lands in exactly one bucket.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseReport {
    pub total_lines: usize,
    pub accepted: usize,
    pub rejected_checksum: usize,
    pub rejected_malformed: usize,
    pub unsupported: usize,
    pub first_timestamp: Option<DateTime<Utc>>,
    pub last_timestamp: Option<DateTime<Utc>>,
    /// True when no RMC supplied a date and the fallback date was used.
    pub date_assumed: bool,
}

impl ParseReport {
    pub fn is_consistent(&self) -> bool {
        self.total_lines
            == self.accepted + self.rejected_checksum + self.rejected_malformed + self.unsupported
    }
}
