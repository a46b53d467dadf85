use chrono::{DateTime, NaiveDate, NaiveTime, Utc};

use super::{
    ddmm_to_degrees, parse_sentence_at, FixQuality, GeoCoord, GnssFix, NmeaError, ParseReport,
    RawSentence, SentenceKind,
};

const HALF_DAY_S: i64 = 12 * 3600;

#[derive(Debug, Clone, Default)]
pub struct ParseOptions {
    /// Date used when the stream carries no RMC sentence.
    pub fallback_date: Option<NaiveDate>,
}

struct GgaEpoch {
    tod: NaiveTime,
    coord: Option<GeoCoord>,
    quality: FixQuality,
    satellites: u8,
    hdop: Option<f64>,
    altitude: Option<f64>,
}

enum Event {
    Gga(GgaEpoch),
    Rmc { tod: NaiveTime, date: NaiveDate },
}

enum Outcome {
    Event(Event),
    Unsupported,
}

fn malformed(s: &RawSentence, reason: &str) -> NmeaError {
    NmeaError::MalformedSentence {
        line: s.line_number,
        reason: reason.to_string(),
    }
}

fn parse_time(s: &RawSentence, field: &str) -> Result<NaiveTime, NmeaError> {
    // hhmmss with optional fraction, truncated to whole seconds
    let whole = field.split('.').next().unwrap_or("");
    if whole.len() != 6 || !whole.bytes().all(|b| b.is_ascii_digit()) {
        return Err(malformed(s, "bad time field"));
    }
    let h: u32 = whole[0..2].parse().unwrap();
    let m: u32 = whole[2..4].parse().unwrap();
    let sec: u32 = whole[4..6].parse().unwrap();
    NaiveTime::from_hms_opt(h, m, sec).ok_or_else(|| malformed(s, "time out of range"))
}

fn parse_date(s: &RawSentence, field: &str) -> Result<NaiveDate, NmeaError> {
    if field.len() != 6 || !field.bytes().all(|b| b.is_ascii_digit()) {
        return Err(malformed(s, "bad date field"));
    }
    let d: u32 = field[0..2].parse().unwrap();
    let m: u32 = field[2..4].parse().unwrap();
    let yy: i32 = field[4..6].parse().unwrap();
    let year = if yy < 80 { 2000 + yy } else { 1900 + yy };
    NaiveDate::from_ymd_opt(year, m, d).ok_or_else(|| malformed(s, "date out of range"))
}

fn parse_coord(s: &RawSentence, first: usize) -> Result<Option<GeoCoord>, NmeaError> {
    let (lat, ns, lon, ew) = (
        s.field(first),
        s.field(first + 1),
        s.field(first + 2),
        s.field(first + 3),
    );
    if lat.is_empty() && lon.is_empty() {
        return Ok(None);
    }
    let hemi = |h: &str| {
        let mut c = h.chars();
        match (c.next(), c.next()) {
            (Some(ch), None) => Ok(ch),
            _ => Err(malformed(s, "bad hemisphere")),
        }
    };
    let latitude = ddmm_to_degrees(lat, hemi(ns)?).map_err(|e| malformed(s, &e.to_string()))?;
    let longitude = ddmm_to_degrees(lon, hemi(ew)?).map_err(|e| malformed(s, &e.to_string()))?;
    if !matches!(ns, "N" | "S") || !matches!(ew, "E" | "W") {
        return Err(malformed(s, "hemisphere on wrong axis"));
    }
    Ok(Some(GeoCoord {
        latitude,
        longitude,
    }))
}

fn opt_f64(s: &RawSentence, idx: usize) -> Result<Option<f64>, NmeaError> {
    let f = s.field(idx);
    if f.is_empty() {
        return Ok(None);
    }
    f.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .map(Some)
        .ok_or_else(|| malformed(s, "non-numeric field"))
}

fn decode_gga(s: &RawSentence) -> Result<GgaEpoch, NmeaError> {
    if s.fields.len() < 9 {
        return Err(malformed(s, "GGA needs at least 9 fields"));
    }
    let tod = parse_time(s, s.field(0))?;
    let quality = s
        .field(5)
        .parse::<u8>()
        .map(FixQuality::from_code)
        .map_err(|_| malformed(s, "bad fix quality"))?;
    let coord = parse_coord(s, 1)?;
    if coord.is_none() && quality != FixQuality::NoFix {
        return Err(malformed(s, "fix without coordinates"));
    }
    let satellites = match s.field(6) {
        "" => 0,
        f => f.parse::<u8>().map_err(|_| malformed(s, "bad satellite count"))?,
    };
    Ok(GgaEpoch {
        tod,
        coord,
        quality,
        satellites,
        hdop: opt_f64(s, 7)?,
        altitude: opt_f64(s, 8)?,
    })
}

fn classify(s: &RawSentence) -> Result<Outcome, NmeaError> {
    match s.kind {
        SentenceKind::Gga => decode_gga(s).map(|g| Outcome::Event(Event::Gga(g))),
        SentenceKind::Rmc => {
            if s.fields.len() < 9 {
                return Err(malformed(s, "RMC needs at least 9 fields"));
            }
            let tod = parse_time(s, s.field(0))?;
            let date = parse_date(s, s.field(8))?;
            Ok(Outcome::Event(Event::Rmc { tod, date }))
        }
        _ => Ok(Outcome::Unsupported),
    }
}

fn seconds_of_day(t: NaiveTime) -> i64 {
    use chrono::Timelike;
    t.num_seconds_from_midnight() as i64
}

/// [`parse_stream_with`] with default options.
pub fn parse_stream<I, S>(lines: I) -> Result<(Vec<GnssFix>, ParseReport), NmeaError>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    parse_stream_with(lines, &ParseOptions::default())
}

/// Tolerant stream parser. Bad lines are counted, never fatal; the only
/// error is a stream that yields no fixes at all.
///
/// Dates come from RMC. GGA epochs seen before the first RMC take its date
/// (one day earlier if their time of day is more than 12 h after it). After
/// that, a time-of-day drop larger than 12 h advances the date; a smaller
/// drop is an out-of-order epoch and is rejected as malformed. A second GGA
/// in the same second is counted as unsupported.
pub fn parse_stream_with<I, S>(
    lines: I,
    opts: &ParseOptions,
) -> Result<(Vec<GnssFix>, ParseReport), NmeaError>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut report = ParseReport::default();
    let mut events: Vec<Event> = Vec::new();

    for (idx, line) in lines.into_iter().enumerate() {
        report.total_lines += 1;
        let line = line.as_ref().trim_end_matches(['\r', '\n']);
        if !line.starts_with('$') {
            // headers, comments and blank lines
            report.unsupported += 1;
            continue;
        }
        let sentence = match parse_sentence_at(line, idx + 1) {
            Ok(s) => s,
            Err(NmeaError::ChecksumMismatch { .. }) => {
                report.rejected_checksum += 1;
                continue;
            }
            Err(_) => {
                report.rejected_malformed += 1;
                continue;
            }
        };
        match classify(&sentence) {
            Ok(Outcome::Event(ev)) => events.push(ev),
            Ok(Outcome::Unsupported) => report.unsupported += 1,
            Err(_) => report.rejected_malformed += 1,
        }
    }

    let anchor = events.iter().find_map(|e| match e {
        Event::Rmc { tod, date } => Some((*date, seconds_of_day(*tod))),
        _ => None,
    });
    let (mut date, anchor_tod) = match anchor {
        Some((d, t)) => (Some(d), Some(t)),
        None => {
            report.date_assumed = true;
            (
                Some(
                    opts.fallback_date
                        .unwrap_or(NaiveDate::from_ymd_opt(1970, 1, 1).unwrap()),
                ),
                None,
            )
        }
    };
    let mut seen_rmc = false;
    let mut last_tod: Option<i64> = None;
    let mut fixes: Vec<GnssFix> = Vec::new();
    let mut last_ts: Option<DateTime<Utc>> = None;

    for ev in events {
        match ev {
            Event::Rmc { tod, date: d } => {
                seen_rmc = true;
                date = Some(d);
                last_tod = Some(seconds_of_day(tod));
                report.accepted += 1;
            }
            Event::Gga(g) => {
                let tod = seconds_of_day(g.tod);
                let mut day = date.expect("date initialised");
                match (seen_rmc, anchor_tod) {
                    (false, Some(at)) => {
                        if tod - at > HALF_DAY_S {
                            day = day.pred_opt().unwrap_or(day);
                        }
                    }
                    _ => {
                        if let Some(prev) = last_tod {
                            if prev - tod > HALF_DAY_S {
                                day = day.succ_opt().unwrap_or(day);
                                date = Some(day);
                            }
                        }
                    }
                }
                let ts = day.and_time(g.tod).and_utc();
                match last_ts {
                    Some(prev) if ts == prev => {
                        report.unsupported += 1;
                        continue;
                    }
                    Some(prev) if ts < prev => {
                        report.rejected_malformed += 1;
                        continue;
                    }
                    _ => {}
                }
                last_tod = Some(tod);
                last_ts = Some(ts);
                report.accepted += 1;
                fixes.push(GnssFix {
                    timestamp: ts,
                    coord: g.coord,
                    fix_quality: g.quality,
                    satellites_used: g.satellites,
                    hdop: g.hdop,
                    altitude_m: g.altitude,
                });
            }
        }
    }

    report.first_timestamp = fixes.first().map(|f| f.timestamp);
    report.last_timestamp = fixes.last().map(|f| f.timestamp);
    debug_assert!(report.is_consistent());

    if fixes.is_empty() {
        return Err(NmeaError::EmptyStream { report });
    }
    Ok((fixes, report))
}
