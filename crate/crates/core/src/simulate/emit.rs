use std::fmt::Write;

use chrono::{DateTime, SecondsFormat, Utc};

use crate::nmea::{degrees_to_ddmm, with_checksum, CoordinateAxis, GnssFix, MINUTE_FRACTION_DIGITS};

pub const EMITTER_NAME: &str = "gardentrack-simulate";

/// Writes a log with `# key: value` header lines, then an RMC and a GGA per
/// epoch. Lines end with CRLF as on the wire.
pub fn emit_nmea(fixes: &[GnssFix], device_model: &str, start: DateTime<Utc>) -> String {
    let mut out = String::with_capacity(fixes.len() * 160 + 128);
    let _ = write!(
        out,
        "# device_model: {device_model}\r\n# start_time: {}\r\n# generator: {EMITTER_NAME}\r\n",
        start.to_rfc3339_opts(SecondsFormat::Secs, true)
    );
    for fix in fixes {
        let time = fix.timestamp.format("%H%M%S%.3f").to_string();
        let time = &time[..time.len() - 1];
        let date = fix.timestamp.format("%d%m%y");
        let (lat, ns, lon, ew) = match fix.coord {
            Some(c) => {
                let (lat, ns) =
                    degrees_to_ddmm(c.latitude, CoordinateAxis::Latitude, MINUTE_FRACTION_DIGITS);
                let (lon, ew) =
                    degrees_to_ddmm(c.longitude, CoordinateAxis::Longitude, MINUTE_FRACTION_DIGITS);
                (lat, ns.to_string(), lon, ew.to_string())
            }
            None => Default::default(),
        };
        let status = if fix.excluded() { 'V' } else { 'A' };
        let rmc = format!("GPRMC,{time},{status},{lat},{ns},{lon},{ew},,,{date},,,A");
        let hdop = fix.hdop.map(|h| format!("{h:.1}")).unwrap_or_default();
        let alt = fix.altitude_m.map(|a| format!("{a:.1}")).unwrap_or_default();
        let alt_unit = if fix.altitude_m.is_some() { "M" } else { "" };
        let gga = format!(
            "GPGGA,{time},{lat},{ns},{lon},{ew},{},{:02},{hdop},{alt},{alt_unit},,,,",
            fix.fix_quality.code(),
            fix.satellites_used,
        );
        out.push_str(&with_checksum(&rmc));
        out.push_str("\r\n");
        out.push_str(&with_checksum(&gga));
        out.push_str("\r\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nmea::{parse_sentence, parse_stream, quantization_step, FixQuality, GeoCoord};
    use crate::simulate::{simulate_survey, ErrorModel, Scenario};

    fn sample() -> (Scenario, Vec<GnssFix>) {
        let sc = Scenario::field_protocol();
        let sim = simulate_survey(&sc, &ErrorModel { seed: 3, ..Default::default() }).unwrap();
        (sc, sim.fixes)
    }

    #[test]
    fn every_line_validates_and_round_trips() {
        let (sc, fixes) = sample();
        let text = emit_nmea(&fixes, "Xiaomi - Redmi Note 8T", sc.start);
        for line in text.lines().filter(|l| l.starts_with('$')) {
            parse_sentence(line).unwrap();
        }
        let (parsed, report) = parse_stream(text.lines()).unwrap();
        assert_eq!(parsed.len(), fixes.len());
        assert_eq!(report.accepted, 2 * fixes.len());
        assert_eq!(report.unsupported, 3);
        assert!(!report.date_assumed);
        let (dn, de) = quantization_step(45.67);
        for (a, b) in parsed.iter().zip(&fixes) {
            assert_eq!(a.timestamp, b.timestamp);
            let (ca, cb) = (a.coord.unwrap(), b.coord.unwrap());
            // quantized input: exact up to decimal conversion
            assert!((ca.latitude - cb.latitude).abs() * 111_000.0 < dn);
            assert!((ca.longitude - cb.longitude).abs() * 78_000.0 < de);
            assert!((ca.latitude - cb.latitude).abs() < 1e-12);
        }
    }

    #[test]
    fn header_lines() {
        let (sc, fixes) = sample();
        let text = emit_nmea(&fixes[..2], "Pixel 4", sc.start);
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("# device_model: Pixel 4"));
        assert_eq!(lines.next(), Some("# start_time: 2021-06-15T09:00:00Z"));
        assert_eq!(lines.next(), Some("# generator: gardentrack-simulate"));
        assert!(lines.next().unwrap().starts_with("$GPRMC,090000.00,A,"));
        assert!(text.ends_with("\r\n"));
    }

    #[test]
    fn no_fix_epoch_has_empty_coordinates() {
        let ts: DateTime<Utc> = "2021-06-15T09:00:00Z".parse().unwrap();
        let fixes = vec![
            GnssFix {
                timestamp: ts,
                coord: None,
                fix_quality: FixQuality::NoFix,
                satellites_used: 0,
                hdop: None,
                altitude_m: None,
            },
            GnssFix {
                timestamp: ts + chrono::Duration::seconds(1),
                coord: Some(GeoCoord { latitude: -45.5, longitude: -0.25 }),
                fix_quality: FixQuality::Sps,
                satellites_used: 7,
                hdop: Some(1.25),
                altitude_m: None,
            },
        ];
        let text = emit_nmea(&fixes, "x", ts);
        assert!(text.contains("$GPGGA,090000.00,,,,,0,00,,,,,,,*"));
        assert!(text.contains("4530.0000,S,00015.0000,W"));
        let (parsed, _) = parse_stream(text.lines()).unwrap();
        assert!(parsed[0].position().is_none());
        assert_eq!(parsed[1].coord.unwrap().latitude, -45.5);
    }
}
