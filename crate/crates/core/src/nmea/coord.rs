use super::NmeaError;
use crate::geodesy::Ellipsoid;
use crate::scalar::Scalar;

/// Fractional minute digits written by the emitter (`ddmm.mmmm`).
pub const MINUTE_FRACTION_DIGITS: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoordinateAxis {
    Latitude,
    Longitude,
}

impl CoordinateAxis {
    fn degree_digits(self) -> usize {
        match self {
            CoordinateAxis::Latitude => 2,
            CoordinateAxis::Longitude => 3,
        }
    }

    fn hemispheres(self) -> (char, char) {
        match self {
            CoordinateAxis::Latitude => ('N', 'S'),
            CoordinateAxis::Longitude => ('E', 'W'),
        }
    }
}

fn coord_err(field: &str, reason: &str) -> NmeaError {
    NmeaError::MalformedCoordinate {
        field: field.to_string(),
        reason: reason.to_string(),
    }
}

/// Converts `ddmm.m+` (latitude) or `dddmm.m+` (longitude) to signed decimal degrees.
///
/// The minutes are read as an exact integer count of their last digit, so the
/// only rounding is the final division.
pub fn ddmm_to_degrees(field: &str, hemisphere: char) -> Result<f64, NmeaError> {
    let axis = match hemisphere {
        'N' | 'S' => CoordinateAxis::Latitude,
        'E' | 'W' => CoordinateAxis::Longitude,
        _ => return Err(coord_err(field, "hemisphere must be one of N, S, E, W")),
    };
    let dd = axis.degree_digits();
    let (int_part, frac_part) = field
        .split_once('.')
        .ok_or_else(|| coord_err(field, "missing decimal point"))?;
    if int_part.len() != dd + 2 {
        return Err(coord_err(field, "wrong number of degree/minute digits"));
    }
    if frac_part.is_empty() || frac_part.len() > 9 {
        return Err(coord_err(field, "fractional minutes must have 1..=9 digits"));
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(coord_err(field, "non-numeric"));
    }
    let degrees: u64 = int_part[..dd].parse().expect("digits");
    let whole_min: u64 = int_part[dd..].parse().expect("digits");
    if whole_min >= 60 {
        return Err(coord_err(field, "minutes must be below 60"));
    }
    let frac: u64 = frac_part.parse().expect("digits");
    let scale = 10u64.pow(frac_part.len() as u32);
    let minute_units = whole_min * scale + frac;
    let value = degrees as f64 + minute_units as f64 / (60 * scale) as f64;

    let limit = match axis {
        CoordinateAxis::Latitude => 90.0,
        CoordinateAxis::Longitude => 180.0,
    };
    if value > limit {
        return Err(coord_err(field, "out of range"));
    }
    let (_, negative) = axis.hemispheres();
    Ok(if hemisphere == negative { -value } else { value })
}

/// Formats signed degrees as `(ddmm.mmmm, hemisphere)` with `frac_digits`
/// fractional minute digits, rounding to the nearest representable value.
pub fn degrees_to_ddmm(value: f64, axis: CoordinateAxis, frac_digits: u32) -> (String, char) {
    let (pos, neg) = axis.hemispheres();
    let scale = 10u64.pow(frac_digits);
    let units = (value.abs() * 60.0 * scale as f64).round() as u64;
    let per_degree = 60 * scale;
    let degrees = units / per_degree;
    let minute_units = units % per_degree;
    let whole_min = minute_units / scale;
    let frac = minute_units % scale;
    let text = format!(
        "{degrees:0dw$}{whole_min:02}.{frac:0fw$}",
        dw = axis.degree_digits(),
        fw = frac_digits as usize
    );
    let hemisphere = if value < 0.0 && units > 0 { neg } else { pos };
    (text, hemisphere)
}

/// Snaps degrees to the grid of the NMEA encoding (10⁻⁴ arcminute).
pub fn quantize_degrees(value: f64) -> f64 {
    let scale = 60.0 * 10f64.powi(MINUTE_FRACTION_DIGITS as i32);
    (value * scale).round() / scale
}

/// Ground size of one least-significant digit of `ddmm.mmmm` on GRS80,
/// returned as (north-south step, east-west step) in metres.
pub fn quantization_step<T: Scalar>(latitude_deg: T) -> (T, T) {
    quantization_step_on(&Ellipsoid::grs80(), latitude_deg)
}

pub fn quantization_step_on<T: Scalar>(ellipsoid: &Ellipsoid<T>, latitude_deg: T) -> (T, T) {
    let step_rad = (T::lit(1e-4) / T::lit(60.0)).to_radians();
    let phi = latitude_deg.to_radians();
    let meridian = ellipsoid.meridian_radius(phi);
    let parallel = ellipsoid.prime_vertical_radius(phi) * phi.cos();
    (meridian * step_rad, parallel * step_rad)
}
