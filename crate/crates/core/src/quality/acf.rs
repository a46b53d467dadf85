use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::QualityError;
use crate::geodesy::PlanarPoint;
use crate::scalar::Scalar;
use crate::track::ResidualSeries;

/// Largest share of missing 1 Hz epochs that is interpolated instead of refused.
pub const MAX_GAP_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AcfComponent {
    East,
    North,
    Distance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcfSeries<T> {
    pub component: AcfComponent,
    /// Seconds, 0..=max_lag.
    pub lags: Vec<usize>,
    pub values: Vec<T>,
    pub n: usize,
    pub significance_bound: T,
    /// Epochs filled by linear interpolation.
    pub interpolated: usize,
}

impl<T: Scalar> AcfSeries<T> {
    pub fn at(&self, lag: usize) -> Option<T> {
        self.values.get(lag).copied()
    }

    pub fn is_significant(&self, lag: usize) -> bool {
        self.at(lag)
            .is_some_and(|r| r.abs() > self.significance_bound)
    }
}

/// Resamples onto the 1 s grid, interpolating isolated holes.
fn regularize<T: Scalar>(series: &[(DateTime<Utc>, T)]) -> Result<(Vec<T>, usize), QualityError> {
    let mut out = Vec::with_capacity(series.len());
    let mut filled = 0usize;
    for (i, &(ts, v)) in series.iter().enumerate() {
        if i > 0 {
            let (prev_ts, prev_v) = series[i - 1];
            let dt = (ts - prev_ts).num_milliseconds();
            if dt <= 0 || dt % 1000 != 0 {
                return Err(QualityError::IrregularSampling(format!(
                    "epoch {ts} is {dt} ms after the previous one"
                )));
            }
            let steps = (dt / 1000) as usize;
            for k in 1..steps {
                let w = T::from_usize_lossy(k) / T::from_usize_lossy(steps);
                out.push(prev_v + (v - prev_v) * w);
                filled += 1;
            }
        }
        out.push(v);
    }
    if filled as f64 > MAX_GAP_FRACTION * out.len() as f64 {
        return Err(QualityError::IrregularSampling(format!(
            "{filled} of {} epochs missing",
            out.len()
        )));
    }
    Ok((out, filled))
}

/// Biased sample autocorrelation of an already regular 1 Hz sequence.
pub fn acf_regular<T: Scalar>(
    values: &[T],
    max_lag: usize,
    component: AcfComponent,
) -> Result<AcfSeries<T>, QualityError> {
    let n = values.len();
    if n <= 3 * max_lag || n < 2 {
        return Err(QualityError::SeriesTooShort { n, max_lag });
    }
    let nf = T::from_usize_lossy(n);
    let mean = values.iter().copied().sum::<T>() / nf;
    let centred: Vec<T> = values.iter().map(|&v| v - mean).collect();
    let denom = centred.iter().map(|&d| d * d).sum::<T>();
    if denom <= T::zero() || !denom.is_finite() {
        return Err(QualityError::DegenerateSeries);
    }
    let mut out = Vec::with_capacity(max_lag + 1);
    out.push(T::one());
    for k in 1..=max_lag {
        let num = centred[..n - k]
            .iter()
            .zip(&centred[k..])
            .map(|(&a, &b)| a * b)
            .sum::<T>();
        let r = num / denom;
        out.push(r.max(-T::one()).min(T::one()));
    }
    Ok(AcfSeries {
        component,
        lags: (0..=max_lag).collect(),
        values: out,
        n,
        significance_bound: T::lit(1.96) / nf.sqrt(),
        interpolated: 0,
    })
}

/// Autocorrelation of a time-indexed series sampled at 1 Hz.
pub fn acf<T: Scalar>(
    series: &[(DateTime<Utc>, T)],
    max_lag: usize,
    component: AcfComponent,
) -> Result<AcfSeries<T>, QualityError> {
    let (values, filled) = regularize(series)?;
    let mut out = acf_regular(&values, max_lag, component)?;
    out.interpolated = filled;
    Ok(out)
}

/// East and north residual components.
pub fn residual_acf<T: Scalar>(
    rs: &ResidualSeries<T>,
    max_lag: usize,
) -> Result<(AcfSeries<T>, AcfSeries<T>), QualityError> {
    Ok((
        acf(&rs.east(), max_lag, AcfComponent::East)?,
        acf(&rs.north(), max_lag, AcfComponent::North)?,
    ))
}

/// Easting and northing of the fixes themselves rather than their residuals.
pub fn coordinate_acf<T: Scalar>(
    fixes: &[(DateTime<Utc>, PlanarPoint<T>)],
    max_lag: usize,
) -> Result<(AcfSeries<T>, AcfSeries<T>), QualityError> {
    let east: Vec<_> = fixes.iter().map(|(t, p)| (*t, p.easting)).collect();
    let north: Vec<_> = fixes.iter().map(|(t, p)| (*t, p.northing)).collect();
    Ok((
        acf(&east, max_lag, AcfComponent::East)?,
        acf(&north, max_lag, AcfComponent::North)?,
    ))
}
