use serde::{Deserialize, Serialize};

use super::{ResidualSeries, TrackError};
use crate::scalar::Scalar;

/// Confidence levels reported for every survey.
pub const CONFIDENCE_LEVELS: [f64; 3] = [0.68, 0.95, 0.99];

/// Quantile of the chi-square distribution with two degrees of freedom,
/// whose CDF is 1 − exp(−x/2).
pub fn chi_square_quantile_2dof<T: Scalar>(p: T) -> T {
    assert!(p >= T::zero() && p < T::one(), "probability must be in [0, 1)");
    -T::lit(2.0) * (T::one() - p).ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceEllipse<T> {
    pub level: T,
    /// √(chi-square quantile) applied to the standard-deviation axes.
    pub scale: T,
    pub semi_major: T,
    pub semi_minor: T,
    /// Direction of the major axis, degrees counter-clockwise from east, in (−90, 90].
    pub orientation_deg: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyStats<T> {
    pub n: usize,
    pub mean_east: T,
    pub mean_north: T,
    pub rmse: T,
    /// Sample covariance [[ee, en], [en, nn]], m².
    pub covariance: [[T; 2]; 2],
    pub ellipses: Vec<ConfidenceEllipse<T>>,
    pub percentile_95_distance: T,
}

impl<T: Scalar> AccuracyStats<T> {
    pub fn ellipse(&self, level: f64) -> Option<&ConfidenceEllipse<T>> {
        self.ellipses
            .iter()
            .find(|e| (e.level.as_f64() - level).abs() < 1e-9)
    }
}

/// Eigenvalues (descending) and major-axis angle of a 2×2 symmetric matrix.
fn eigen_2x2<T: Scalar>(sxx: T, sxy: T, syy: T) -> (T, T, T) {
    let two = T::lit(2.0);
    let mid = (sxx + syy) / two;
    let half_diff = (sxx - syy) / two;
    let rad = half_diff.hypot(sxy);
    let major = mid + rad;
    let minor = (mid - rad).max(T::zero());
    let theta = if rad == T::zero() {
        T::zero()
    } else {
        (two * sxy).atan2(sxx - syy) / two
    };
    let mut deg = theta.to_degrees();
    if deg <= T::lit(-90.0) {
        deg = deg + T::lit(180.0);
    }
    (major, minor, deg)
}

/// Linear interpolation between order statistics.
fn percentile<T: Scalar>(sorted: &[T], p: T) -> T {
    let h = (T::from_usize_lossy(sorted.len() - 1)) * p;
    let lo = h.floor().to_usize().unwrap_or(0);
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = h - T::from_usize_lossy(lo);
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Distributional summary of a residual series. Order of epochs is irrelevant.
pub fn accuracy_stats<T: Scalar>(rs: &ResidualSeries<T>) -> Result<AccuracyStats<T>, TrackError> {
    let n = rs.epochs.len();
    if n < 2 {
        return Err(TrackError::InsufficientData {
            found: n,
            needed: 2,
        });
    }
    let nf = T::from_usize_lossy(n);
    let mean_east = rs.epochs.iter().map(|e| e.east).sum::<T>() / nf;
    let mean_north = rs.epochs.iter().map(|e| e.north).sum::<T>() / nf;
    let mut see = T::zero();
    let mut snn = T::zero();
    let mut sen = T::zero();
    let mut sq = T::zero();
    for e in &rs.epochs {
        let de = e.east - mean_east;
        let dn = e.north - mean_north;
        see = see + de * de;
        snn = snn + dn * dn;
        sen = sen + de * dn;
        sq = sq + e.east * e.east + e.north * e.north;
    }
    let dof = T::from_usize_lossy(n - 1);
    let (cee, cnn, cen) = (see / dof, snn / dof, sen / dof);
    let (major, minor, orientation_deg) = eigen_2x2(cee, cen, cnn);

    let ellipses = CONFIDENCE_LEVELS
        .iter()
        .map(|&level| {
            let level = T::lit(level);
            let scale = chi_square_quantile_2dof(level).sqrt();
            ConfidenceEllipse {
                level,
                scale,
                semi_major: scale * major.sqrt(),
                semi_minor: scale * minor.sqrt(),
                orientation_deg,
            }
        })
        .collect();

    let mut d = rs.distances();
    d.sort_by(|a, b| a.partial_cmp(b).expect("finite residuals"));

    Ok(AccuracyStats {
        n,
        mean_east,
        mean_north,
        rmse: (sq / nf).sqrt(),
        covariance: [[cee, cen], [cen, cnn]],
        ellipses,
        percentile_95_distance: percentile(&d, T::lit(0.95)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::track::{PlanarPoint, ResidualEpoch};
    use chrono::{TimeZone, Utc};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn series(res: &[(f64, f64)]) -> ResidualSeries<f64> {
        let epochs = res
            .iter()
            .enumerate()
            .map(|(i, &(e, n))| ResidualEpoch {
                timestamp: Utc.timestamp_opt(1_600_000_000 + i as i64, 0).unwrap(),
                fix: PlanarPoint::new(e, n),
                east: e,
                north: n,
                projection: None,
            })
            .collect();
        ResidualSeries::from_epochs(epochs).unwrap()
    }

    fn gaussian(n: usize, se: f64, sn: f64, seed: u64) -> Vec<(f64, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let a: f64 = StandardNormal.sample(&mut rng);
                let b: f64 = StandardNormal.sample(&mut rng);
                (se * a, sn * b)
            })
            .collect()
    }

    #[test]
    fn quantiles_match_chi_square_oracle() {
        let oracle = ChiSquared::new(2.0).unwrap();
        for p in CONFIDENCE_LEVELS {
            let q: f64 = chi_square_quantile_2dof(p);
            assert!((q - oracle.inverse_cdf(p)).abs() < 1e-6, "{p}");
        }
        let scales: Vec<f64> = CONFIDENCE_LEVELS
            .iter()
            .map(|&p| chi_square_quantile_2dof(p).sqrt())
            .collect();
        for (s, q) in scales.iter().zip([2.2789, 5.9915, 9.2103]) {
            assert!((s - f64::sqrt(q)).abs() < 1e-4);
        }
    }

    #[test]
    fn zero_residuals_give_degenerate_ellipses() {
        let st = accuracy_stats(&series(&[(0.0, 0.0); 5])).unwrap();
        assert_eq!(st.rmse, 0.0);
        assert_eq!(st.percentile_95_distance, 0.0);
        for e in &st.ellipses {
            assert_eq!(e.semi_major, 0.0);
            assert_eq!(e.semi_minor, 0.0);
        }
    }

    #[test]
    fn insufficient_data() {
        assert!(matches!(
            accuracy_stats(&series(&[(1.0, 1.0)])),
            Err(TrackError::InsufficientData { .. })
        ));
    }

    #[test]
    fn isotropic_unit_gaussian_95_ellipse() {
        let st = accuracy_stats(&series(&gaussian(10_000, 1.0, 1.0, 7))).unwrap();
        let e95 = st.ellipse(0.95).unwrap();
        let expected = 5.991_464_547_107_979f64.sqrt();
        assert!((e95.semi_major / expected - 1.0).abs() < 0.05);
        assert!((e95.semi_minor / expected - 1.0).abs() < 0.05);
        assert!((st.rmse - 2f64.sqrt()).abs() < 0.05);
    }

    #[test]
    fn anisotropic_major_axis_along_east() {
        let st = accuracy_stats(&series(&gaussian(10_000, 2.0, 1.0, 11))).unwrap();
        let e = st.ellipse(0.68).unwrap();
        assert!((e.semi_major / e.semi_minor - 2.0).abs() < 0.1);
        assert!(e.orientation_deg.abs() < 5.0);
    }

    #[test]
    fn rotated_diagonal_orientation() {
        // residuals along the line e = n
        let pts: Vec<_> = (-10..=10).map(|i| (i as f64, i as f64)).collect();
        let st = accuracy_stats(&series(&pts)).unwrap();
        assert!((st.ellipses[0].orientation_deg - 45.0).abs() < 1e-9);
        assert!(st.ellipses[0].semi_minor < 1e-6);
    }

    #[test]
    fn percentile_interpolates() {
        let d: Vec<f64> = (0..=100).map(|i| i as f64).collect();
        assert_eq!(percentile(&d, 0.95), 95.0);
        assert_eq!(percentile(&[1.0, 3.0], 0.5), 2.0);
    }

    proptest! {
        #[test]
        fn invariants(res in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 2..60)) {
            let st = accuracy_stats(&series(&res)).unwrap();
            let mean_dist = st.mean_east.hypot(st.mean_north);
            prop_assert!(st.rmse + 1e-12 >= mean_dist);
            let c = st.covariance;
            prop_assert!(c[0][0] >= 0.0 && c[1][1] >= 0.0);
            prop_assert!(c[0][0] * c[1][1] - c[0][1] * c[1][0] >= -1e-9);
            for e in &st.ellipses {
                prop_assert!(e.semi_major >= e.semi_minor);
            }
        }

        #[test]
        fn permutation_invariant(res in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 2..40), seed in 0u64..1000) {
            use rand::seq::SliceRandom;
            let mut shuffled = res.clone();
            shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let a = accuracy_stats(&series(&res)).unwrap();
            let b = accuracy_stats(&series(&shuffled)).unwrap();
            prop_assert!((a.rmse - b.rmse).abs() < 1e-9);
            prop_assert!((a.ellipses[1].semi_major - b.ellipses[1].semi_major).abs() < 1e-9);
            prop_assert!((a.percentile_95_distance - b.percentile_95_distance).abs() < 1e-9);
        }

        #[test]
        fn rotation_moves_orientation_only(theta in -1.0f64..1.0, seed in 0u64..100) {
            let res = gaussian(200, 2.0, 0.7, seed);
            let (s, c) = theta.sin_cos();
            let rot: Vec<_> = res.iter().map(|&(e, n)| (c * e - s * n, s * e + c * n)).collect();
            let a = accuracy_stats(&series(&res)).unwrap();
            let b = accuracy_stats(&series(&rot)).unwrap();
            let (ea, eb) = (a.ellipses[1], b.ellipses[1]);
            prop_assert!((ea.semi_major - eb.semi_major).abs() < 1e-9);
            prop_assert!((ea.semi_minor - eb.semi_minor).abs() < 1e-9);
            let mut shift = eb.orientation_deg - ea.orientation_deg - theta.to_degrees();
            while shift > 90.0 { shift -= 180.0; }
            while shift <= -90.0 { shift += 180.0; }
            prop_assert!(shift.abs() < 1e-6);
        }
    }
}
