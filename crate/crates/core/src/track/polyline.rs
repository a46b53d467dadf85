use serde::{Deserialize, Serialize};

use super::{PlanarPoint, TrackError};
use crate::scalar::Scalar;

/// First and last vertex closer than this close the ring, metres.
pub const CLOSURE_TOLERANCE_M: f64 = 0.01;

/// Reference track in a projected frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline<T> {
    vertices: Vec<PlanarPoint<T>>,
    closed: bool,
    cumulative_length: Vec<T>,
    total_length: T,
    survey_error_bound: T,
}

impl<T: Scalar> Polyline<T> {
    /// Builds a polyline with explicit closure. A closed ring lists each vertex
    /// once; the closing segment is implied.
    pub fn new(vertices: Vec<PlanarPoint<T>>, closed: bool) -> Result<Self, TrackError> {
        let needed = if closed { 3 } else { 2 };
        if vertices.len() < needed {
            return Err(TrackError::TooFewVertices {
                found: vertices.len(),
                needed,
            });
        }
        if let Some(i) = vertices.iter().position(|v| !v.is_finite()) {
            return Err(TrackError::MalformedGeometry(format!(
                "vertex {i} is not finite"
            )));
        }
        let n = vertices.len();
        let seg_count = if closed { n } else { n - 1 };
        let mut cumulative_length = Vec::with_capacity(n);
        let mut acc = T::zero();
        cumulative_length.push(acc);
        for i in 0..seg_count {
            let len = vertices[i].distance(&vertices[(i + 1) % n]);
            if !(len > T::zero()) {
                return Err(TrackError::MalformedGeometry(format!(
                    "vertices {i} and {} coincide",
                    (i + 1) % n
                )));
            }
            acc = acc + len;
            if i + 1 < n {
                cumulative_length.push(acc);
            }
        }
        Ok(Self {
            vertices,
            closed,
            cumulative_length,
            total_length: acc,
            survey_error_bound: T::zero(),
        })
    }

    /// Builds a polyline, treating a final vertex that repeats the first
    /// (within 1 cm) as ring closure.
    pub fn from_vertices(mut vertices: Vec<PlanarPoint<T>>) -> Result<Self, TrackError> {
        let closes = vertices.len() >= 2
            && vertices[0].distance(vertices.last().unwrap()) <= T::lit(CLOSURE_TOLERANCE_M);
        if closes {
            vertices.pop();
        }
        Self::new(vertices, closes)
    }

    pub fn with_survey_error_bound(mut self, bound: T) -> Self {
        self.survey_error_bound = bound;
        self
    }

    pub fn vertices(&self) -> &[PlanarPoint<T>] {
        &self.vertices
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    /// Distance along the track to each vertex, starting at zero.
    pub fn cumulative_length(&self) -> &[T] {
        &self.cumulative_length
    }

    pub fn length(&self) -> T {
        self.total_length
    }

    pub fn survey_error_bound(&self) -> T {
        self.survey_error_bound
    }

    pub fn segment_count(&self) -> usize {
        if self.closed {
            self.vertices.len()
        } else {
            self.vertices.len() - 1
        }
    }

    pub fn segment(&self, i: usize) -> (PlanarPoint<T>, PlanarPoint<T>) {
        let n = self.vertices.len();
        (self.vertices[i], self.vertices[(i + 1) % n])
    }

    pub fn segment_line(&self, i: usize) -> SegmentLine<T> {
        let (a, b) = self.segment(i);
        SegmentLine::through(a, b)
    }

    /// Point at arc length `along` from the first vertex. Wraps on a closed
    /// ring, clamps on an open line.
    pub fn point_at(&self, along: T) -> PlanarPoint<T> {
        let len = self.total_length;
        let s = if self.closed {
            let r = along % len;
            if r < T::zero() {
                r + len
            } else {
                r
            }
        } else {
            along.max(T::zero()).min(len)
        };
        // last vertex whose cumulative length is <= s
        let i = match self
            .cumulative_length
            .binary_search_by(|c| c.partial_cmp(&s).expect("finite"))
        {
            Ok(i) => i,
            Err(i) => i - 1,
        }
        .min(self.segment_count() - 1);
        let (a, b) = self.segment(i);
        let seg_len = a.distance(&b);
        let t = ((s - self.cumulative_length[i]) / seg_len).max(T::zero()).min(T::one());
        PlanarPoint::new(
            a.easting + t * (b.easting - a.easting),
            a.northing + t * (b.northing - a.northing),
        )
    }

    pub fn closest_point(&self, fix: &PlanarPoint<T>) -> TrackProjection<T> {
        closest_point_on_polyline(fix, self)
    }
}

/// Implicit line a·x + b·y + c = 0 through a segment's endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentLine<T> {
    pub a: T,
    pub b: T,
    pub c: T,
    pub start: PlanarPoint<T>,
    pub end: PlanarPoint<T>,
}

impl<T: Scalar> SegmentLine<T> {
    pub fn through(start: PlanarPoint<T>, end: PlanarPoint<T>) -> Self {
        // unit normal, so eval() is a signed distance
        let len = start.distance(&end);
        let a = (start.northing - end.northing) / len;
        let b = (end.easting - start.easting) / len;
        let c = -(a * start.easting + b * start.northing);
        Self {
            a,
            b,
            c,
            start,
            end,
        }
    }

    /// Value of a·x + b·y + c, zero on the line.
    pub fn eval(&self, p: &PlanarPoint<T>) -> T {
        self.a * p.easting + self.b * p.northing + self.c
    }

    /// Foot of the perpendicular from `p` to the infinite line, from the
    /// implicit coefficients:
    /// x = (b(b·x₀ − a·y₀) − a·c) / (a² + b²),
    /// y = (a(−b·x₀ + a·y₀) − b·c) / (a² + b²).
    pub fn foot_on_line(&self, p: &PlanarPoint<T>) -> PlanarPoint<T> {
        let (a, b, c) = (self.a, self.b, self.c);
        let den = a * a + b * b;
        PlanarPoint::new(
            (b * (b * p.easting - a * p.northing) - a * c) / den,
            (a * (-b * p.easting + a * p.northing) - b * c) / den,
        )
    }
}

/// Closest point on the track to one fix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackProjection<T> {
    pub foot: PlanarPoint<T>,
    pub segment_index: usize,
    pub along_track: T,
    pub distance: T,
    /// fix − foot, east component.
    pub residual_east: T,
    /// fix − foot, north component.
    pub residual_north: T,
}

/// Exhaustive search over segments with the perpendicular foot clamped to
/// each segment. Ties go to the lowest segment index.
pub fn closest_point_on_polyline<T: Scalar>(
    fix: &PlanarPoint<T>,
    poly: &Polyline<T>,
) -> TrackProjection<T> {
    let mut best: Option<(T, usize, T, PlanarPoint<T>)> = None;
    for i in 0..poly.segment_count() {
        let (a, b) = poly.segment(i);
        let dx = b.easting - a.easting;
        let dy = b.northing - a.northing;
        let len2 = dx * dx + dy * dy;
        let t = (((fix.easting - a.easting) * dx + (fix.northing - a.northing) * dy) / len2)
            .max(T::zero())
            .min(T::one());
        let foot = PlanarPoint::new(a.easting + t * dx, a.northing + t * dy);
        let ex = fix.easting - foot.easting;
        let ey = fix.northing - foot.northing;
        let d2 = ex * ex + ey * ey;
        if best.is_none_or(|(bd, ..)| d2 < bd) {
            best = Some((d2, i, t, foot));
        }
    }
    let (_, i, t, foot) = best.expect("polyline has at least one segment");
    let (a, b) = poly.segment(i);
    let residual_east = fix.easting - foot.easting;
    let residual_north = fix.northing - foot.northing;
    TrackProjection {
        foot,
        segment_index: i,
        along_track: poly.cumulative_length()[i] + t * a.distance(&b),
        distance: residual_east.hypot(residual_north),
        residual_east,
        residual_north,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(e: f64, n: f64) -> PlanarPoint<f64> {
        PlanarPoint::new(e, n)
    }

    fn square() -> Polyline<f64> {
        Polyline::new(vec![p(0., 0.), p(10., 0.), p(10., 10.), p(0., 10.)], true).unwrap()
    }

    #[test]
    fn invariants_on_construction() {
        let sq = square();
        assert_eq!(sq.segment_count(), 4);
        assert_eq!(sq.cumulative_length(), &[0.0, 10.0, 20.0, 30.0]);
        assert_eq!(sq.length(), 40.0);
        assert!(matches!(
            Polyline::new(vec![p(0., 0.), p(1., 0.)], true),
            Err(TrackError::TooFewVertices { .. })
        ));
        assert!(matches!(
            Polyline::new(vec![p(0., 0.), p(0., 0.), p(1., 1.)], false),
            Err(TrackError::MalformedGeometry(_))
        ));
        assert!(matches!(
            Polyline::new(vec![p(0., 0.)], false),
            Err(TrackError::TooFewVertices { .. })
        ));
    }

    #[test]
    fn auto_closure() {
        let poly =
            Polyline::from_vertices(vec![p(0., 0.), p(10., 0.), p(10., 10.), p(0., 10.), p(0.005, 0.)])
                .unwrap();
        assert!(poly.is_closed());
        assert_eq!(poly.segment_count(), 4);
        let open = Polyline::from_vertices(vec![p(0., 0.), p(10., 0.)]).unwrap();
        assert!(!open.is_closed());
        assert_eq!(open.segment_count(), 1);
    }

    #[test]
    fn fix_on_vertex() {
        let pr = closest_point_on_polyline(&p(10., 10.), &square());
        assert_eq!(pr.distance, 0.0);
        assert_eq!(pr.foot, p(10., 10.));
        // vertex shared by segments 1 and 2; lowest index wins
        assert_eq!(pr.segment_index, 1);
    }

    #[test]
    fn perpendicular_offset_from_midpoint() {
        let line = Polyline::new(vec![p(0., 0.), p(100., 0.)], false).unwrap();
        let pr = closest_point_on_polyline(&p(50., 3.5), &line);
        assert_eq!(pr.distance, 3.5);
        assert_eq!(pr.foot, p(50., 0.));
        assert_eq!(pr.along_track, 50.0);
        assert_eq!(pr.residual_east, 0.0);
        assert_eq!(pr.residual_north, 3.5);
    }

    #[test]
    fn clamps_beyond_endpoints() {
        let line = Polyline::new(vec![p(0., 0.), p(10., 0.)], false).unwrap();
        let pr = closest_point_on_polyline(&p(13., 4.), &line);
        assert_eq!(pr.foot, p(10., 0.));
        assert_eq!(pr.distance, 5.0);
    }

    #[test]
    fn closing_segment_is_searched() {
        let pr = closest_point_on_polyline(&p(-2., 5.), &square());
        assert_eq!(pr.segment_index, 3);
        assert_eq!(pr.foot, p(0., 5.));
        assert_eq!(pr.along_track, 35.0);
    }

    #[test]
    fn point_at_wraps_and_interpolates() {
        let sq = square();
        assert_eq!(sq.point_at(0.0), p(0., 0.));
        assert_eq!(sq.point_at(15.0), p(10., 5.));
        assert_eq!(sq.point_at(40.0), p(0., 0.));
        assert_eq!(sq.point_at(-5.0), p(0., 5.));
        let open = Polyline::new(vec![p(0., 0.), p(10., 0.)], false).unwrap();
        assert_eq!(open.point_at(12.0), p(10., 0.));
    }

    #[test]
    fn segment_line_endpoints_satisfy_equation() {
        let l = SegmentLine::through(p(728000.3, 5061700.1), p(728001.2, 5061700.9));
        assert!(l.eval(&l.start).abs() < 1e-9);
        assert!(l.eval(&l.end).abs() < 1e-9);
        assert!(!(l.a == 0.0 && l.b == 0.0));
    }

    #[test]
    fn works_in_single_precision() {
        let sq = Polyline::<f32>::new(
            vec![
                PlanarPoint::new(0., 0.),
                PlanarPoint::new(10., 0.),
                PlanarPoint::new(10., 10.),
            ],
            true,
        )
        .unwrap();
        let pr = sq.closest_point(&PlanarPoint::new(5.0f32, -2.0));
        assert_eq!(pr.distance, 2.0);
    }

    fn arb_point() -> impl Strategy<Value = PlanarPoint<f64>> {
        (-50.0f64..50.0, -50.0f64..50.0).prop_map(|(e, n)| p(e, n))
    }

    proptest! {
        #[test]
        fn closed_form_foot_matches_vector_projection(a in arb_point(), b in arb_point(), q in arb_point()) {
            prop_assume!(a.distance(&b) > 1e-3);
            let line = SegmentLine::through(a, b);
            let f1 = line.foot_on_line(&q);
            let d = (b.easting - a.easting, b.northing - a.northing);
            let t = ((q.easting - a.easting) * d.0 + (q.northing - a.northing) * d.1) / (d.0 * d.0 + d.1 * d.1);
            let f2 = p(a.easting + t * d.0, a.northing + t * d.1);
            prop_assert!(f1.distance(&f2) < 1e-9);
            prop_assert!(line.eval(&f1).abs() < 1e-7);
        }

        #[test]
        fn projection_is_idempotent(q in arb_point()) {
            let poly = Polyline::new(vec![p(-20., -20.), p(30., -10.), p(25., 35.), p(-15., 20.)], true).unwrap();
            let first = poly.closest_point(&q);
            let again = poly.closest_point(&first.foot);
            prop_assert!(again.distance < 1e-9);
            prop_assert!(again.foot.distance(&first.foot) < 1e-9);
        }

        #[test]
        fn distance_is_one_lipschitz(q in arb_point(), r in arb_point()) {
            let poly = Polyline::new(vec![p(-20., -20.), p(30., -10.), p(25., 35.), p(-15., 20.)], true).unwrap();
            let dq = poly.closest_point(&q).distance;
            let dr = poly.closest_point(&r).distance;
            prop_assert!((dq - dr).abs() <= q.distance(&r) + 1e-9);
        }

        #[test]
        fn residual_components_match_distance(q in arb_point()) {
            let pr = square().closest_point(&q);
            prop_assert!((pr.distance.powi(2) - pr.residual_east.powi(2) - pr.residual_north.powi(2)).abs() < 1e-9);
            prop_assert!((q.easting - pr.foot.easting - pr.residual_east).abs() < 1e-12);
        }

        #[test]
        fn along_track_shift_is_second_order(offset in 0.5f64..5.0, eps in 1e-4f64..1e-2) {
            // long straight segment: moving parallel to it leaves distance unchanged
            let line = Polyline::new(vec![p(0., 0.), p(1000., 300.)], false).unwrap();
            let dir = (1000.0 / 1044.030650891055, 300.0 / 1044.030650891055);
            let q = p(500.0 - offset * dir.1, 150.0 + offset * dir.0);
            let moved = p(q.easting + eps * dir.0, q.northing + eps * dir.1);
            let d0 = line.closest_point(&q).distance;
            let d1 = line.closest_point(&moved).distance;
            prop_assert!((d1 - d0).abs() <= eps * eps + 1e-9);
        }
    }
}
