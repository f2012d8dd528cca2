//! Line fitting and the two-line construction of the shaft axis.
//!
//! Each relevant contour region is fitted by major-axis regression (the
//! principal eigenvector of its 2x2 scatter matrix), bounded by the extent
//! of its support, and the axis is drawn through the midpoints of two
//! cross-connections between the auxiliary lines.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::Point2;

/// Infinite line through `centroid` with unit `direction`.
///
/// The direction is canonicalized so that its first nonzero component is
/// positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LineRepr")]
pub struct FittedLine {
    centroid: Point2,
    direction: Point2,
}

#[derive(Deserialize)]
struct LineRepr {
    centroid: Point2,
    direction: Point2,
}

impl TryFrom<LineRepr> for FittedLine {
    type Error = Error;
    fn try_from(r: LineRepr) -> Result<Self> {
        Self::new(r.centroid, r.direction)
    }
}

impl FittedLine {
    pub fn new(point: Point2, direction: Point2) -> Result<Self> {
        let dir = direction
            .normalized()
            .ok_or_else(|| Error::InvalidInput("line direction must be nonzero".into()))?;
        if !point.is_finite() {
            return Err(Error::InvalidInput("line point must be finite".into()));
        }
        Ok(Self {
            centroid: point,
            direction: canonical(dir),
        })
    }

    pub fn through(a: Point2, b: Point2) -> Result<Self> {
        Self::new(a, b - a)
    }

    /// Line through `point` at `degrees` (0° = +x, counterclockwise on screen).
    pub fn from_angle(point: Point2, degrees: f64) -> Result<Self> {
        Self::new(point, Point2::from_angle_deg(degrees))
    }

    pub fn centroid(&self) -> Point2 {
        self.centroid
    }

    pub fn direction(&self) -> Point2 {
        self.direction
    }

    /// Orientation in degrees under the screen convention, in `[0, 180)`.
    pub fn angle_deg(&self) -> f64 {
        let a = self.direction.angle_deg().rem_euclid(180.0);
        if a >= 180.0 {
            0.0
        } else {
            a
        }
    }

    /// Signed parameter of the orthogonal projection of `p`.
    pub fn parameter(&self, p: Point2) -> f64 {
        (p - self.centroid).dot(self.direction)
    }

    pub fn point_at(&self, t: f64) -> Point2 {
        self.centroid + self.direction * t
    }

    pub fn contains(&self, p: Point2, tol: f64) -> bool {
        point_to_line_distance(p, self) <= tol
    }
}

fn canonical(d: Point2) -> Point2 {
    if d.x < 0.0 || (d.x == 0.0 && d.y < 0.0) {
        -d
    } else {
        d
    }
}

/// Major-axis (orthogonal) regression.
pub fn fit_major_axis(points: &[Point2]) -> Result<FittedLine> {
    let distinct = match points.first() {
        None => 0,
        Some(first) if points.iter().all(|p| p == first) => 1,
        Some(_) => 2,
    };
    if distinct < 2 {
        return Err(Error::InsufficientSupport {
            found: distinct,
            required: 2,
        });
    }
    let n = points.len() as f64;
    let sum = points.iter().fold(Point2::default(), |acc, &p| acc + p);
    let centroid = sum / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for &p in points {
        let d = p - centroid;
        sxx += d.x * d.x;
        syy += d.y * d.y;
        sxy += d.x * d.y;
    }
    let (sxx, syy, sxy) = (sxx / n, syy / n, sxy / n);
    let radius = (0.5 * (sxx - syy)).hypot(sxy);
    let lambda_max = 0.5 * (sxx + syy) + radius;
    if 2.0 * radius <= 1e-9 * lambda_max {
        return Err(Error::DegenerateFit);
    }
    let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    FittedLine::new(centroid, Point2::new(theta.cos(), theta.sin()))
}

/// A fitted line restricted to the extent of its supporting points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundedSegment {
    pub line: FittedLine,
    pub start: Point2,
    pub end: Point2,
}

impl BoundedSegment {
    pub fn length(&self) -> f64 {
        self.start.distance(self.end)
    }

    /// Unit vector from `start` to `end`.
    pub fn unit(&self) -> Point2 {
        (self.end - self.start) / self.length()
    }
}

pub fn bound_segment(line: &FittedLine, support: &[Point2]) -> Result<BoundedSegment> {
    if support.is_empty() {
        return Err(Error::InsufficientSupport {
            found: 0,
            required: 1,
        });
    }
    let (lo, hi) = support
        .iter()
        .map(|&p| line.parameter(p))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), t| {
            (lo.min(t), hi.max(t))
        });
    if hi - lo <= 1e-9 {
        return Err(Error::DegenerateSegment);
    }
    Ok(BoundedSegment {
        line: *line,
        start: line.point_at(lo),
        end: line.point_at(hi),
    })
}

pub fn subdivide(segment: &BoundedSegment, d1: f64, d2: f64) -> Result<(Point2, Point2)> {
    let length = segment.length();
    if !(d1 >= 0.0 && d2 >= 0.0 && d1 + d2 < length) {
        return Err(Error::InvalidSubdivision { d1, d2, length });
    }
    let u = segment.unit();
    Ok((segment.start + u * d1, segment.end - u * d2))
}

pub fn project_onto_line(p: Point2, line: &FittedLine) -> Point2 {
    line.point_at(line.parameter(p))
}

pub fn point_to_line_distance(p: Point2, line: &FittedLine) -> f64 {
    (p - line.centroid).cross(line.direction).abs()
}

/// Acute undirected angle between two lines, in degrees.
pub fn angle_between(a: &FittedLine, b: &FittedLine) -> f64 {
    let (u, v) = (a.direction, b.direction);
    u.cross(v).abs().atan2(u.dot(v).abs()).to_degrees()
}

/// Clips segment `a`–`b` to the axis-aligned box `[lo, hi]` (Liang–Barsky).
pub fn clip_segment(a: Point2, b: Point2, lo: Point2, hi: Point2) -> Option<(Point2, Point2)> {
    let d = b - a;
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for (p, q) in [
        (-d.x, a.x - lo.x),
        (d.x, hi.x - a.x),
        (-d.y, a.y - lo.y),
        (d.y, hi.y - a.y),
    ] {
        if p == 0.0 {
            if q < 0.0 {
                return None;
            }
        } else {
            let r = q / p;
            if p < 0.0 {
                t0 = t0.max(r);
            } else {
                t1 = t1.min(r);
            }
        }
    }
    (t0 <= t1).then(|| (a + d * t0, a + d * t1))
}

/// How the sample points on the subdivided line are carried to the opposing line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Projection {
    /// Along the normal of the angle bisector of the two lines. The sample
    /// and its image are mirror points, so every midpoint is equidistant
    /// from both lines and lies on the bisector.
    #[default]
    Bisector,
    /// Orthogonal projection onto the opposing line.
    Orthogonal,
}

/// Carries `p` (a point on `from`) onto `onto`.
pub fn project_across(p: Point2, from: &FittedLine, onto: &FittedLine, mode: Projection) -> Point2 {
    match mode {
        Projection::Orthogonal => project_onto_line(p, onto),
        Projection::Bisector => {
            let a = from.direction;
            let mut b = onto.direction;
            if a.dot(b) < 0.0 {
                b = -b;
            }
            // |a + b| >= sqrt(2) since the angle between a and b is at most 90°
            let bisector = (a + b).normalized().unwrap_or(a);
            let normal = bisector.perp();
            let s = (onto.centroid - p).cross(b) / normal.cross(b);
            p + normal * s
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisResult {
    pub m1: Point2,
    pub m2: Point2,
    pub axis: FittedLine,
    /// Segment carrying the sample points.
    pub subdivided: BoundedSegment,
    pub opposing: BoundedSegment,
    /// Sample points on the subdivided segment.
    pub samples: [Point2; 2],
    /// Images of the samples on the opposing line.
    pub projections: [Point2; 2],
    pub d1: f64,
    pub d2: f64,
}

impl AxisResult {
    /// Mean length of the two cross-connections.
    pub fn mean_separation(&self) -> f64 {
        0.5 * (self.samples[0].distance(self.projections[0])
            + self.samples[1].distance(self.projections[1]))
    }

    /// Whether a projection landed beyond the opposing segment's extent.
    pub fn projection_outside_opposing(&self) -> bool {
        let line = &self.opposing.line;
        let (a, b) = (line.parameter(self.opposing.start), line.parameter(self.opposing.end));
        self.projections.iter().any(|&q| {
            let t = line.parameter(q);
            t < a.min(b) - 1e-9 || t > a.max(b) + 1e-9
        })
    }
}

/// Two-line construction with the default [`Projection`].
pub fn construct_axis(
    seg_a: &BoundedSegment,
    seg_b: &BoundedSegment,
    d1: f64,
    d2: f64,
) -> Result<AxisResult> {
    construct_axis_with(seg_a, seg_b, d1, d2, Projection::default())
}

pub fn construct_axis_with(
    seg_a: &BoundedSegment,
    seg_b: &BoundedSegment,
    d1: f64,
    d2: f64,
    projection: Projection,
) -> Result<AxisResult> {
    let (p_a, p_b) = subdivide(seg_a, d1, d2)?;
    let q_a = project_across(p_a, &seg_a.line, &seg_b.line, projection);
    let q_b = project_across(p_b, &seg_a.line, &seg_b.line, projection);
    let m1 = p_a.midpoint(q_a);
    let m2 = p_b.midpoint(q_b);
    if m1.distance(m2) <= 1e-9 {
        return Err(Error::DegenerateAxis(
            "both midpoints coincide".into(),
        ));
    }
    Ok(AxisResult {
        m1,
        m2,
        axis: FittedLine::through(m1, m2)?,
        subdivided: *seg_a,
        opposing: *seg_b,
        samples: [p_a, p_b],
        projections: [q_a, q_b],
        d1,
        d2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn p(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    fn seg(a: Point2, b: Point2) -> BoundedSegment {
        let line = FittedLine::through(a, b).unwrap();
        bound_segment(&line, &[a, b]).unwrap()
    }

    fn close(a: Point2, b: Point2, tol: f64) -> bool {
        a.distance(b) <= tol
    }

    #[test]
    fn fit_collinear_diagonal() {
        let line = fit_major_axis(&[p(0.0, 0.0), p(1.0, 1.0), p(2.0, 2.0)]).unwrap();
        assert!(close(line.centroid(), p(1.0, 1.0), 1e-15));
        assert!(close(line.direction(), p(SQRT_HALF, SQRT_HALF), 1e-15));
    }

    #[test]
    fn fit_symmetric_rectangle_corners() {
        let line =
            fit_major_axis(&[p(0.0, 0.0), p(10.0, 0.0), p(0.0, 1.0), p(10.0, 1.0)]).unwrap();
        assert_eq!(line.direction(), p(1.0, 0.0));
        assert_eq!(line.centroid(), p(5.0, 0.5));
    }

    #[test]
    fn fit_errors() {
        assert!(matches!(
            fit_major_axis(&[]),
            Err(Error::InsufficientSupport { found: 0, .. })
        ));
        assert!(matches!(
            fit_major_axis(&[p(1.0, 1.0), p(1.0, 1.0)]),
            Err(Error::InsufficientSupport { found: 1, .. })
        ));
        let square = [p(0.0, 0.0), p(1.0, 0.0), p(0.0, 1.0), p(1.0, 1.0)];
        assert_eq!(fit_major_axis(&square), Err(Error::DegenerateFit));
    }

    #[test]
    fn direction_is_canonical() {
        let l = FittedLine::new(p(0.0, 0.0), p(-2.0, 1.0)).unwrap();
        assert!(l.direction().x > 0.0);
        let v = FittedLine::new(p(0.0, 0.0), p(0.0, -3.0)).unwrap();
        assert_eq!(v.direction(), p(0.0, 1.0));
        assert!(FittedLine::new(p(0.0, 0.0), p(0.0, 0.0)).is_err());
    }

    #[test]
    fn line_deserialization_normalizes() {
        let l: FittedLine =
            serde_json::from_str(r#"{"centroid": [1, 2], "direction": [0, -4]}"#).unwrap();
        assert_eq!(l.direction(), p(0.0, 1.0));
        assert!(serde_json::from_str::<FittedLine>(r#"{"centroid": [1, 2], "direction": [0, 0]}"#).is_err());
    }

    #[test]
    fn bound_segment_examples() {
        let line = FittedLine::new(p(0.0, 0.0), p(1.0, 0.0)).unwrap();
        let s = bound_segment(&line, &[p(2.0, 1.0), p(8.0, -1.0)]).unwrap();
        assert_eq!((s.start, s.end), (p(2.0, 0.0), p(8.0, 0.0)));
        assert_eq!(bound_segment(&line, &[p(3.0, 3.0)]), Err(Error::DegenerateSegment));
        assert!(bound_segment(&line, &[]).is_err());
    }

    #[test]
    fn subdivide_examples() {
        let s = seg(p(0.0, 0.0), p(10.0, 0.0));
        assert_eq!(subdivide(&s, 2.0, 3.0).unwrap(), (p(2.0, 0.0), p(7.0, 0.0)));
        assert_eq!(subdivide(&s, 0.0, 0.0).unwrap(), (s.start, s.end));
        assert!(matches!(
            subdivide(&s, 4.0, 6.0),
            Err(Error::InvalidSubdivision { .. })
        ));
        assert!(subdivide(&s, -1.0, 1.0).is_err());
    }

    #[test]
    fn projection_and_distance_examples() {
        let x_axis = FittedLine::new(p(0.0, 0.0), p(1.0, 0.0)).unwrap();
        assert_eq!(project_onto_line(p(5.0, 4.0), &x_axis), p(5.0, 0.0));
        assert_eq!(project_onto_line(p(3.0, 0.0), &x_axis), p(3.0, 0.0));
        let diag = FittedLine::new(p(0.0, 0.0), p(1.0, 1.0)).unwrap();
        assert!(close(project_onto_line(p(0.0, 2.0), &diag), p(1.0, 1.0), 1e-15));

        assert_eq!(point_to_line_distance(p(0.0, 3.0), &x_axis), 3.0);
        assert_eq!(point_to_line_distance(p(7.0, 0.0), &x_axis), 0.0);
        let anti = FittedLine::through(p(0.0, 1.0), p(1.0, 0.0)).unwrap();
        assert!((point_to_line_distance(p(0.0, 0.0), &anti) - SQRT_HALF).abs() < 1e-15);
    }

    #[test]
    fn clip_segment_cases() {
        let (lo, hi) = (p(0.0, 0.0), p(10.0, 10.0));
        let (a, b) = clip_segment(p(-5.0, 5.0), p(15.0, 5.0), lo, hi).unwrap();
        assert!(close(a, p(0.0, 5.0), 1e-12) && close(b, p(10.0, 5.0), 1e-12));
        assert_eq!(clip_segment(p(2.0, 2.0), p(3.0, 3.0), lo, hi), Some((p(2.0, 2.0), p(3.0, 3.0))));
        assert!(clip_segment(p(-5.0, 20.0), p(20.0, 15.0), lo, hi).is_none());
        assert!(clip_segment(p(-1.0, 1.0), p(-1.0, 9.0), lo, hi).is_none());
    }

    #[test]
    fn angle_examples() {
        let x_axis = FittedLine::new(p(0.0, 0.0), p(1.0, 0.0)).unwrap();
        let y_axis = FittedLine::new(p(3.0, 0.0), p(0.0, 1.0)).unwrap();
        let diag = FittedLine::new(p(0.0, 0.0), p(1.0, 1.0)).unwrap();
        assert_eq!(angle_between(&x_axis, &x_axis), 0.0);
        assert_eq!(angle_between(&x_axis, &y_axis), 90.0);
        assert!((angle_between(&x_axis, &diag) - 45.0).abs() < 1e-12);
    }

    #[test]
    fn parallel_symmetric_construction() {
        let a = seg(p(0.0, 0.0), p(10.0, 0.0));
        let b = seg(p(0.0, 10.0), p(10.0, 10.0));
        for mode in [Projection::Bisector, Projection::Orthogonal] {
            let r = construct_axis_with(&a, &b, 2.0, 2.0, mode).unwrap();
            assert!(close(r.m1, p(2.0, 5.0), 1e-12));
            assert!(close(r.m2, p(8.0, 5.0), 1e-12));
            assert!(r.axis.contains(p(-40.0, 5.0), 1e-12));
            assert_eq!(r.axis.direction(), p(1.0, 0.0));
        }
    }

    #[test]
    fn orthogonal_projection_on_converging_lines() {
        // b: y = x / 10 through the origin; q = (s cos a) (cos a, sin a) for p = (s, 0)
        let a = seg(p(0.0, 0.0), p(10.0, 0.0));
        let b = seg(p(0.0, 0.0), p(10.0, 1.0));
        let r = construct_axis_with(&a, &b, 1.0, 1.0, Projection::Orthogonal).unwrap();
        assert!(close(r.projections[0], p(100.0 / 101.0, 10.0 / 101.0), 1e-12));
        assert!(close(r.m1, p(201.0 / 202.0, 5.0 / 101.0), 1e-12));
        assert!(close(r.m2, p(9.0 * 201.0 / 202.0, 45.0 / 101.0), 1e-12));
    }

    #[test]
    fn bisector_projection_on_converging_lines() {
        let a = seg(p(0.0, 0.0), p(10.0, 0.0));
        let b = seg(p(0.0, 0.0), p(10.0, 1.0));
        let r = construct_axis(&a, &b, 1.0, 1.0).unwrap();
        for m in [r.m1, r.m2] {
            let da = point_to_line_distance(m, &a.line);
            let db = point_to_line_distance(m, &b.line);
            assert!((da - db).abs() < 1e-12);
        }
        // the mirror image of (1, 0) across the bisector lies on b at the same radius
        assert!((r.projections[0].norm() - 1.0).abs() < 1e-12);
        let half = 0.5 * 0.1f64.atan().to_degrees();
        assert!((r.axis.angle_deg() - (360.0 - half) % 180.0).abs() < 1e-9);
    }

    #[test]
    fn construct_propagates_subdivision_error() {
        let a = seg(p(0.0, 0.0), p(10.0, 0.0));
        let b = seg(p(0.0, 10.0), p(10.0, 10.0));
        assert!(matches!(
            construct_axis(&a, &b, 5.0, 5.0),
            Err(Error::InvalidSubdivision { .. })
        ));
    }

    #[test]
    fn orthogonal_midpoints_can_coincide() {
        // samples 2e-12 apart straddling a perpendicular opposing line
        let a = seg(p(0.0, 0.0), p(10.0, 0.0));
        let b = seg(p(5.0, -5.0), p(5.0, 5.0));
        let r = construct_axis_with(&a, &b, 5.0 - 1e-12, 5.0 - 1e-12, Projection::Orthogonal);
        assert!(matches!(r, Err(Error::DegenerateAxis(_))));
    }

    fn elongated_cloud() -> impl Strategy<Value = Vec<Point2>> {
        (
            -100.0..100.0f64,
            -100.0..100.0f64,
            0.0..180.0f64,
            proptest::collection::vec((-40.0..40.0f64, -2.0..2.0f64), 10..60),
        )
            .prop_map(|(cx, cy, angle, raw)| {
                let u = Point2::from_angle_deg(angle);
                raw.into_iter()
                    .map(|(t, n)| p(cx, cy) + u * t + u.perp() * n)
                    .collect()
            })
    }

    proptest! {
        #[test]
        fn fit_is_invariant_under_axis_swap(points in elongated_cloud()) {
            let fit = fit_major_axis(&points).unwrap();
            let swapped: Vec<_> = points.iter().map(|q| p(q.y, q.x)).collect();
            let fit_s = fit_major_axis(&swapped).unwrap();
            let back = FittedLine::new(
                p(fit_s.centroid().y, fit_s.centroid().x),
                p(fit_s.direction().y, fit_s.direction().x),
            ).unwrap();
            prop_assert!(angle_between(&fit, &back) < 1e-9);
            prop_assert!(point_to_line_distance(back.centroid(), &fit) < 1e-9);
        }

        #[test]
        fn fit_is_rigid_motion_equivariant(
            points in elongated_cloud(),
            angle in -180.0..180.0f64,
            tx in -50.0..50.0f64,
            ty in -50.0..50.0f64,
        ) {
            let fit = fit_major_axis(&points).unwrap();
            let o = Point2::default();
            let t = p(tx, ty);
            let moved: Vec<_> = points.iter().map(|&q| q.rotated_about(o, angle) + t).collect();
            let fit_m = fit_major_axis(&moved).unwrap();
            let expected = FittedLine::new(
                fit.centroid().rotated_about(o, angle) + t,
                fit.direction().rotated_about(o, angle),
            ).unwrap();
            prop_assert!(angle_between(&fit_m, &expected) < 1e-9);
            prop_assert!(point_to_line_distance(fit_m.centroid(), &expected) < 1e-9);
        }

        #[test]
        fn parallel_lines_give_midline_for_any_split(
            angle in 0.0..180.0f64,
            w in 5.0..60.0f64,
            len in 20.0..200.0f64,
            f1 in 0.0..0.49f64,
            f2 in 0.0..0.49f64,
            shift in -30.0..30.0f64,
        ) {
            let u = Point2::from_angle_deg(angle);
            let n = u.perp();
            let o = p(128.0, 128.0);
            let a = seg(o, o + u * len);
            let b = seg(o + n * w + u * shift, o + n * w + u * (shift + len * 0.7));
            let r = construct_axis(&a, &b, f1 * len, f2 * len).unwrap();
            let midline = FittedLine::new(o + n * (0.5 * w), u).unwrap();
            prop_assert!(angle_between(&r.axis, &midline) < 1e-9);
            prop_assert!(point_to_line_distance(r.m1, &midline) < 1e-9);
            prop_assert!(point_to_line_distance(r.m2, &midline) < 1e-9);
        }
    }
}
