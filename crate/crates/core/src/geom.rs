//! Planar points and the exact chord/circle clipping that ball-mass
//! queries are built on.

use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Sub};

/// A point in the plane, also used as a 2-vector.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PlanePoint {
    pub x: f64,
    pub y: f64,
}

impl PlanePoint {
    pub const ORIGIN: PlanePoint = PlanePoint { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        PlanePoint { x, y }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn dot(self, other: PlanePoint) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm2(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm2().sqrt()
    }

    pub fn dist(self, other: PlanePoint) -> f64 {
        (self - other).norm()
    }

    /// Point at parameter `t` on the segment from `self` to `other`.
    pub fn lerp(self, other: PlanePoint, t: f64) -> PlanePoint {
        self + (other - self) * t
    }
}

impl Add for PlanePoint {
    type Output = PlanePoint;
    fn add(self, o: PlanePoint) -> PlanePoint {
        PlanePoint::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for PlanePoint {
    type Output = PlanePoint;
    fn sub(self, o: PlanePoint) -> PlanePoint {
        PlanePoint::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for PlanePoint {
    type Output = PlanePoint;
    fn mul(self, s: f64) -> PlanePoint {
        PlanePoint::new(self.x * s, self.y * s)
    }
}

/// Relative tolerance on the chord/circle discriminant; a grazing contact
/// below it counts as no crossing.
const DISC_REL_TOL: f64 = 1e-12;

/// Parameter interval of `a + t (b - a)`, `t` in `[0, 1]`, lying strictly
/// inside the open disc `B(center, r)`. `None` when that portion is empty
/// (including tangency).
pub(crate) fn clip_segment_to_disc(
    a: PlanePoint,
    b: PlanePoint,
    center: PlanePoint,
    r: f64,
) -> Option<(f64, f64)> {
    let d = b - a;
    let f = a - center;
    let qa = d.norm2();
    if qa == 0.0 {
        return None;
    }
    let qb = f.dot(d); // half the linear coefficient
    let qc = f.norm2() - r * r;
    let disc = qb * qb - qa * qc;
    let scale = (qb * qb).max((qa * qc).abs());
    if disc <= DISC_REL_TOL * scale {
        return None;
    }
    let sq = disc.sqrt();
    let t0 = ((-qb - sq) / qa).max(0.0);
    let t1 = ((-qb + sq) / qa).min(1.0);
    if t1 > t0 {
        Some((t0, t1))
    } else {
        None
    }
}

pub(crate) fn point_segment_dist2(p: PlanePoint, a: PlanePoint, b: PlanePoint) -> f64 {
    let d = b - a;
    let l2 = d.norm2();
    if l2 == 0.0 {
        return (p - a).norm2();
    }
    let t = ((p - a).dot(d) / l2).clamp(0.0, 1.0);
    (p - a.lerp(b, t)).norm2()
}

fn orient(a: PlanePoint, b: PlanePoint, c: PlanePoint) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn segments_properly_intersect(
    p1: PlanePoint,
    p2: PlanePoint,
    p3: PlanePoint,
    p4: PlanePoint,
) -> bool {
    let d1 = orient(p3, p4, p1);
    let d2 = orient(p3, p4, p2);
    let d3 = orient(p1, p2, p3);
    let d4 = orient(p1, p2, p4);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

/// Squared minimum distance between two segments. Collinear touching is
/// covered by the endpoint distances.
pub(crate) fn seg_seg_dist2(
    p1: PlanePoint,
    p2: PlanePoint,
    p3: PlanePoint,
    p4: PlanePoint,
) -> f64 {
    if segments_properly_intersect(p1, p2, p3, p4) {
        return 0.0;
    }
    point_segment_dist2(p1, p3, p4)
        .min(point_segment_dist2(p2, p3, p4))
        .min(point_segment_dist2(p3, p1, p2))
        .min(point_segment_dist2(p4, p1, p2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clip_full_segment_inside() {
        let (t0, t1) = clip_segment_to_disc(
            PlanePoint::new(-0.2, 0.0),
            PlanePoint::new(0.3, 0.1),
            PlanePoint::ORIGIN,
            1.0,
        )
        .unwrap();
        assert_eq!((t0, t1), (0.0, 1.0));
    }

    #[test]
    fn clip_crossing_chord() {
        // Horizontal line through the unit circle: inside for x in (-1, 1).
        let (t0, t1) = clip_segment_to_disc(
            PlanePoint::new(-2.0, 0.0),
            PlanePoint::new(2.0, 0.0),
            PlanePoint::ORIGIN,
            1.0,
        )
        .unwrap();
        assert!((t0 - 0.25).abs() < 1e-14);
        assert!((t1 - 0.75).abs() < 1e-14);
    }

    #[test]
    fn clip_miss_and_tangent() {
        assert!(clip_segment_to_disc(
            PlanePoint::new(-1.0, 2.0),
            PlanePoint::new(1.0, 2.0),
            PlanePoint::ORIGIN,
            1.0
        )
        .is_none());
        // Tangent line contributes no open-ball length.
        assert!(clip_segment_to_disc(
            PlanePoint::new(-1.0, 1.0),
            PlanePoint::new(1.0, 1.0),
            PlanePoint::ORIGIN,
            1.0
        )
        .is_none());
    }

    #[test]
    fn seg_seg_distances() {
        let a = PlanePoint::new(0.0, 0.0);
        let b = PlanePoint::new(1.0, 0.0);
        let c = PlanePoint::new(0.5, 0.5);
        let d = PlanePoint::new(0.5, 2.0);
        assert!((seg_seg_dist2(a, b, c, d).sqrt() - 0.5).abs() < 1e-14);
        // Crossing segments are at distance zero.
        let e = PlanePoint::new(0.5, -0.5);
        assert_eq!(seg_seg_dist2(a, b, e, c), 0.0);
        // Shared endpoint.
        assert_eq!(seg_seg_dist2(a, b, b, d), 0.0);
    }
}
