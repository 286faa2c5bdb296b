//! Planar primitives and the tolerance policy used by every verifier.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::intervals::{normalize_angle, AngularIntervalSet, Interval};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("undefined direction: center and target coincide")]
    UndefinedDirection,
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("rectangle sides must be positive and finite (got {a} x {b})")]
    BadRectangle { a: f64, b: f64 },
    #[error("tolerance {tau} must satisfy 0 < tau < r_s/1000 (r_s = {r_s})")]
    BadTolerance { tau: f64, r_s: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn try_new(x: f64, y: f64) -> Result<Self, GeometryError> {
        if x.is_finite() && y.is_finite() {
            Ok(Self { x, y })
        } else {
            Err(GeometryError::NonFinite)
        }
    }

    pub fn dist(&self, other: &Point) -> f64 {
        dist(*self, *other)
    }

    pub fn dist2(&self, other: &Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn at_angle(center: Point, r: f64, theta: f64) -> Point {
        Point::new(center.x + r * theta.cos(), center.y + r * theta.sin())
    }
}

impl From<[f64; 2]> for Point {
    fn from([x, y]: [f64; 2]) -> Self {
        Point::new(x, y)
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

/// Axis-aligned region `[0, a] x [0, b]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rectangle {
    pub a: f64,
    pub b: f64,
}

impl Rectangle {
    pub fn new(a: f64, b: f64) -> Result<Self, GeometryError> {
        if a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite() {
            Ok(Self { a, b })
        } else {
            Err(GeometryError::BadRectangle { a, b })
        }
    }

    /// Both sides are at least `r_s` long.
    pub fn is_valid_for(&self, r_s: f64) -> bool {
        r_s <= self.a && r_s <= self.b
    }

    pub fn contains(&self, p: Point) -> bool {
        self.contains_with_slack(p, 0.0)
    }

    pub fn contains_with_slack(&self, p: Point, slack: f64) -> bool {
        p.x >= -slack && p.x <= self.a + slack && p.y >= -slack && p.y <= self.b + slack
    }

    pub fn clamp(&self, p: Point) -> Point {
        Point::new(p.x.clamp(0.0, self.a), p.y.clamp(0.0, self.b))
    }

    pub fn center(&self) -> Point {
        Point::new(0.5 * self.a, 0.5 * self.b)
    }

    pub fn area(&self) -> f64 {
        self.a * self.b
    }

    /// Edges in counter-clockwise order starting with the bottom edge.
    pub fn edges(&self) -> [(Point, Point); 4] {
        let p00 = Point::new(0.0, 0.0);
        let pa0 = Point::new(self.a, 0.0);
        let pab = Point::new(self.a, self.b);
        let p0b = Point::new(0.0, self.b);
        [(p00, pa0), (pa0, pab), (pab, p0b), (p0b, p00)]
    }
}

/// Comparison band for strict-inequality predicates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    tau: f64,
}

impl Tolerance {
    pub const DEFAULT_RELATIVE: f64 = 1e-9;

    pub fn new(tau: f64, r_s: f64) -> Result<Self, GeometryError> {
        if tau > 0.0 && tau.is_finite() && tau < r_s / 1000.0 {
            Ok(Self { tau })
        } else {
            Err(GeometryError::BadTolerance { tau, r_s })
        }
    }

    pub fn default_for(r_s: f64) -> Self {
        Self {
            tau: Self::DEFAULT_RELATIVE * r_s,
        }
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }
}

pub fn dist(p: Point, q: Point) -> f64 {
    (p.x - q.x).hypot(p.y - q.y)
}

/// Intersection of two circles of equal radius.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CircleIntersection {
    None,
    Tangent(Point),
    /// The first point lies to the left of the direction `c1 -> c2`.
    Two(Point, Point),
}

impl CircleIntersection {
    pub fn points(&self) -> Vec<Point> {
        match *self {
            CircleIntersection::None => vec![],
            CircleIntersection::Tangent(p) => vec![p],
            CircleIntersection::Two(p, q) => vec![p, q],
        }
    }
}

pub fn circle_circle_intersection(c1: Point, c2: Point, r: f64, tau: f64) -> CircleIntersection {
    let d = dist(c1, c2);
    if d == 0.0 || d > 2.0 * r + tau {
        return CircleIntersection::None;
    }
    let ux = (c2.x - c1.x) / d;
    let uy = (c2.y - c1.y) / d;
    let mid = Point::new(0.5 * (c1.x + c2.x), 0.5 * (c1.y + c2.y));
    if (d - 2.0 * r).abs() <= tau {
        return CircleIntersection::Tangent(mid);
    }
    let h = (r * r - 0.25 * d * d).sqrt();
    CircleIntersection::Two(
        Point::new(mid.x - h * uy, mid.y + h * ux),
        Point::new(mid.x + h * uy, mid.y - h * ux),
    )
}

pub fn point_on_circle_toward(center: Point, r: f64, target: Point) -> Result<Point, GeometryError> {
    let d = dist(center, target);
    if d == 0.0 {
        return Err(GeometryError::UndefinedDirection);
    }
    Ok(Point::new(
        center.x + r * (target.x - center.x) / d,
        center.y + r * (target.y - center.y) / d,
    ))
}

/// Angles `θ` for which `c + r(cos θ, sin θ)` lies in the closed rectangle.
pub fn circle_rect_angular_intervals(c: Point, r: f64, rect: &Rectangle) -> AngularIntervalSet {
    // Crossing angles carry rounding error, so membership tests are made
    // with a slack a few ulps wide. The result can only grow from this.
    let slack = 64.0 * f64::EPSILON * (c.x.abs() + c.y.abs() + r + rect.a + rect.b);
    let mut crossings: Vec<f64> = Vec::with_capacity(8);
    for (origin, along_x, bound) in [
        (c.x, true, 0.0),
        (c.x, true, rect.a),
        (c.y, false, 0.0),
        (c.y, false, rect.b),
    ] {
        let k = (bound - origin) / r;
        if k.abs() > 1.0 {
            continue;
        }
        if along_x {
            let base = k.acos();
            crossings.push(normalize_angle(base));
            crossings.push(normalize_angle(-base));
        } else {
            let base = k.asin();
            crossings.push(normalize_angle(base));
            crossings.push(normalize_angle(std::f64::consts::PI - base));
        }
    }
    crossings.sort_by(f64::total_cmp);
    crossings.dedup();

    if crossings.is_empty() {
        return if rect.contains_with_slack(Point::at_angle(c, r, 0.0), slack) {
            AngularIntervalSet::full()
        } else {
            AngularIntervalSet::empty()
        };
    }

    let mut arcs = Vec::with_capacity(2 * crossings.len());
    let n = crossings.len();
    for k in 0..n {
        let start = crossings[k];
        let end = if k + 1 < n {
            crossings[k + 1]
        } else {
            crossings[0] + std::f64::consts::TAU
        };
        let span = end - start;
        if rect.contains_with_slack(Point::at_angle(c, r, start), slack) {
            arcs.push((start, 0.0, true, true));
        }
        if span > 0.0 && rect.contains_with_slack(Point::at_angle(c, r, start + 0.5 * span), slack) {
            arcs.push((start, span, true, true));
        }
    }
    AngularIntervalSet::from_arcs(arcs)
}

/// Parameter interval of `p0 + t (p1 - p0)`, `t ∈ [0, 1]`, strictly inside
/// the open disk of radius `r` around `c`. Ends are closed exactly where the
/// segment endpoint itself is inside the disk.
pub fn disk_segment_covered_interval(c: Point, r: f64, p0: Point, p1: Point) -> Option<Interval> {
    let (lo, hi) = segment_disk_roots(c, r, p0, p1)?;
    if hi <= 0.0 || lo >= 1.0 || lo >= hi {
        return None;
    }
    let piece = Interval::new(lo.max(0.0), hi.min(1.0), lo < 0.0, hi > 1.0);
    (!piece.is_empty()).then_some(piece)
}

/// Closed parameter interval where the segment is within distance `r` of `c`.
pub fn disk_segment_closed_interval(c: Point, r: f64, p0: Point, p1: Point) -> Option<Interval> {
    let (lo, hi) = segment_disk_roots(c, r, p0, p1)?;
    let piece = Interval::closed(lo.max(0.0), hi.min(1.0));
    (!piece.is_empty()).then_some(piece)
}

fn segment_disk_roots(c: Point, r: f64, p0: Point, p1: Point) -> Option<(f64, f64)> {
    let dx = p1.x - p0.x;
    let dy = p1.y - p0.y;
    let fx = p0.x - c.x;
    let fy = p0.y - c.y;
    let a = dx * dx + dy * dy;
    if a == 0.0 {
        return None;
    }
    let half_b = dx * fx + dy * fy;
    let cc = fx * fx + fy * fy - r * r;
    let disc = half_b * half_b - a * cc;
    if disc < 0.0 {
        return None;
    }
    let s = disc.sqrt();
    // Cancellation-free pair of roots.
    let q = if half_b >= 0.0 { -(half_b + s) } else { -half_b + s };
    let (t1, t2) = if q == 0.0 {
        (0.0, 0.0)
    } else {
        (q / a, cc / q)
    };
    Some((t1.min(t2), t1.max(t2)))
}

/// Closed arc of the circle `(center, radius)` lying within distance `reach`
/// of `q`.
pub fn circle_within_disk_arc(center: Point, radius: f64, q: Point, reach: f64) -> AngularIntervalSet {
    let d = dist(center, q);
    if d == 0.0 {
        return if radius <= reach {
            AngularIntervalSet::full()
        } else {
            AngularIntervalSet::empty()
        };
    }
    let k = (radius * radius + d * d - reach * reach) / (2.0 * radius * d);
    if k <= -1.0 {
        return AngularIntervalSet::full();
    }
    if k > 1.0 {
        return AngularIntervalSet::empty();
    }
    let phi = (q.y - center.y).atan2(q.x - center.x);
    let half = k.acos();
    AngularIntervalSet::arc(phi - half, 2.0 * half, true, true)
}

/// Open arc of the circle `(center, radius)` strictly inside the disk
/// `(other, radius)`.
pub fn covered_arc_by_equal_disk(center: Point, other: Point, radius: f64) -> Option<(f64, f64)> {
    let d = dist(center, other);
    if d == 0.0 || d >= 2.0 * radius {
        return None;
    }
    let phi = (other.y - center.y).atan2(other.x - center.x);
    let half = (d / (2.0 * radius)).acos();
    Some((phi - half, 2.0 * half))
}
