//! Exact planar primitives shared by the planner, the conflict detector and
//! the validators.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance for exact-geometry predicates.
pub const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Point) -> f64 {
        (self - o).norm()
    }

    pub fn lerp(self, o: Point, t: f64) -> Point {
        self + (o - self) * t
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<[f64; 2]> for Point {
    fn from([x, y]: [f64; 2]) -> Self {
        Point { x, y }
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, k: f64) -> Point {
        Point::new(self.x * k, self.y * k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: Point,
    pub b: Point,
}

impl Segment {
    pub const fn new(a: Point, b: Point) -> Self {
        Segment { a, b }
    }

    pub fn length(&self) -> f64 {
        self.a.dist(self.b)
    }

    pub fn at(&self, t: f64) -> Point {
        self.a.lerp(self.b, t)
    }

    /// Parameter in [0, 1] of the point of this segment closest to `p`.
    pub fn project(&self, p: Point) -> f64 {
        let d = self.b - self.a;
        let len2 = d.dot(d);
        if len2 <= EPS * EPS {
            return 0.0;
        }
        ((p - self.a).dot(d) / len2).clamp(0.0, 1.0)
    }

    pub fn closest_to(&self, p: Point) -> Point {
        self.at(self.project(p))
    }

    pub fn dist_to_point(&self, p: Point) -> f64 {
        self.closest_to(p).dist(p)
    }
}

/// Axis-aligned rectangle; `(x, y)` is the lower-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl Rect {
    pub const fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Rect { x, y, w, h }
    }

    pub fn min(&self) -> Point {
        Point::new(self.x, self.y)
    }

    pub fn max(&self) -> Point {
        Point::new(self.x + self.w, self.y + self.h)
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x && p.x <= self.x + self.w && p.y >= self.y && p.y <= self.y + self.h
    }

    pub fn corners(&self) -> [Point; 4] {
        let (lo, hi) = (self.min(), self.max());
        [lo, Point::new(hi.x, lo.y), hi, Point::new(lo.x, hi.y)]
    }

    pub fn edges(&self) -> [Segment; 4] {
        let c = self.corners();
        [
            Segment::new(c[0], c[1]),
            Segment::new(c[1], c[2]),
            Segment::new(c[2], c[3]),
            Segment::new(c[3], c[0]),
        ]
    }

    pub fn dist_to_point(&self, p: Point) -> f64 {
        let dx = (self.x - p.x).max(0.0).max(p.x - (self.x + self.w));
        let dy = (self.y - p.y).max(0.0).max(p.y - (self.y + self.h));
        dx.hypot(dy)
    }
}

/// Ordered point sequence without consecutive duplicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Point>", into = "Vec<Point>")]
pub struct Polyline {
    points: Vec<Point>,
}

impl Polyline {
    /// Builds a polyline, dropping consecutive duplicate points.
    pub fn new(points: impl IntoIterator<Item = Point>) -> Result<Self> {
        let mut out: Vec<Point> = Vec::new();
        for p in points {
            if !p.is_finite() {
                return Err(Error::InvalidGeometry(format!("non-finite point {p:?}")));
            }
            if out.last().is_none_or(|&q| q != p) {
                out.push(p);
            }
        }
        if out.is_empty() {
            return Err(Error::InvalidGeometry("polyline needs at least one point".into()));
        }
        Ok(Polyline { points: out })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn first(&self) -> Point {
        self.points[0]
    }

    pub fn last(&self) -> Point {
        self.points[self.points.len() - 1]
    }

    pub fn segments(&self) -> impl Iterator<Item = Segment> + '_ {
        self.points.windows(2).map(|w| Segment::new(w[0], w[1]))
    }

    pub fn length(&self) -> f64 {
        polyline_length(&self.points)
    }

    /// Angles at every interior vertex, in degrees.
    pub fn interior_angles(&self) -> Vec<f64> {
        self.points
            .windows(3)
            .filter_map(|w| angle_at_vertex(w[0], w[1], w[2]).ok())
            .collect()
    }

    pub fn min_angle(&self) -> Option<f64> {
        self.interior_angles().into_iter().reduce(f64::min)
    }
}

impl TryFrom<Vec<Point>> for Polyline {
    type Error = Error;
    fn try_from(v: Vec<Point>) -> Result<Self> {
        Polyline::new(v)
    }
}

impl From<Polyline> for Vec<Point> {
    fn from(p: Polyline) -> Self {
        p.points
    }
}

pub fn polyline_length(points: &[Point]) -> f64 {
    points.windows(2).map(|w| w[0].dist(w[1])).sum()
}

/// A point shared by both closed segments, if any.
///
/// Overlapping collinear segments report the overlap endpoint nearest `s1.a`.
pub fn segment_intersection(s1: Segment, s2: Segment) -> Option<Point> {
    let d1 = s1.b - s1.a;
    let d2 = s2.b - s2.a;
    let l1 = d1.norm();
    let l2 = d2.norm();

    if l1 <= EPS {
        return (s2.dist_to_point(s1.a) <= EPS).then_some(s1.a);
    }
    if l2 <= EPS {
        return (s1.dist_to_point(s2.a) <= EPS).then_some(s2.a);
    }

    let denom = d1.cross(d2);
    let w = s2.a - s1.a;
    if denom.abs() <= EPS * l1 * l2 {
        // Parallel: only collinear overlap can intersect.
        if w.cross(d1).abs() > EPS * l1 {
            return None;
        }
        let len2 = d1.dot(d1);
        let t0 = w.dot(d1) / len2;
        let t1 = (s2.b - s1.a).dot(d1) / len2;
        let lo = t0.min(t1).max(0.0);
        let hi = t0.max(t1).min(1.0);
        let tol = EPS / l1;
        return (lo <= hi + tol).then(|| s1.at(lo.min(1.0)));
    }

    let t = w.cross(d2) / denom;
    let u = w.cross(d1) / denom;
    let tol1 = EPS / l1;
    let tol2 = EPS / l2;
    if t >= -tol1 && t <= 1.0 + tol1 && u >= -tol2 && u <= 1.0 + tol2 {
        Some(s1.at(t.clamp(0.0, 1.0)))
    } else {
        None
    }
}

/// Closest pair of points between two segments and their distance.
pub fn closest_points(s1: Segment, s2: Segment) -> (Point, Point, f64) {
    if let Some(x) = segment_intersection(s1, s2) {
        return (x, x, 0.0);
    }
    // Disjoint segments attain their minimum distance at an endpoint of one of them.
    let candidates = [
        (s1.a, s2.closest_to(s1.a)),
        (s1.b, s2.closest_to(s1.b)),
        (s1.closest_to(s2.a), s2.a),
        (s1.closest_to(s2.b), s2.b),
    ];
    candidates
        .into_iter()
        .map(|(p, q)| (p, q, p.dist(q)))
        .min_by(|a, b| a.2.total_cmp(&b.2))
        .expect("four candidates")
}

pub fn segment_rect_distance(s: Segment, r: &Rect) -> f64 {
    if r.contains(s.a) || r.contains(s.b) {
        return 0.0;
    }
    if r.edges().iter().any(|e| segment_intersection(s, *e).is_some()) {
        return 0.0;
    }
    let from_ends = r.dist_to_point(s.a).min(r.dist_to_point(s.b));
    r.corners()
        .iter()
        .map(|&c| s.dist_to_point(c))
        .fold(from_ends, f64::min)
}

/// Angle at `b` between `b→a` and `b→c`, in degrees within [0, 180].
pub fn angle_at_vertex(a: Point, b: Point, c: Point) -> Result<f64> {
    let v = a - b;
    let w = c - b;
    let (nv, nw) = (v.norm(), w.norm());
    if nv <= EPS || nw <= EPS {
        return Err(Error::InvalidGeometry(format!(
            "degenerate angle at {b:?}: vertex coincides with a neighbour"
        )));
    }
    let cos = (v.dot(w) / (nv * nw)).clamp(-1.0, 1.0);
    Ok(cos.acos().to_degrees())
}
