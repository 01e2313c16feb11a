//! 2D primitives: points, convex polygons, polylines and Frenet projection.
//!
//! Everything is double precision. Boundaries are closed: touching shapes
//! collide and a point on an edge is inside.

use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

/// Absolute tolerance for geometric equality tests, in meters.
pub const EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polygon is not convex")]
    NotConvex,
    #[error("polygon has zero area")]
    ZeroArea,
    #[error("polyline needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("polyline has coincident consecutive points at index {0}")]
    CoincidentPoints(usize),
    #[error("arclength {s} outside [0, {length}]")]
    OutOfRange { s: f64, length: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, o: Point2) -> f64 {
        (self - o).norm()
    }

    /// Left-hand normal (rotated by +90 degrees).
    pub fn perp(self) -> Point2 {
        Point2::new(-self.y, self.x)
    }

    pub fn rotate(self, theta: f64) -> Point2 {
        let (s, c) = theta.sin_cos();
        Point2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, k: f64) -> Point2 {
        Point2::new(self.x * k, self.y * k)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

/// Planar pose: position and heading.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose {
    pub const fn new(x: f64, y: f64, theta: f64) -> Self {
        Self { x, y, theta }
    }

    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }
}

/// Normalizes an angle to (-pi, pi].
pub fn normalize_angle(a: f64) -> f64 {
    use std::f64::consts::PI;
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}

/// Convex polygon with counter-clockwise vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    vertices: Vec<Point2>,
}

impl Polygon {
    /// Validates and normalizes the vertex list. Clockwise input is reversed.
    pub fn new(mut vertices: Vec<Point2>) -> Result<Self, GeometryError> {
        if vertices.len() < 3 {
            return Err(GeometryError::TooFewVertices(vertices.len()));
        }
        if vertices.iter().any(|p| !p.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let area = signed_area(&vertices);
        if area.abs() <= EPS * EPS {
            return Err(GeometryError::ZeroArea);
        }
        if area < 0.0 {
            vertices.reverse();
        }
        let n = vertices.len();
        let mut turning = 0.0;
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            let c = vertices[(i + 2) % n];
            let e1 = b - a;
            let e2 = c - b;
            if e1.norm() <= EPS {
                return Err(GeometryError::NotConvex);
            }
            // signed distance of c from the line through a-b
            if e1.cross(c - a) / e1.norm() < -EPS {
                return Err(GeometryError::NotConvex);
            }
            turning += e1.cross(e2).atan2(e1.dot(e2));
        }
        // a star polygon winds more than once
        if (turning - 2.0 * std::f64::consts::PI).abs() > 1e-6 {
            return Err(GeometryError::NotConvex);
        }
        Ok(Self { vertices })
    }

    /// Axis-aligned rectangle centered on the origin, length along x.
    pub fn rectangle(length: f64, width: f64) -> Result<Self, GeometryError> {
        let (hl, hw) = (length / 2.0, width / 2.0);
        Polygon::new(vec![
            Point2::new(-hl, -hw),
            Point2::new(hl, -hw),
            Point2::new(hl, hw),
            Point2::new(-hl, hw),
        ])
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn centroid(&self) -> Point2 {
        let n = self.vertices.len();
        let (mut cx, mut cy, mut a2) = (0.0, 0.0, 0.0);
        for i in 0..n {
            let p = self.vertices[i];
            let q = self.vertices[(i + 1) % n];
            let w = p.cross(q);
            a2 += w;
            cx += (p.x + q.x) * w;
            cy += (p.y + q.y) * w;
        }
        Point2::new(cx / (3.0 * a2), cy / (3.0 * a2))
    }

    /// Rotates by `pose.theta` about the origin, then translates.
    pub fn transform(&self, pose: Pose) -> Polygon {
        let t = Point2::new(pose.x, pose.y);
        let (s, c) = pose.theta.sin_cos();
        Polygon {
            vertices: self
                .vertices
                .iter()
                .map(|p| Point2::new(c * p.x - s * p.y, s * p.x + c * p.y) + t)
                .collect(),
        }
    }

    /// Separating-axis test on closed regions; touching counts.
    pub fn collides(&self, other: &Polygon) -> bool {
        !has_separating_axis(&self.vertices, &other.vertices)
            && !has_separating_axis(&other.vertices, &self.vertices)
    }

    pub fn contains_point(&self, p: Point2) -> bool {
        let n = self.vertices.len();
        (0..n).all(|i| {
            let a = self.vertices[i];
            let e = self.vertices[(i + 1) % n] - a;
            e.cross(p - a) / e.norm() >= -EPS
        })
    }

    /// Every vertex of `inner` lies inside (or on) `self`.
    pub fn contains_polygon(&self, inner: &Polygon) -> bool {
        inner.vertices.iter().all(|&p| self.contains_point(p))
    }

    /// Extent along the body x axis.
    pub fn length(&self) -> f64 {
        let (lo, hi) = self
            .vertices
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                (lo.min(p.x), hi.max(p.x))
            });
        hi - lo
    }

    pub fn width(&self) -> f64 {
        let (lo, hi) = self
            .vertices
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                (lo.min(p.y), hi.max(p.y))
            });
        hi - lo
    }
}

fn signed_area(v: &[Point2]) -> f64 {
    let n = v.len();
    (0..n).map(|i| v[i].cross(v[(i + 1) % n])).sum::<f64>() / 2.0
}

fn has_separating_axis(edges_of: &[Point2], other: &[Point2]) -> bool {
    let n = edges_of.len();
    for i in 0..n {
        let e = edges_of[(i + 1) % n] - edges_of[i];
        let len = e.norm();
        let axis = e.perp() * (1.0 / len);
        let (a_lo, a_hi) = project(edges_of, axis);
        let (b_lo, b_hi) = project(other, axis);
        if a_hi < b_lo - EPS || b_hi < a_lo - EPS {
            return true;
        }
    }
    false
}

fn project(v: &[Point2], axis: Point2) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            let d = p.dot(axis);
            (lo.min(d), hi.max(d))
        })
}

/// A region given as a union of convex pieces.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Region {
    parts: Vec<Polygon>,
}

impl Region {
    pub fn new(parts: Vec<Polygon>) -> Self {
        Self { parts }
    }

    pub fn parts(&self) -> &[Polygon] {
        &self.parts
    }

    pub fn extend(&mut self, other: &Region) {
        self.parts.extend(other.parts.iter().cloned());
    }

    pub fn contains_point(&self, p: Point2) -> bool {
        self.parts.iter().any(|q| q.contains_point(p))
    }

    /// Every vertex of `inner` lies in some piece.
    pub fn contains_polygon(&self, inner: &Polygon) -> bool {
        inner.vertices().iter().all(|&p| self.contains_point(p))
    }

    pub fn collides(&self, poly: &Polygon) -> bool {
        self.parts.iter().any(|q| q.collides(poly))
    }
}

/// Arclength and signed lateral offset (left of travel is positive).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrenetCoord {
    pub s: f64,
    pub d: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    points: Vec<Point2>,
    cumulative: Vec<f64>,
}

impl Polyline {
    pub fn new(points: Vec<Point2>) -> Result<Self, GeometryError> {
        if points.len() < 2 {
            return Err(GeometryError::TooFewPoints(points.len()));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let mut cumulative = Vec::with_capacity(points.len());
        cumulative.push(0.0);
        for i in 1..points.len() {
            let l = points[i].distance(points[i - 1]);
            if l <= EPS {
                return Err(GeometryError::CoincidentPoints(i));
            }
            cumulative.push(cumulative[i - 1] + l);
        }
        Ok(Self { points, cumulative })
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn length(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    pub fn segment_count(&self) -> usize {
        self.points.len() - 1
    }

    /// Index of the segment holding arclength `s` (clamped to valid segments).
    pub fn segment_at(&self, s: f64) -> usize {
        let idx = self.cumulative.partition_point(|&c| c <= s);
        idx.saturating_sub(1).min(self.segment_count() - 1)
    }

    fn segment(&self, i: usize) -> (Point2, Point2, f64) {
        let a = self.points[i];
        let b = self.points[i + 1];
        (a, b, self.cumulative[i + 1] - self.cumulative[i])
    }

    /// Closest-point projection, clamped to the polyline ends. Ties go to the
    /// smaller arclength.
    pub fn project(&self, p: Point2) -> FrenetCoord {
        self.project_impl(p, false)
    }

    /// Like [`Polyline::project`] but the first and last segments extend to
    /// infinity, so `s` may leave `[0, length]`.
    pub fn project_extended(&self, p: Point2) -> FrenetCoord {
        self.project_impl(p, true)
    }

    fn project_impl(&self, p: Point2, extend: bool) -> FrenetCoord {
        let last = self.segment_count() - 1;
        let mut best = (f64::INFINITY, FrenetCoord { s: 0.0, d: 0.0 });
        for i in 0..=last {
            let (a, b, len) = self.segment(i);
            let dir = (b - a) * (1.0 / len);
            let rel = p - a;
            let mut t = rel.dot(dir);
            let lo = if extend && i == 0 {
                f64::NEG_INFINITY
            } else {
                0.0
            };
            let hi = if extend && i == last {
                f64::INFINITY
            } else {
                len
            };
            t = t.clamp(lo, hi);
            let foot = a + dir * t;
            let dist = p.distance(foot);
            if dist < best.0 - 1e-12 {
                let d = dir.cross(p - foot);
                best = (
                    dist,
                    FrenetCoord {
                        s: self.cumulative[i] + t,
                        d,
                    },
                );
            }
        }
        best.1
    }

    /// Point at arclength `s`, shifted `d` to the left, and the segment heading.
    pub fn point_at(&self, s: f64, d: f64) -> Result<(Point2, f64), GeometryError> {
        let length = self.length();
        if !(s >= -EPS && s <= length + EPS) {
            return Err(GeometryError::OutOfRange { s, length });
        }
        Ok(self.point_at_extended(s.clamp(0.0, length), d))
    }

    /// Point at arclength `s`, extrapolating linearly past either end.
    pub fn point_at_extended(&self, s: f64, d: f64) -> (Point2, f64) {
        let i = self.segment_at(s);
        let (a, b, len) = self.segment(i);
        let dir = (b - a) * (1.0 / len);
        let t = s - self.cumulative[i];
        let p = a + dir * t + dir.perp() * d;
        (p, dir.y.atan2(dir.x))
    }

    pub fn heading_at(&self, s: f64) -> f64 {
        let (a, b, _) = self.segment(self.segment_at(s));
        let dir = b - a;
        dir.y.atan2(dir.x)
    }
}
