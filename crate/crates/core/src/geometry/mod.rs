//! Polygonal domains and the distance-based primitives the spectral formulas
//! consume.

mod boundary;
pub(crate) mod extent;

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use boundary::{
    distance_to_boundary, sample_boundary, ArcLabel, BoundaryArc, BoundaryPartition, BoundarySegment, BoundarySet, Distance,
    DistanceQuery, DistanceTarget, NearestFeature,
};
pub use extent::{euclidean_diameter, geodesic_diameter, inradius, Diameter, Inradius, TOL_GEOM_REL};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("vertex {0} has a non-finite coordinate")]
    NonFinite(usize),
    #[error("vertices {0} and {1} coincide")]
    DuplicateVertex(usize, usize),
    #[error("edges {0} and {1} intersect")]
    SelfIntersection(usize, usize),
    #[error("polygon has zero area")]
    ZeroArea,
    #[error("boundary partition invalid: {0}")]
    InvalidPartition(String),
    #[error("targeted boundary set is empty")]
    EmptyTarget,
}

/// A point (or vector) in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
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

    /// Counterclockwise quarter turn.
    pub fn perp(self) -> Point {
        Point::new(-self.y, self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn lerp(self, o: Point, t: f64) -> Point {
        self + (o - self) * t
    }

    /// Lexicographic comparison, used for deterministic tie-breaking.
    pub fn lex_cmp(self, o: Point) -> std::cmp::Ordering {
        self.x.total_cmp(&o.x).then(self.y.total_cmp(&o.y))
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
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

impl From<[f64; 2]> for Point {
    fn from(v: [f64; 2]) -> Self {
        Point::new(v[0], v[1])
    }
}

/// Closest point to `x` on segment `[a, b]` and its parameter in `[0, 1]`.
pub fn project_on_segment(x: Point, a: Point, b: Point) -> (Point, f64) {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return (a, 0.0);
    }
    let t = ((x - a).dot(ab) / len2).clamp(0.0, 1.0);
    (a + ab * t, t)
}

pub fn segment_distance(x: Point, a: Point, b: Point) -> f64 {
    project_on_segment(x, a, b).0.dist(x)
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b - a).cross(c - a)
}

/// Closed-segment intersection test with a relative tolerance on the
/// orientation predicates.
pub(crate) fn segments_intersect(a: Point, b: Point, c: Point, d: Point, eps: f64) -> bool {
    let o1 = orient(a, b, c);
    let o2 = orient(a, b, d);
    let o3 = orient(c, d, a);
    let o4 = orient(c, d, b);
    let s = |v: f64| {
        if v > eps {
            1
        } else if v < -eps {
            -1
        } else {
            0
        }
    };
    let (s1, s2, s3, s4) = (s(o1), s(o2), s(o3), s(o4));
    if s1 * s2 < 0 && s3 * s4 < 0 {
        return true;
    }
    let on = |p: Point, q: Point, r: Point| {
        r.x >= p.x.min(q.x) - eps.sqrt()
            && r.x <= p.x.max(q.x) + eps.sqrt()
            && r.y >= p.y.min(q.y) - eps.sqrt()
            && r.y <= p.y.max(q.y) + eps.sqrt()
    };
    (s1 == 0 && on(a, b, c))
        || (s2 == 0 && on(a, b, d))
        || (s3 == 0 && on(c, d, a))
        || (s4 == 0 && on(c, d, b))
}

/// A simple, positively oriented polygon.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Polygon {
    vertices: Vec<Point>,
}

impl Polygon {
    /// Validates raw vertices and returns a counterclockwise polygon.
    pub fn new(raw: Vec<Point>) -> Result<Self, GeometryError> {
        validate_polygon(raw)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    /// Endpoints of edge `i`, running from vertex `i` to vertex `i + 1`.
    pub fn edge(&self, i: usize) -> (Point, Point) {
        let n = self.vertices.len();
        (self.vertices[i], self.vertices[(i + 1) % n])
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        (0..self.vertices.len()).map(move |i| self.edge(i))
    }

    /// Inward unit normal of edge `i` (left of the edge direction).
    pub fn inward_normal(&self, i: usize) -> Point {
        let (a, b) = self.edge(i);
        let d = b - a;
        d.perp() * (1.0 / d.norm())
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn perimeter(&self) -> f64 {
        self.edges().map(|(a, b)| a.dist(b)).sum()
    }

    pub fn min_edge_length(&self) -> f64 {
        self.edges().map(|(a, b)| a.dist(b)).fold(f64::INFINITY, f64::min)
    }

    pub fn centroid(&self) -> Point {
        let mut cx = 0.0;
        let mut cy = 0.0;
        for (a, b) in self.edges() {
            let w = a.cross(b);
            cx += (a.x + b.x) * w;
            cy += (a.y + b.y) * w;
        }
        let k = 1.0 / (6.0 * self.area());
        Point::new(cx * k, cy * k)
    }

    /// Axis-aligned bounding box as (min, max).
    pub fn bbox(&self) -> (Point, Point) {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = Point::new(lo.x.min(v.x), lo.y.min(v.y));
            hi = Point::new(hi.x.max(v.x), hi.y.max(v.y));
        }
        (lo, hi)
    }

    /// Length of the bounding-box diagonal; a cheap scale for tolerances.
    pub fn scale(&self) -> f64 {
        let (lo, hi) = self.bbox();
        lo.dist(hi)
    }

    pub fn is_convex(&self) -> bool {
        let n = self.vertices.len();
        let eps = 1e-14 * self.scale() * self.scale();
        (0..n).all(|i| !self.is_reflex(i, eps))
    }

    /// True when the interior angle at vertex `i` exceeds pi.
    pub fn is_reflex_vertex(&self, i: usize) -> bool {
        let eps = 1e-14 * self.scale() * self.scale();
        self.is_reflex(i, eps)
    }

    fn is_reflex(&self, i: usize, eps: f64) -> bool {
        let n = self.vertices.len();
        let prev = self.vertices[(i + n - 1) % n];
        let cur = self.vertices[i];
        let next = self.vertices[(i + 1) % n];
        orient(prev, cur, next) < -eps
    }

    /// Whether `x` lies on the boundary within `tol`.
    pub fn on_boundary(&self, x: Point, tol: f64) -> bool {
        self.edges().any(|(a, b)| segment_distance(x, a, b) <= tol)
    }

    /// Closed-set membership: interior or boundary (within a tiny tolerance).
    pub fn contains(&self, x: Point) -> bool {
        let tol = 1e-12 * self.scale();
        if self.on_boundary(x, tol) {
            return true;
        }
        self.contains_strict(x)
    }

    /// Crossing-number interior test; boundary points are unspecified.
    pub fn contains_strict(&self, x: Point) -> bool {
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.y > x.y) != (b.y > x.y) {
                let xi = a.x + (x.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if x.x < xi {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Applies `f` to every vertex and revalidates.
    pub fn map(&self, f: impl Fn(Point) -> Point) -> Result<Polygon, GeometryError> {
        Polygon::new(self.vertices.iter().map(|&v| f(v)).collect())
    }

    /// Whether the closed segment `[p, q]` stays inside the closed polygon.
    pub fn segment_inside(&self, p: Point, q: Point) -> bool {
        let scale = self.scale();
        let eps = 1e-12 * scale * scale;
        let mut ts = vec![0.0, 1.0];
        let d = q - p;
        let len2 = d.dot(d);
        if len2 == 0.0 {
            return self.contains(p);
        }
        for (a, b) in self.edges() {
            let oa = orient(p, q, a);
            let ob = orient(p, q, b);
            let oc = orient(a, b, p);
            let od = orient(a, b, q);
            let proper = oa.abs() > eps && ob.abs() > eps && oc.abs() > eps && od.abs() > eps;
            if proper && oa * ob < 0.0 && oc * od < 0.0 {
                return false;
            }
            // parameters where the segment meets this edge's vertices or crosses it
            for v in [a, b] {
                let t = (v - p).dot(d) / len2;
                if t > 0.0 && t < 1.0 && segment_distance(v, p, q) <= 1e-12 * scale {
                    ts.push(t);
                }
            }
            let denom = d.cross(b - a);
            if denom.abs() > eps {
                let t = (a - p).cross(b - a) / denom;
                let u = (a - p).cross(d) / denom;
                if t > 0.0 && t < 1.0 && (-1e-12..=1.0 + 1e-12).contains(&u) {
                    ts.push(t);
                }
            }
        }
        ts.sort_by(f64::total_cmp);
        ts.windows(2)
            .all(|w| w[1] - w[0] < 1e-15 || self.contains(p.lerp(q, 0.5 * (w[0] + w[1]))))
    }
}

fn signed_area(v: &[Point]) -> f64 {
    let n = v.len();
    0.5 * (0..n).map(|i| v[i].cross(v[(i + 1) % n])).sum::<f64>()
}

/// Checks simplicity and orientation, reversing clockwise input.
pub fn validate_polygon(raw: Vec<Point>) -> Result<Polygon, GeometryError> {
    let n = raw.len();
    if n < 3 {
        return Err(GeometryError::TooFewVertices(n));
    }
    if let Some(i) = raw.iter().position(|p| !p.is_finite()) {
        return Err(GeometryError::NonFinite(i));
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if raw[i] == raw[j] {
                return Err(GeometryError::DuplicateVertex(i, j));
            }
        }
    }
    let probe = Polygon { vertices: raw };
    let scale = probe.scale();
    let eps = 1e-13 * scale * scale;
    for i in 0..n {
        let (a, b) = probe.edge(i);
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            let (c, d) = probe.edge(j);
            if adjacent {
                // adjacent edges share one vertex; they may only overlap if they fold back
                let shared = if j == i + 1 { b } else { a };
                let (other_i, other_j) = if j == i + 1 { (a, d) } else { (b, c) };
                let u = other_i - shared;
                let w = other_j - shared;
                if u.cross(w).abs() <= eps && u.dot(w) > 0.0 {
                    return Err(GeometryError::SelfIntersection(i, j));
                }
                continue;
            }
            if segments_intersect(a, b, c, d, eps) {
                return Err(GeometryError::SelfIntersection(i, j));
            }
        }
    }
    let area = signed_area(&probe.vertices);
    if area.abs() <= 1e-14 * scale * scale {
        return Err(GeometryError::ZeroArea);
    }
    let mut vertices = probe.vertices;
    if area < 0.0 {
        vertices.reverse();
    }
    Ok(Polygon { vertices })
}
