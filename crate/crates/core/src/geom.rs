//! Planar primitives: points, validated polygons with an arclength
//! parametrization of the boundary, labeled rectangles and signed areas.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative geometric tolerance; multiplied by the polygon perimeter.
pub const GEO_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3d cross product.
    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Point) -> f64 {
        (self - o).norm()
    }

    pub fn normalized(self) -> Point {
        let n = self.norm();
        Point::new(self.x / n, self.y / n)
    }

    /// Rotation by +90 degrees.
    pub fn perp(self) -> Point {
        Point::new(-self.y, self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
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

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Shoelace signed area of the closed chain `pts` (last point joins the first).
/// Counterclockwise chains are positive.
pub fn signed_area(pts: &[Point]) -> f64 {
    if pts.len() < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for (i, p) in pts.iter().enumerate() {
        let q = pts[(i + 1) % pts.len()];
        acc += p.cross(q);
    }
    0.5 * acc
}

/// Arclength position along the boundary, in `[0, perimeter)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
pub struct BoundaryParam(pub f64);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub start: Point,
    pub end: Point,
    /// Unit direction from `start` to `end`.
    pub dir: Point,
    pub len: f64,
    /// Boundary parameter of `start`.
    pub s0: f64,
}

impl Edge {
    pub fn at(&self, t: f64) -> Point {
        self.start + self.dir * t
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolygonError {
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("vertex {0} is not finite")]
    NonFinite(usize),
    #[error("edge {0} has zero length")]
    ZeroLengthEdge(usize),
    #[error("vertices {0}, {1}, {2} are collinear")]
    CollinearRun(usize, usize, usize),
    #[error("edges {0} and {1} intersect")]
    SelfIntersecting(usize, usize),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("point {0} is not on the polygon boundary (distance {1:e})")]
pub struct NotOnBoundary(pub Point, pub f64);

/// A simple polygon stored counterclockwise, with its edge table.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    vertices: Vec<Point>,
    edges: Vec<Edge>,
    perimeter: f64,
    area: f64,
}

impl Polygon {
    /// Validates a raw vertex chain and normalizes it to counterclockwise order.
    /// Clockwise input is reversed keeping the first vertex in place.
    pub fn new(raw: Vec<Point>) -> Result<Self, PolygonError> {
        let n = raw.len();
        if n < 3 {
            return Err(PolygonError::TooFewVertices(n));
        }
        if let Some(i) = raw.iter().position(|p| !p.is_finite()) {
            return Err(PolygonError::NonFinite(i));
        }
        let scale: f64 = (0..n).map(|i| raw[i].dist(raw[(i + 1) % n])).sum();
        for i in 0..n {
            if raw[i].dist(raw[(i + 1) % n]) <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
                return Err(PolygonError::ZeroLengthEdge(i));
            }
        }
        for i in 0..n {
            let a = raw[(i + n - 1) % n];
            let b = raw[i];
            let c = raw[(i + 1) % n];
            let (u, v) = (b - a, c - b);
            if u.cross(v).abs() <= 1e-12 * u.norm() * v.norm() {
                return Err(PolygonError::CollinearRun((i + n - 1) % n, i, (i + 1) % n));
            }
        }
        let tol = 1e-12 * scale;
        for i in 0..n {
            for j in (i + 2)..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (a, b) = (raw[i], raw[(i + 1) % n]);
                let (c, d) = (raw[j], raw[(j + 1) % n]);
                if segments_touch(a, b, c, d, tol) {
                    return Err(PolygonError::SelfIntersecting(i, j));
                }
            }
        }
        let mut vertices = raw;
        if signed_area(&vertices) < 0.0 {
            vertices[1..].reverse();
        }
        Ok(Self::from_ccw(vertices))
    }

    fn from_ccw(vertices: Vec<Point>) -> Self {
        let n = vertices.len();
        let mut edges = Vec::with_capacity(n);
        let mut s = 0.0;
        for i in 0..n {
            let (a, b) = (vertices[i], vertices[(i + 1) % n]);
            let len = a.dist(b);
            edges.push(Edge { start: a, end: b, dir: (b - a) * (1.0 / len), len, s0: s });
            s += len;
        }
        let area = signed_area(&vertices);
        Self { vertices, edges, perimeter: s, area }
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, i: usize) -> &Edge {
        &self.edges[i]
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn perimeter(&self) -> f64 {
        self.perimeter
    }

    /// Enclosed area (positive).
    pub fn area(&self) -> f64 {
        self.area
    }

    /// Default geometric tolerance, scaled by the perimeter.
    pub fn eps_geo(&self) -> f64 {
        GEO_REL_TOL * self.perimeter
    }

    pub fn next_edge(&self, i: usize) -> usize {
        (i + 1) % self.len()
    }

    pub fn prev_edge(&self, i: usize) -> usize {
        (i + self.len() - 1) % self.len()
    }

    /// Reduces any real parameter into `[0, perimeter)`.
    pub fn wrap(&self, s: f64) -> f64 {
        let r = s.rem_euclid(self.perimeter);
        if r >= self.perimeter {
            0.0
        } else {
            r
        }
    }

    /// Index of the edge containing parameter `s` (half-open edges).
    pub fn edge_at(&self, s: f64) -> usize {
        let s = self.wrap(s);
        match self.edges.binary_search_by(|e| e.s0.partial_cmp(&s).unwrap()) {
            Ok(i) => i,
            Err(i) => i.saturating_sub(1),
        }
    }

    pub fn boundary_point(&self, s: BoundaryParam) -> Point {
        let s = self.wrap(s.0);
        let e = &self.edges[self.edge_at(s)];
        e.at((s - e.s0).min(e.len))
    }

    /// Inverse of [`Polygon::boundary_point`] using the default tolerance.
    pub fn boundary_param(&self, q: Point) -> Result<BoundaryParam, NotOnBoundary> {
        self.boundary_param_tol(q, self.eps_geo())
    }

    pub fn boundary_param_tol(&self, q: Point, tol: f64) -> Result<BoundaryParam, NotOnBoundary> {
        let (i, t, d) = self.closest_on_boundary(q);
        if d > tol {
            return Err(NotOnBoundary(q, d));
        }
        Ok(BoundaryParam(self.wrap(self.edges[i].s0 + t)))
    }

    /// Closest boundary point as `(edge, offset along edge, distance)`.
    pub fn closest_on_boundary(&self, q: Point) -> (usize, f64, f64) {
        let mut best = (0, 0.0, f64::INFINITY);
        for (i, e) in self.edges.iter().enumerate() {
            let t = (q - e.start).dot(e.dir).clamp(0.0, e.len);
            let d = e.at(t).dist(q);
            if d < best.2 {
                best = (i, t, d);
            }
        }
        best
    }

    pub fn dist_to_boundary(&self, q: Point) -> f64 {
        self.closest_on_boundary(q).2
    }

    /// Even-odd containment test; boundary points are unspecified.
    pub fn contains(&self, q: Point) -> bool {
        let mut inside = false;
        let n = self.len();
        for i in 0..n {
            let (a, b) = (self.vertices[i], self.vertices[(i + 1) % n]);
            if (a.y > q.y) != (b.y > q.y) {
                let x = a.x + (q.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if q.x < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Applies `f` to every vertex and revalidates.
    pub fn map(&self, f: impl Fn(Point) -> Point) -> Result<Polygon, PolygonError> {
        Polygon::new(self.vertices.iter().map(|&p| f(p)).collect())
    }
}

/// Closed-segment intersection test with a distance tolerance.
pub fn segments_touch(a: Point, b: Point, c: Point, d: Point, tol: f64) -> bool {
    if let Some((s, t)) = segment_intersection(a, b, c, d) {
        if (-0.0..=1.0).contains(&s) && (0.0..=1.0).contains(&t) {
            return true;
        }
    }
    point_segment_dist(a, c, d) <= tol
        || point_segment_dist(b, c, d) <= tol
        || point_segment_dist(c, a, b) <= tol
        || point_segment_dist(d, a, b) <= tol
}

/// Parameters `(s, t)` with `a + s(b-a) = c + t(d-c)`, or `None` for parallel lines.
pub fn segment_intersection(a: Point, b: Point, c: Point, d: Point) -> Option<(f64, f64)> {
    let r = b - a;
    let q = d - c;
    let den = r.cross(q);
    if den == 0.0 {
        return None;
    }
    let w = c - a;
    Some((w.cross(q) / den, w.cross(r) / den))
}

pub fn point_segment_dist(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let l2 = ab.dot(ab);
    if l2 == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(ab) / l2).clamp(0.0, 1.0);
    p.dist(a + ab * t)
}

/// True iff the four parameters are cyclically monotone in either rotational
/// sense. Equal parameters count as monotone.
pub fn cyclic_order_ok(s: [BoundaryParam; 4]) -> bool {
    let mut desc = 0;
    let mut asc = 0;
    for i in 0..4 {
        let (a, b) = (s[i].0, s[(i + 1) % 4].0);
        if b < a {
            desc += 1;
        } else if b > a {
            asc += 1;
        }
    }
    desc <= 1 || asc <= 1
}

/// Counterclockwise gaps `s[j+1] - s[j]` (mod perimeter) between consecutive
/// vertices, when the four parameters are in counterclockwise cyclic order.
/// Gaps within `tol` of a full turn are read as ties.
pub fn ccw_gaps(s: [f64; 4], perimeter: f64, tol: f64) -> Option<[f64; 4]> {
    let mut g = [0.0; 4];
    for j in 0..4 {
        let mut d = (s[(j + 1) % 4] - s[j]).rem_euclid(perimeter);
        if d > perimeter - tol || d < tol {
            d = 0.0;
        }
        g[j] = d;
    }
    let total: f64 = g.iter().sum();
    if (total - perimeter).abs() <= 4.0 * tol || (total == 0.0) {
        Some(g)
    } else {
        None
    }
}

/// A labeled rectangle `R1 R2 R3 R4`, possibly degenerate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledRectangle {
    pub v: [Point; 4],
    /// `|R1 - R2|`
    pub x: f64,
    /// `|R2 - R3|`
    pub y: f64,
}

impl LabeledRectangle {
    pub fn new(v: [Point; 4]) -> Self {
        Self { v, x: v[0].dist(v[1]), y: v[1].dist(v[2]) }
    }

    /// The parallelogram completed from three vertices: `R4 = R1 - R2 + R3`.
    pub fn from_three(r1: Point, r2: Point, r3: Point) -> Self {
        Self::new([r1, r2, r3, r1 - r2 + r3])
    }

    /// Parallelogram closure residual `|R1 + R3 - R2 - R4|`.
    pub fn closure_residual(&self) -> f64 {
        (self.v[0] + self.v[2] - self.v[1] - self.v[3]).norm()
    }

    /// Right-angle residual `|(R1 - R2) . (R3 - R2)|`.
    pub fn orthogonality_residual(&self) -> f64 {
        (self.v[0] - self.v[1]).dot(self.v[2] - self.v[1]).abs()
    }

    /// Checks both invariants at the relative tolerance `rel`.
    pub fn is_valid(&self, rel: f64) -> bool {
        let s = self.x + self.y + 1.0;
        self.closure_residual() <= rel * s && self.orthogonality_residual() <= rel * s * s
    }

    pub fn is_degenerate(&self, tol: f64) -> bool {
        self.x <= tol || self.y <= tol
    }

    /// Cyclic relabeling by `k` steps: `(R1..R4) -> (R_{1+k} .. R_{4+k})`.
    /// Odd shifts swap `X` and `Y`.
    pub fn shifted(&self, k: usize) -> Self {
        let k = k % 4;
        Self::new([self.v[k], self.v[(k + 1) % 4], self.v[(k + 2) % 4], self.v[(k + 3) % 4]])
    }

    /// Reverses the vertex order keeping `R1`: `(R1, R4, R3, R2)`.
    pub fn reversed(&self) -> Self {
        Self::new([self.v[0], self.v[3], self.v[2], self.v[1]])
    }

    /// Max vertex distance; the metric used on rectangle space.
    pub fn distance(&self, o: &LabeledRectangle) -> f64 {
        (0..4).map(|j| self.v[j].dist(o.v[j])).fold(0.0, f64::max)
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.v)
    }
}
