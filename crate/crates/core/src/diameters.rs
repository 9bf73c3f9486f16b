//! Diameters: chords whose endpoint perpendiculars do not locally separate
//! the boundary. Enumeration, orientation, extremum type, stability.
//!
//! Conventions: a chord runs from `q1` to `q2` with `s(q1) < s(q2)`. `P1` is
//! the counterclockwise boundary arc from `q1` to `q2`, `P2` the other one.
//! After rotating the chord to point up (`q1` bottom), a branch direction `b`
//! has vertical component `b . d` and horizontal component `cross(b, d)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{segment_intersection, BoundaryParam, Point, Polygon, GEO_REL_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EndpointKind {
    Vertex(usize),
    EdgeInterior(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChordEnd {
    pub point: Point,
    pub s: BoundaryParam,
    pub kind: EndpointKind,
}

/// A candidate chord. `family` marks a representative of a parallel-edge
/// family of common perpendiculars.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Chord {
    pub q1: ChordEnd,
    pub q2: ChordEnd,
    pub family: bool,
}

impl Chord {
    fn new(a: ChordEnd, b: ChordEnd, family: bool) -> Self {
        if a.s.0 <= b.s.0 {
            Chord { q1: a, q2: b, family }
        } else {
            Chord { q1: b, q2: a, family }
        }
    }

    pub fn length(&self) -> f64 {
        self.q1.point.dist(self.q2.point)
    }

    /// Unit direction from `q1` to `q2`.
    pub fn dir(&self) -> Point {
        (self.q2.point - self.q1.point).normalized()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Orientation {
    Positive,
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Extremum {
    Min,
    Max,
    Saddle,
    Flat,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diameter {
    pub q1: ChordEnd,
    pub q2: ChordEnd,
    pub orientation: Orientation,
    pub extremum: Extremum,
    pub stable: bool,
    pub tricky: bool,
    pub length: f64,
}

impl Diameter {
    pub fn chord(&self) -> Chord {
        Chord { q1: self.q1, q2: self.q2, family: false }
    }
}

/// Outgoing unit boundary directions at one chord endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchPair {
    /// Direction into the arc `P1`.
    pub p1: Point,
    /// Direction into the arc `P2`.
    pub p2: Point,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiameterError {
    #[error("boundary branch at {0} is tangent to the chord's perpendicular")]
    AmbiguousTangency(Point),
    #[error("boundary branches at {0} are parallel; left/right is undefined")]
    TieBreakFailure(Point),
}

fn forward_dir(p: &Polygon, kind: EndpointKind) -> Point {
    match kind {
        EndpointKind::Vertex(i) => p.edge(i).dir,
        EndpointKind::EdgeInterior(e) => p.edge(e).dir,
    }
}

fn backward_dir(p: &Polygon, kind: EndpointKind) -> Point {
    match kind {
        EndpointKind::Vertex(i) => -p.edge(p.prev_edge(i)).dir,
        EndpointKind::EdgeInterior(e) => -p.edge(e).dir,
    }
}

/// Branch pairs at `q1` and `q2`.
pub fn branch_pairs(p: &Polygon, chord: &Chord) -> [BranchPair; 2] {
    [
        BranchPair { p1: forward_dir(p, chord.q1.kind), p2: backward_dir(p, chord.q1.kind) },
        BranchPair { p1: backward_dir(p, chord.q2.kind), p2: forward_dir(p, chord.q2.kind) },
    ]
}

fn vertical(b: Point, d: Point) -> f64 {
    b.dot(d)
}

fn horizontal(b: Point, d: Point) -> f64 {
    b.cross(d)
}

/// Non-separation test at both endpoints.
pub fn is_diameter(p: &Polygon, chord: &Chord) -> Result<bool, DiameterError> {
    let d = chord.dir();
    let tol = GEO_REL_TOL;
    for (end, br) in [chord.q1, chord.q2].iter().zip(branch_pairs(p, chord)) {
        let (a, b) = (vertical(br.p1, d), vertical(br.p2, d));
        match end.kind {
            EndpointKind::EdgeInterior(_) => {
                if a.abs() > tol {
                    return Ok(false);
                }
            }
            EndpointKind::Vertex(_) => {
                if a.abs() <= tol || b.abs() <= tol {
                    return Err(DiameterError::AmbiguousTangency(end.point));
                }
                if a.signum() != b.signum() {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// Non-strict version of the vertex test: a branch may be tangent to the
/// perpendicular. Used to recognise tricky diameters.
fn is_weak_diameter(p: &Polygon, chord: &Chord) -> bool {
    let d = chord.dir();
    let tol = GEO_REL_TOL;
    [chord.q1, chord.q2].iter().zip(branch_pairs(p, chord)).all(|(end, br)| {
        let (a, b) = (vertical(br.p1, d), vertical(br.p2, d));
        match end.kind {
            EndpointKind::EdgeInterior(_) => a.abs() <= tol,
            EndpointKind::Vertex(_) => a * b >= -tol * tol || a.abs() <= tol || b.abs() <= tol,
        }
    })
}

pub fn orientation_sign(p: &Polygon, chord: &Chord) -> Result<Orientation, DiameterError> {
    let d = chord.dir();
    let mut left = [false; 2];
    for (i, (end, br)) in [chord.q1, chord.q2].iter().zip(branch_pairs(p, chord)).enumerate() {
        let (x1, x2) = (horizontal(br.p1, d), horizontal(br.p2, d));
        if (x1 - x2).abs() <= GEO_REL_TOL {
            return Err(DiameterError::TieBreakFailure(end.point));
        }
        left[i] = x1 < x2;
    }
    Ok(if left[0] == left[1] { Orientation::Positive } else { Orientation::Negative })
}

#[derive(Clone, Copy, PartialEq)]
enum EndType {
    MaxLike,
    MinLike,
    Flat,
    Mixed,
}

pub fn classify_extremum(p: &Polygon, chord: &Chord) -> Extremum {
    let d = chord.dir();
    let tol = GEO_REL_TOL;
    let brs = branch_pairs(p, chord);
    let mut types = [EndType::Mixed; 2];
    for (i, end) in [chord.q1, chord.q2].iter().enumerate() {
        let (a, b) = (vertical(brs[i].p1, d), vertical(brs[i].p2, d));
        // toward the chord interior: up at the bottom end, down at the top end
        let inward = if i == 0 { 1.0 } else { -1.0 };
        types[i] = if matches!(end.kind, EndpointKind::EdgeInterior(_)) || (a.abs() <= tol && b.abs() <= tol) {
            EndType::Flat
        } else if a * inward > 0.0 && b * inward > 0.0 {
            EndType::MaxLike
        } else if a * inward < 0.0 && b * inward < 0.0 {
            EndType::MinLike
        } else {
            EndType::Mixed
        };
    }
    match types {
        [EndType::Flat, _] | [_, EndType::Flat] => Extremum::Flat,
        [EndType::MaxLike, EndType::MaxLike] => Extremum::Max,
        [EndType::MinLike, EndType::MinLike] => Extremum::Min,
        _ => Extremum::Saddle,
    }
}

fn incident_edges_perpendicular(p: &Polygon, end: &ChordEnd, d: Point) -> bool {
    match end.kind {
        EndpointKind::Vertex(i) => {
            let (a, b) = (p.edge(i).dir, p.edge(p.prev_edge(i)).dir);
            a.dot(d).abs() <= GEO_REL_TOL || b.dot(d).abs() <= GEO_REL_TOL
        }
        EndpointKind::EdgeInterior(_) => false,
    }
}

/// Both endpoints are vertices and an incident edge is perpendicular to the chord.
pub fn is_tricky(p: &Polygon, chord: &Chord) -> bool {
    let d = chord.dir();
    let both_vertices = matches!(chord.q1.kind, EndpointKind::Vertex(_))
        && matches!(chord.q2.kind, EndpointKind::Vertex(_));
    both_vertices
        && (incident_edges_perpendicular(p, &chord.q1, d) || incident_edges_perpendicular(p, &chord.q2, d))
}

/// At least one vertex endpoint and no incident edge perpendicular to the chord.
pub fn is_stable(p: &Polygon, chord: &Chord) -> bool {
    let d = chord.dir();
    let has_vertex = [chord.q1, chord.q2].iter().any(|e| matches!(e.kind, EndpointKind::Vertex(_)));
    has_vertex && ![chord.q1, chord.q2].iter().any(|e| incident_edges_perpendicular(p, e, d))
}

/// Whether the open chord stays inside the polygon.
pub fn chord_is_interior(p: &Polygon, chord: &Chord) -> bool {
    let (a, b) = (chord.q1.point, chord.q2.point);
    let tol = GEO_REL_TOL;
    for e in p.edges() {
        if let Some((s, t)) = segment_intersection(a, b, e.start, e.end) {
            if s > tol && s < 1.0 - tol && t > -tol && t < 1.0 + tol {
                return false;
            }
        }
    }
    let mid = (a + b) * 0.5;
    p.contains(mid) || p.dist_to_boundary(mid) <= p.eps_geo()
}

fn vertex_end(p: &Polygon, i: usize) -> ChordEnd {
    ChordEnd { point: p.vertices()[i], s: BoundaryParam(p.edge(i).s0), kind: EndpointKind::Vertex(i) }
}

fn interior_end(p: &Polygon, e: usize, t: f64) -> ChordEnd {
    let edge = p.edge(e);
    ChordEnd { point: edge.at(t), s: BoundaryParam(edge.s0 + t), kind: EndpointKind::EdgeInterior(e) }
}

/// All vertex pairs, vertex-to-edge perpendicular feet strictly inside an
/// edge, and one representative common perpendicular per parallel edge
/// pair (flagged as a family).
pub fn enumerate_candidates(p: &Polygon) -> Vec<Chord> {
    let n = p.len();
    let mut out = vec![];
    for i in 0..n {
        for j in (i + 1)..n {
            out.push(Chord::new(vertex_end(p, i), vertex_end(p, j), false));
        }
    }
    let rel = GEO_REL_TOL;
    for i in 0..n {
        let v = p.vertices()[i];
        for e in 0..n {
            if e == i || e == p.prev_edge(i) {
                continue;
            }
            let edge = p.edge(e);
            let t = (v - edge.start).dot(edge.dir);
            if t > rel * edge.len && t < (1.0 - rel) * edge.len && edge.at(t).dist(v) > p.eps_geo() {
                out.push(Chord::new(vertex_end(p, i), interior_end(p, e, t), false));
            }
        }
    }
    for e in 0..n {
        for f in (e + 1)..n {
            let (ee, ff) = (p.edge(e), p.edge(f));
            if ee.dir.cross(ff.dir).abs() > rel {
                continue;
            }
            // overlap of the projections of f onto e's line
            let t0 = (ff.start - ee.start).dot(ee.dir);
            let t1 = (ff.end - ee.start).dot(ee.dir);
            let (lo, hi) = (t0.min(t1).max(0.0), t0.max(t1).min(ee.len));
            if hi - lo <= rel * ee.len {
                continue;
            }
            let t = 0.5 * (lo + hi);
            let q = ee.at(t);
            let u = (q - ff.start).dot(ff.dir);
            let foot = ff.at(u);
            if foot.dist(q) <= p.eps_geo() {
                continue;
            }
            out.push(Chord::new(interior_end(p, e, t), interior_end(p, f, u), true));
        }
    }
    out
}

/// Diameter analysis of a polygon.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct DiameterReport {
    /// All diameters, positive and negative, sorted by `(length, s1, s2)`.
    pub diameters: Vec<Diameter>,
    /// Parallel-edge families (continua of isometric degenerate rectangles).
    pub families: Vec<Chord>,
    /// Chords whose status could not be decided at first order.
    pub ambiguous: Vec<Chord>,
}

impl DiameterReport {
    pub fn positive(&self) -> Vec<Diameter> {
        self.diameters.iter().copied().filter(|d| d.orientation == Orientation::Positive).collect()
    }

    pub fn delta_plus(&self) -> usize {
        self.diameters.iter().filter(|d| d.orientation == Orientation::Positive).count()
    }

    pub fn has_tricky(&self) -> bool {
        self.diameters.iter().any(|d| d.tricky)
    }

    /// No parallel-edge families, no ambiguous chords, no tricky diameters.
    pub fn is_generic(&self) -> bool {
        self.families.is_empty() && self.ambiguous.is_empty() && !self.has_tricky()
    }
}

fn make_diameter(p: &Polygon, c: &Chord, orientation: Orientation) -> Diameter {
    Diameter {
        q1: c.q1,
        q2: c.q2,
        orientation,
        extremum: classify_extremum(p, c),
        stable: is_stable(p, c),
        tricky: is_tricky(p, c),
        length: c.length(),
    }
}

pub fn analyze(p: &Polygon) -> DiameterReport {
    let mut rep = DiameterReport::default();
    for c in enumerate_candidates(p) {
        if c.family {
            if is_weak_diameter(p, &c) {
                rep.families.push(c);
            }
            continue;
        }
        match is_diameter(p, &c) {
            Ok(true) => match orientation_sign(p, &c) {
                Ok(o) => rep.diameters.push(make_diameter(p, &c, o)),
                Err(_) => rep.ambiguous.push(c),
            },
            Ok(false) => {}
            Err(DiameterError::AmbiguousTangency(_)) => {
                if !is_weak_diameter(p, &c) {
                    continue;
                }
                match (is_tricky(p, &c), orientation_sign(p, &c)) {
                    (true, Ok(o)) => rep.diameters.push(make_diameter(p, &c, o)),
                    _ => rep.ambiguous.push(c),
                }
            }
            Err(DiameterError::TieBreakFailure(_)) => rep.ambiguous.push(c),
        }
    }
    rep.diameters.sort_by(|a, b| {
        (a.length, a.q1.s.0, a.q2.s.0).partial_cmp(&(b.length, b.q1.s.0, b.q2.s.0)).unwrap()
    });
    rep
}

pub fn positive_diameters(p: &Polygon) -> Vec<Diameter> {
    analyze(p).positive()
}

pub fn delta_plus(p: &Polygon) -> usize {
    analyze(p).delta_plus()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(raw: &[(f64, f64)]) -> Polygon {
        Polygon::new(raw.iter().map(|&(x, y)| Point::new(x, y)).collect()).unwrap()
    }

    fn obtuse() -> Polygon {
        poly(&[(0.0, 0.0), (4.0, 0.0), (1.0, 1.0)])
    }

    fn find(p: &Polygon, a: Point, b: Point) -> Chord {
        enumerate_candidates(p)
            .into_iter()
            .find(|c| {
                (c.q1.point.dist(a) < 1e-12 && c.q2.point.dist(b) < 1e-12)
                    || (c.q1.point.dist(b) < 1e-12 && c.q2.point.dist(a) < 1e-12)
            })
            .expect("candidate present")
    }

    #[test]
    fn obtuse_triangle_candidates() {
        let p = obtuse();
        let cands = enumerate_candidates(&p);
        assert_eq!(cands.iter().filter(|c| !c.family).count(), 4);
        let foot = find(&p, Point::new(1.0, 1.0), Point::new(1.0, 0.0));
        assert_eq!(foot.q1.kind, EndpointKind::EdgeInterior(0));
    }

    #[test]
    fn obtuse_triangle_diameter_tests() {
        let p = obtuse();
        let long = find(&p, Point::new(0.0, 0.0), Point::new(4.0, 0.0));
        let short = find(&p, Point::new(0.0, 0.0), Point::new(1.0, 1.0));
        let alt = find(&p, Point::new(1.0, 1.0), Point::new(1.0, 0.0));
        assert_eq!(is_diameter(&p, &long), Ok(true));
        assert_eq!(is_diameter(&p, &short), Ok(false));
        assert_eq!(is_diameter(&p, &alt), Ok(true));
        assert_eq!(orientation_sign(&p, &long), Ok(Orientation::Positive));
        assert_eq!(orientation_sign(&p, &alt), Ok(Orientation::Positive));
        assert_eq!(classify_extremum(&p, &long), Extremum::Max);
        assert_eq!(classify_extremum(&p, &alt), Extremum::Flat);
        assert!(!is_tricky(&p, &long));
        assert!(is_stable(&p, &long));
        assert_eq!(delta_plus(&p), 2);
    }

    #[test]
    fn right_triangle_leg_is_tricky() {
        let p = poly(&[(0.0, 0.0), (4.0, 0.0), (0.0, 3.0)]);
        let leg = find(&p, Point::new(0.0, 0.0), Point::new(0.0, 3.0));
        assert!(is_tricky(&p, &leg));
        assert!(matches!(is_diameter(&p, &leg), Err(DiameterError::AmbiguousTangency(_))));
        let rep = analyze(&p);
        assert!(rep.has_tricky());
    }

    #[test]
    fn square_reports_parallel_families() {
        let p = poly(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]);
        let rep = analyze(&p);
        assert_eq!(rep.families.len(), 2);
        assert!(!rep.is_generic());
        for f in &rep.families {
            let c = Chord { family: true, ..*f };
            assert!(!is_stable(&p, &c));
        }
    }

    #[test]
    fn convex_vertex_pair_count() {
        let p = poly(&[(0.0, 0.0), (3.0, -0.2), (4.0, 1.5), (2.2, 3.0), (-0.5, 2.0)]);
        let pairs = enumerate_candidates(&p)
            .iter()
            .filter(|c| matches!((c.q1.kind, c.q2.kind), (EndpointKind::Vertex(_), EndpointKind::Vertex(_))))
            .count();
        assert_eq!(pairs, 10);
    }

    #[test]
    fn mirror_preserves_orientation() {
        let p = poly(&[(0.0, 0.0), (3.0, -0.2), (4.0, 1.5), (2.2, 3.0), (1.5, 1.2), (-0.5, 2.0)]);
        let m = p.map(|q| Point::new(-q.x, q.y)).unwrap();
        let (a, b) = (analyze(&p), analyze(&m));
        assert_eq!(a.diameters.len(), b.diameters.len());
        assert_eq!(a.delta_plus(), b.delta_plus());
        for d in &a.diameters {
            let (m1, m2) = (Point::new(-d.q1.point.x, d.q1.point.y), Point::new(-d.q2.point.x, d.q2.point.y));
            let e = b
                .diameters
                .iter()
                .find(|e| {
                    (e.q1.point.dist(m1) < 1e-12 && e.q2.point.dist(m2) < 1e-12)
                        || (e.q1.point.dist(m2) < 1e-12 && e.q2.point.dist(m1) < 1e-12)
                })
                .unwrap();
            assert_eq!(d.orientation, e.orientation);
            assert_eq!(d.extremum, e.extremum);
        }
    }

    #[test]
    fn longest_vertex_chord_of_convex_polygon_is_max() {
        let p = poly(&[(0.0, 0.0), (3.0, -0.2), (4.0, 1.5), (2.2, 3.0), (-0.5, 2.0)]);
        let rep = analyze(&p);
        let longest = enumerate_candidates(&p)
            .into_iter()
            .filter(|c| !c.family)
            .max_by(|a, b| a.length().partial_cmp(&b.length()).unwrap())
            .unwrap();
        let d = rep.diameters.iter().find(|d| (d.length - longest.length()).abs() < 1e-12).unwrap();
        assert_eq!(d.extremum, Extremum::Max);
    }
}
