//! Brute-force finder of inscribed rectangles by two-point shooting.
//!
//! Two boundary points `p1, p2` fix a side; the rectangle's other two
//! vertices lie on the line through `p2` perpendicular to that side. Every
//! boundary crossing of that line proposes `R3`, and the proposal is kept
//! when `R4 = p1 + (R3 - p2)` is near the boundary. Near-hits are then
//! refined by Gauss-Newton on the four boundary parameters. Nothing here
//! consults the chart machinery.

use nalgebra::{Matrix3, Matrix3x4, Vector3, Vector4};
use thiserror::Error;

use crate::geom::{ccw_gaps, BoundaryParam, LabeledRectangle, Polygon};
use crate::index::RectIndex;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleHit {
    pub rect: LabeledRectangle,
    /// Distance of `R4` to the boundary at shooting time.
    pub residual: f64,
    pub refined: bool,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("refinement did not converge (residual {0:e})")]
    NotConverged(f64),
    #[error("vertex {0} left its edge during refinement")]
    EdgeAssignmentChanged(usize),
    #[error("refined rectangle is not in counterclockwise boundary order")]
    NotGracing,
}

/// Default coarse shooting tolerance: one grid cell, `2 * perimeter / (n N)`.
pub fn coarse_tolerance(p: &Polygon, n: usize) -> f64 {
    2.0 * p.perimeter() / (n * p.len()) as f64
}

/// Near-hits for the side `p1 = b(s1)`, `p2 = b(s2)`, both signs of the offset.
pub fn shoot(p: &Polygon, s1: BoundaryParam, s2: BoundaryParam, coarse_tol: f64) -> Vec<OracleHit> {
    let p1 = p.boundary_point(s1);
    let p2 = p.boundary_point(s2);
    let side = p2 - p1;
    if side.norm() <= p.eps_geo() {
        return vec![];
    }
    let n = side.perp().normalized();
    let mut out = vec![];
    for e in p.edges() {
        let den = n.cross(e.dir);
        if den == 0.0 {
            continue;
        }
        // p2 + h n = e.start + u e.dir
        let w = e.start - p2;
        let h = w.cross(e.dir) / den;
        let u = w.cross(n) / den;
        if !(0.0..=e.len).contains(&u) || h.abs() <= p.eps_geo() {
            continue;
        }
        let p4 = p1 + n * h;
        let d = p.dist_to_boundary(p4);
        if d <= coarse_tol {
            let rect = LabeledRectangle::new([p1, p2, p2 + n * h, p4]);
            out.push(OracleHit { rect, residual: d, refined: false });
        }
    }
    out
}

/// Refines a near-hit onto the exact solution set with each vertex held on
/// the edge it started nearest to.
pub fn newton_refine(p: &Polygon, approx: &OracleHit) -> Result<LabeledRectangle, OracleError> {
    let scale = p.perimeter();
    let tol = 1e-13 * scale;
    let mut edges = [0usize; 4];
    let mut t = [0.0f64; 4];
    for j in 0..4 {
        let (e, u, _) = p.closest_on_boundary(approx.rect.v[j]);
        edges[j] = e;
        t[j] = u;
    }
    let seg = edges.map(|e| *p.edge(e));
    let eval = |t: &[f64; 4]| {
        let v: [_; 4] = std::array::from_fn(|j| seg[j].at(t[j]));
        let c = v[0] - v[1] + v[2] - v[3];
        let q = (v[0] - v[1]).dot(v[2] - v[1]) / scale;
        (Vector3::new(c.x, c.y, q), v)
    };
    let (mut f, mut v) = eval(&t);
    let mut converged = f.norm() <= tol;
    for _ in 0..60 {
        if converged {
            break;
        }
        let u = seg.map(|s| s.dir);
        let a = v[0] - v[1];
        let b = v[2] - v[1];
        let jac = Matrix3x4::new(
            u[0].x, -u[1].x, u[2].x, -u[3].x,
            u[0].y, -u[1].y, u[2].y, -u[3].y,
            u[0].dot(b) / scale, -u[1].dot(a + b) / scale, u[2].dot(a) / scale, 0.0,
        );
        let jjt: Matrix3<f64> = jac * jac.transpose();
        let Some(inv) = jjt.try_inverse() else {
            return Err(OracleError::NotConverged(f.norm()));
        };
        let step: Vector4<f64> = -(jac.transpose() * (inv * f));
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..20 {
            let trial: [f64; 4] = std::array::from_fn(|j| t[j] + lambda * step[j]);
            let (ft, vt) = eval(&trial);
            if ft.norm() < f.norm() || ft.norm() <= tol {
                t = trial;
                f = ft;
                v = vt;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            return Err(OracleError::NotConverged(f.norm()));
        }
        converged = f.norm() <= tol;
    }
    if !converged {
        return Err(OracleError::NotConverged(f.norm()));
    }
    let slack = p.eps_geo();
    for j in 0..4 {
        if t[j] < -slack || t[j] > seg[j].len + slack {
            return Err(OracleError::EdgeAssignmentChanged(j));
        }
    }
    let rect = LabeledRectangle::new(v);
    let s = std::array::from_fn(|j| seg[j].s0 + t[j].clamp(0.0, seg[j].len));
    if ccw_gaps(s, p.perimeter(), p.eps_geo()).is_none() {
        return Err(OracleError::NotGracing);
    }
    Ok(rect)
}

/// Shooting grid parameters: `n` points per edge on average, spaced uniformly
/// in arclength.
pub fn grid(p: &Polygon, n: usize) -> Vec<f64> {
    let m = n * p.len();
    (0..m).map(|k| (k as f64 + 0.5) * p.perimeter() / m as f64).collect()
}

/// Shooting parameters: the uniform grid plus points clustered geometrically
/// at every polygon vertex, down to `cell / 2^VERTEX_LEVELS`. Rectangles
/// thinner than a grid cell only show up when a shot starts close to a vertex.
pub fn shooting_params(p: &Polygon, n: usize) -> Vec<f64> {
    let per = p.perimeter();
    let cell = per / (n * p.len()) as f64;
    let mut out = grid(p, n);
    for e in p.edges() {
        for k in 1..=VERTEX_LEVELS {
            let d = cell * 0.5f64.powi(k as i32);
            out.push(e.s0 + d);
            out.push((e.s0 - d).rem_euclid(per));
        }
    }
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

const VERTEX_LEVELS: usize = 6;

/// Tolerance for merging refined hits.
pub fn dedup_tolerance(p: &Polygon) -> f64 {
    1e-3 * p.perimeter()
}

/// Every refined inscribed rectangle found by shooting over all pairs of
/// [`shooting_params`],
/// closed under cyclic relabeling and deduplicated. Degenerate limits are
/// dropped. Order is deterministic.
pub fn sample_all(p: &Polygon, n: usize) -> Vec<LabeledRectangle> {
    let n = n.max(2);
    let coarse = coarse_tolerance(p, n);
    let g = shooting_params(p, n);
    let deg = 1e-7 * p.perimeter();
    let tol = dedup_tolerance(p);
    let mut idx = RectIndex::new(tol);
    for &s1 in &g {
        for &s2 in &g {
            if s1 == s2 {
                continue;
            }
            for hit in shoot(p, BoundaryParam(s1), BoundaryParam(s2), coarse) {
                let Ok(r) = newton_refine(p, &hit) else { continue };
                if r.is_degenerate(deg) {
                    continue;
                }
                for k in 0..4 {
                    let rk = r.shifted(k);
                    if idx.nearest_within(&rk, tol).is_none() {
                        idx.insert(rk);
                    }
                }
            }
        }
    }
    (0..idx.len()).map(|i| *idx.get(i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Point;

    fn obtuse() -> Polygon {
        Polygon::new(vec![Point::new(0.0, 0.0), Point::new(4.0, 0.0), Point::new(1.0, 1.0)]).unwrap()
    }

    fn family(h: f64) -> LabeledRectangle {
        LabeledRectangle::new([
            Point::new(h, 0.0),
            Point::new(4.0 - 3.0 * h, 0.0),
            Point::new(4.0 - 3.0 * h, h),
            Point::new(h, h),
        ])
    }

    /// Distance to the closed-form family and its relabelings.
    fn family_distance(r: &LabeledRectangle) -> f64 {
        (0..4)
            .map(|k| {
                let u = r.shifted(4 - k);
                let h = u.v[0].x;
                family(h).distance(&u)
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn shooting_finds_the_half_height_rectangle() {
        let p = obtuse();
        let hits = shoot(&p, BoundaryParam(0.5), BoundaryParam(2.5), 1e-6);
        let hit = hits.iter().find(|h| h.rect.v[2].y > 0.0).unwrap();
        assert!(hit.residual < 1e-12);
        assert!(hit.rect.distance(&family(0.5)) < 1e-12);
    }

    #[test]
    fn same_edge_outward_normal_misses() {
        let p = obtuse();
        // reversed order: the normal points out of the triangle
        let hits = shoot(&p, BoundaryParam(2.5), BoundaryParam(0.5), 1e-6);
        assert!(hits.iter().all(|h| h.rect.v[2].y >= 0.0 || h.residual > 1e-6));
        assert!(hits.iter().all(|h| h.rect.v[2].y > 0.0));
    }

    #[test]
    fn refine_pulls_jittered_rectangle_back() {
        let p = obtuse();
        let mut r = family(0.5);
        let jitter = [(1e-4, -0.5e-4), (-1e-4, 0.7e-4), (0.3e-4, 1e-4), (-0.8e-4, 0.2e-4)];
        for (v, (dx, dy)) in r.v.iter_mut().zip(jitter) {
            *v = *v + Point::new(dx, dy);
        }
        let out = newton_refine(&p, &OracleHit { rect: r, residual: 1e-4, refined: false }).unwrap();
        assert!(family_distance(&out) < 1e-12, "{}", family_distance(&out));
        assert!(out.is_valid(1e-12));
    }

    #[test]
    fn near_degenerate_input_converges_or_reports() {
        let p = obtuse();
        let r = family(1e-6);
        match newton_refine(&p, &OracleHit { rect: r, residual: 0.0, refined: false }) {
            Ok(out) => assert!(family_distance(&out) < 1e-9),
            Err(e) => assert!(matches!(e, OracleError::NotConverged(_) | OracleError::EdgeAssignmentChanged(_))),
        }
    }

    #[test]
    fn obtuse_triangle_hits_lie_on_the_family() {
        let p = obtuse();
        let hits = sample_all(&p, 50);
        assert!(hits.len() > 50);
        for r in &hits {
            assert!(family_distance(r) <= 1e-8, "{:?}", r);
            assert!(r.is_valid(1e-9));
        }
    }

    #[test]
    fn denser_grid_keeps_earlier_hits() {
        let p = obtuse();
        let coarse = sample_all(&p, 10);
        let fine = sample_all(&p, 20);
        let idx = RectIndex::from_rects(dedup_tolerance(&p) * 4.0, fine);
        for r in &coarse {
            assert!(idx.nearest_within(r, 4.0 * dedup_tolerance(&p)).is_some());
        }
    }
}
