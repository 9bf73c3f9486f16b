//! Isometric coincidences: distinct inscribed rectangles with equal side
//! lengths, found as crossings of shape curves, and the count `M(P)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chart::{detect_degenerate, EdgeQuadruple};
use crate::geom::{segment_intersection, LabeledRectangle, Point, Polygon};
use crate::tracer::{eval_between, ArcComponent, TraceConfig, TraceResult};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoincidenceError {
    #[error("crossing refinement did not converge (residual {0:e})")]
    NotConverged(f64),
    #[error("crossing is a relabeling of one rectangle")]
    NotReallyDistinct,
}

/// False iff some cyclic relabeling or reversal of `b` matches `a` vertexwise.
pub fn really_distinct(a: &LabeledRectangle, b: &LabeledRectangle, tol: f64) -> bool {
    for k in 0..4 {
        let s = b.shifted(k);
        if a.distance(&s) <= tol || a.distance(&s.reversed()) <= tol {
            return false;
        }
    }
    true
}

/// Distance below which two rectangles, or two coincidence points, are
/// treated as the same.
pub fn match_tolerance(p: &Polygon) -> f64 {
    1e-7 * p.perimeter()
}

/// Polyline crossing before refinement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawCrossing {
    pub a: usize,
    /// Continuous sample index on curve `a`.
    pub sa: f64,
    pub b: usize,
    pub sb: f64,
    pub point: (f64, f64),
    /// Angle between the crossing segments, radians in `[0, pi/2]`.
    pub angle: f64,
}

struct Seg {
    curve: usize,
    i: usize,
    p: Point,
    q: Point,
    xmin: f64,
    xmax: f64,
    ymin: f64,
    ymax: f64,
}

/// All transversal crossings between the listed curves, by sort-and-sweep on
/// segment x-extents. `pair_ok(a, b)` filters curve pairs (`a <= b`); a curve
/// paired with itself yields its self-crossings. Crossings with
/// `min(X, Y) <= axis_tol` are dropped.
pub fn crossings(
    curves: &[Vec<(f64, f64)>],
    closed: &[bool],
    pair_ok: impl Fn(usize, usize) -> bool,
    axis_tol: f64,
) -> Vec<RawCrossing> {
    let mut segs = vec![];
    for (c, pts) in curves.iter().enumerate() {
        for i in 0..pts.len().saturating_sub(1) {
            let p = Point::new(pts[i].0, pts[i].1);
            let q = Point::new(pts[i + 1].0, pts[i + 1].1);
            if p == q {
                continue;
            }
            segs.push(Seg {
                curve: c,
                i,
                p,
                q,
                xmin: p.x.min(q.x),
                xmax: p.x.max(q.x),
                ymin: p.y.min(q.y),
                ymax: p.y.max(q.y),
            });
        }
    }
    segs.sort_by(|a, b| a.xmin.partial_cmp(&b.xmin).unwrap());
    let adjacent = |a: &Seg, b: &Seg| {
        if a.curve != b.curve {
            return false;
        }
        let n = curves[a.curve].len() - 1;
        let (i, j) = (a.i.min(b.i), a.i.max(b.i));
        j - i <= 1 || (closed[a.curve] && i == 0 && j == n - 1)
    };
    let mut out = vec![];
    let mut active: Vec<usize> = vec![];
    for k in 0..segs.len() {
        let s = &segs[k];
        active.retain(|&m| segs[m].xmax >= s.xmin);
        for &m in &active {
            let t = &segs[m];
            if t.ymax < s.ymin || s.ymax < t.ymin || adjacent(s, t) {
                continue;
            }
            let (first, second) = if (t.curve, t.i) <= (s.curve, s.i) { (t, s) } else { (s, t) };
            if !pair_ok(first.curve, second.curve) {
                continue;
            }
            let Some((u, v)) = segment_intersection(first.p, first.q, second.p, second.q) else { continue };
            if !((0.0..1.0).contains(&u) && (0.0..1.0).contains(&v)) {
                continue;
            }
            let x = first.p + (first.q - first.p) * u;
            if x.x.min(x.y) <= axis_tol {
                continue;
            }
            let (d1, d2) = ((first.q - first.p).normalized(), (second.q - second.p).normalized());
            let angle = d1.cross(d2).abs().clamp(0.0, 1.0).asin();
            out.push(RawCrossing {
                a: first.curve,
                sa: first.i as f64 + u,
                b: second.curve,
                sb: second.i as f64 + v,
                point: (x.x, x.y),
                angle,
            });
        }
        active.push(k);
    }
    out
}

/// Intersections of two sampled curves, as parameter pairs.
pub fn curve_intersections(za: &[(f64, f64)], zb: &[(f64, f64)], axis_tol: f64) -> Vec<(f64, f64)> {
    crossings(&[za.to_vec(), zb.to_vec()], &[false, false], |a, b| a != b, axis_tol)
        .into_iter()
        .map(|c| if c.a == 0 { (c.sa, c.sb) } else { (c.sb, c.sa) })
        .collect()
}

pub fn self_intersections(z: &[(f64, f64)], closed: bool, axis_tol: f64) -> Vec<(f64, f64)> {
    crossings(&[z.to_vec()], &[closed], |_, _| true, axis_tol).into_iter().map(|c| (c.sa, c.sb)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Participant {
    pub component: usize,
    /// Continuous sample index along the component.
    pub param: f64,
    pub rect: LabeledRectangle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coincidence {
    #[serde(rename = "X")]
    pub x: f64,
    #[serde(rename = "Y")]
    pub y: f64,
    pub participants: Vec<Participant>,
    pub low_confidence: bool,
}

/// Exact point on a component at a continuous sample index.
fn eval(p: &Polygon, comp: &ArcComponent, cfg: &TraceConfig, s: f64) -> LabeledRectangle {
    let n = comp.samples.len();
    let s = s.clamp(0.0, (n - 1) as f64);
    let i = (s.floor() as usize).min(n - 2);
    let lam = s - i as f64;
    eval_between(p, comp, cfg, i, lam).map_or(comp.samples[i].rect, |x| x.rect)
}

/// Refines a polyline crossing by Newton iteration on
/// `Z_a(sa) - Z_b(sb) = 0` over exact curve points.
pub fn refine_coincidence(
    p: &Polygon,
    ca: &ArcComponent,
    cb: &ArcComponent,
    cfg: &TraceConfig,
    sa: f64,
    sb: f64,
) -> Result<(Participant, Participant), CoincidenceError> {
    let tol = 1e-9 * p.perimeter();
    let xy = |r: LabeledRectangle| (r.x, r.y);
    let mut s = [sa, sb];
    // stay near the sampled crossing so a self-crossing cannot collapse onto the diagonal
    let lo = [sa.floor() - 2.0, sb.floor() - 2.0];
    let hi = [sa.floor() + 3.0, sb.floor() + 3.0];
    let f = |s: [f64; 2]| {
        let (a, b) = (eval(p, ca, cfg, s[0]), eval(p, cb, cfg, s[1]));
        ((a.x - b.x, a.y - b.y), a, b)
    };
    let mut best = f64::INFINITY;
    let mut last_step = f64::INFINITY;
    for _ in 0..40 {
        let (r, ra, rb) = f(s);
        let res = r.0.abs() + r.1.abs();
        best = best.min(res);
        // small residual is not enough at shallow crossings; also wait for the step to settle
        if res <= tol && (last_step <= 1e-9 || res <= 1e-4 * tol) {
            return Ok((
                Participant { component: usize::MAX, param: s[0], rect: ra },
                Participant { component: usize::MAX, param: s[1], rect: rb },
            ));
        }
        let d = 1e-4;
        let ga = {
            let (p1, p0) = (xy(eval(p, ca, cfg, s[0] + d)), xy(eval(p, ca, cfg, s[0] - d)));
            ((p1.0 - p0.0) / (2.0 * d), (p1.1 - p0.1) / (2.0 * d))
        };
        let gb = {
            let (p1, p0) = (xy(eval(p, cb, cfg, s[1] + d)), xy(eval(p, cb, cfg, s[1] - d)));
            ((p1.0 - p0.0) / (2.0 * d), (p1.1 - p0.1) / (2.0 * d))
        };
        // [ga, -gb] [ds_a, ds_b]^T = -r
        let det = ga.0 * (-gb.1) - (-gb.0) * ga.1;
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let da = (-r.0 * (-gb.1) - (-gb.0) * (-r.1)) / det;
        let db = (ga.0 * (-r.1) - (-r.0) * ga.1) / det;
        last_step = da.abs().max(db.abs());
        s[0] = (s[0] + da.clamp(-1.0, 1.0)).clamp(lo[0], hi[0]);
        s[1] = (s[1] + db.clamp(-1.0, 1.0)).clamp(lo[1], hi[1]);
    }
    Err(CoincidenceError::NotConverged(best))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    #[serde(rename = "X")]
    pub x: f64,
    #[serde(rename = "Y")]
    pub y: f64,
    pub mu: usize,
    pub participants: Vec<Participant>,
    pub low_confidence: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoincidenceReport {
    #[serde(rename = "M")]
    pub m: usize,
    pub delta_plus: usize,
    pub bound_generic: i64,
    pub bound_nontricky: i64,
    pub pass_generic: bool,
    pub pass_nontricky: bool,
    /// `M` recomputed from orbit representatives and their swapped images.
    pub m_from_orbits: usize,
    /// Quadruples on traced components carrying isometric continua; never summed.
    pub infinite_families: Vec<[usize; 4]>,
    pub clusters: Vec<Cluster>,
}

/// Transitive clustering by `(X, Y)` within `tol`, then `mu` = number of
/// really-distinct participants minus one.
pub fn cluster(coincidences: &[Coincidence], tol: f64) -> Vec<Cluster> {
    let n = coincidences.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        let mut j = i;
        while p[j] != r {
            let nx = p[j];
            p[j] = r;
            j = nx;
        }
        r
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| coincidences[a].x.partial_cmp(&coincidences[b].x).unwrap());
    for (k, &i) in order.iter().enumerate() {
        for &j in &order[k + 1..] {
            if coincidences[j].x - coincidences[i].x > tol {
                break;
            }
            if (coincidences[j].y - coincidences[i].y).abs() <= tol {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                parent[ri.max(rj)] = ri.min(rj);
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    let mut out = vec![];
    for members in groups.values() {
        let mut distinct: Vec<Participant> = vec![];
        let mut low = false;
        let (mut sx, mut sy) = (0.0, 0.0);
        for &i in members {
            let c = &coincidences[i];
            low |= c.low_confidence;
            sx += c.x;
            sy += c.y;
            for part in &c.participants {
                if distinct.iter().all(|d| really_distinct(&d.rect, &part.rect, tol)) {
                    distinct.push(*part);
                }
            }
        }
        if distinct.len() < 2 {
            continue;
        }
        let k = members.len() as f64;
        out.push(Cluster { x: sx / k, y: sy / k, mu: distinct.len() - 1, participants: distinct, low_confidence: low });
    }
    out.sort_by(|a, b| (a.x, a.y).partial_cmp(&(b.x, b.y)).unwrap());
    out
}

/// Refined coincidences among `comps` for the allowed curve pairs.
fn find_coincidences(
    p: &Polygon,
    comps: &[&ArcComponent],
    ids: &[usize],
    cfg: &TraceConfig,
    pair_ok: impl Fn(usize, usize) -> bool,
) -> Vec<Coincidence> {
    let curves: Vec<Vec<(f64, f64)>> = comps.iter().map(|c| c.shape_points()).collect();
    let closed: Vec<bool> = comps.iter().map(|c| c.is_loop()).collect();
    let tol = match_tolerance(p);
    let axis_tol = 1e-6 * p.perimeter();
    let mut out = vec![];
    for x in crossings(&curves, &closed, pair_ok, axis_tol) {
        let low = x.angle < 1e-4;
        let (ca, cb) = (comps[x.a], comps[x.b]);
        let (mut pa, mut pb) = match refine_coincidence(p, ca, cb, cfg, x.sa, x.sb) {
            Ok(pair) => pair,
            Err(_) => (
                Participant { component: 0, param: x.sa, rect: eval(p, ca, cfg, x.sa) },
                Participant { component: 0, param: x.sb, rect: eval(p, cb, cfg, x.sb) },
            ),
        };
        pa.component = ids[x.a];
        pb.component = ids[x.b];
        if !really_distinct(&pa.rect, &pb.rect, tol) {
            continue;
        }
        out.push(Coincidence {
            x: 0.5 * (pa.rect.x + pb.rect.x),
            y: 0.5 * (pa.rect.y + pb.rect.y),
            participants: vec![pa, pb],
            low_confidence: low,
        });
    }
    out
}

fn swapped(c: &Coincidence) -> Coincidence {
    let participants = c
        .participants
        .iter()
        .map(|q| Participant { component: q.component, param: q.param, rect: q.rect.shifted(1) })
        .collect();
    Coincidence { x: c.y, y: c.x, participants, low_confidence: c.low_confidence }
}

/// Counts `M(P)` over all traced components and cross-checks it against the
/// orbit-representative count.
pub fn count_m(p: &Polygon, trace: &TraceResult) -> CoincidenceReport {
    let cfg = &trace.config;
    let comps: Vec<&ArcComponent> = trace.components.iter().collect();
    let ids: Vec<usize> = (0..comps.len()).collect();
    let tol = match_tolerance(p);

    // every pair except a component and its half-turn relabeling (same curve)
    let same_curve = |a: usize, b: usize| {
        a != b && comps[a].orbit == comps[b].orbit && (comps[a].shift + 2) % 4 == comps[b].shift
    };
    let all = find_coincidences(p, &comps, &ids, cfg, |a, b| !same_curve(a, b));
    let clusters = cluster(&all, tol);
    let m: usize = clusters.iter().map(|c| c.mu).sum();

    // orbit representatives, paired with each other and with their swaps
    let reps: Vec<usize> = {
        let mut seen = std::collections::BTreeSet::new();
        (0..comps.len()).filter(|&i| seen.insert(comps[i].orbit)).collect()
    };
    let mut rep_comps: Vec<ArcComponent> = vec![];
    let mut rep_ids = vec![];
    for &r in &reps {
        rep_comps.push(comps[r].clone());
        rep_ids.push(r);
        rep_comps.push(comps[r].shifted(1));
        rep_ids.push(r);
    }
    let rep_refs: Vec<&ArcComponent> = rep_comps.iter().collect();
    // curves 2k are representatives, 2k+1 their swaps; pairs need one representative
    let from_reps = find_coincidences(p, &rep_refs, &rep_ids, cfg, |a, b| a % 2 == 0 || b % 2 == 0);
    let mut closure = from_reps.clone();
    closure.extend(from_reps.iter().map(swapped));
    let m_from_orbits: usize = cluster(&closure, tol).iter().map(|c| c.mu).sum();

    let mut infinite = std::collections::BTreeSet::new();
    for c in &comps {
        for q in &c.charts {
            if detect_degenerate(&EdgeQuadruple::from_polygon(p, *q)) {
                infinite.insert(*q);
            }
        }
    }

    let dp = trace.delta_plus() as i64;
    let bound_generic = 2 * (dp - 2);
    let bound_nontricky = if dp > 2 { (dp - 2 + 15) / 16 } else { 0 };
    CoincidenceReport {
        m,
        delta_plus: trace.delta_plus(),
        bound_generic,
        bound_nontricky,
        pass_generic: m as i64 >= bound_generic,
        pass_nontricky: m as i64 >= bound_nontricky,
        m_from_orbits,
        infinite_families: infinite.into_iter().collect(),
        clusters,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tracer::trace_all;

    fn rect(x: f64, y: f64) -> LabeledRectangle {
        LabeledRectangle::new([Point::new(x, y), Point::new(x + 2.0, y), Point::new(x + 2.0, y + 1.0), Point::new(x, y + 1.0)])
    }

    #[test]
    fn relabelings_are_not_distinct() {
        let r = rect(0.0, 0.0);
        assert!(!really_distinct(&r, &r.shifted(1), 1e-12));
        assert!(!really_distinct(&r, &r.shifted(3), 1e-12));
        assert!(!really_distinct(&r, &r.reversed(), 1e-12));
        assert!(really_distinct(&r, &rect(1.0, 0.0), 1e-12));
    }

    #[test]
    fn straight_curve_has_no_self_crossings() {
        let z: Vec<(f64, f64)> = (0..=100).map(|i| (4.0 - 4.0 * i as f64 / 100.0, i as f64 / 100.0)).collect();
        assert!(self_intersections(&z, false, 1e-9).is_empty());
    }

    #[test]
    fn axis_contacts_are_excluded() {
        let a = vec![(1.0, 0.0), (0.0, 1.0)];
        let b = vec![(1.0, 0.0), (2.0, 1.0)];
        assert!(curve_intersections(&a, &b, 1e-9).is_empty());
        let c = vec![(0.0, 0.0), (1.0, 1.0)];
        let d = vec![(0.0, 1.0), (1.0, 0.0)];
        assert_eq!(curve_intersections(&c, &d, 1e-9).len(), 1);
    }

    #[test]
    fn figure_eight_self_crossing() {
        let z: Vec<(f64, f64)> = (0..=400)
            .map(|i| {
                let t = std::f64::consts::TAU * (i as f64 + 0.37) / 400.0;
                (2.0 + t.sin(), 2.0 + t.sin() * t.cos())
            })
            .collect();
        let x = self_intersections(&z, false, 1e-9);
        assert_eq!(x.len(), 1, "{x:?}");
    }

    #[test]
    fn clusters_count_points_minus_colors() {
        let mk = |x: f64, rs: &[LabeledRectangle]| Coincidence {
            x,
            y: 1.0,
            participants: rs.iter().map(|r| Participant { component: 0, param: 0.0, rect: *r }).collect(),
            low_confidence: false,
        };
        let (a, b, c, d) = (rect(0.0, 0.0), rect(5.0, 0.0), rect(9.0, 0.0), rect(13.0, 0.0));
        // a 4-cluster assembled from pairwise crossings contributes 3
        let cs = [mk(2.0, &[a, b]), mk(2.0, &[c, d]), mk(2.0 + 1e-12, &[a, c]), mk(2.0, &[b.shifted(2), d])];
        let cl = cluster(&cs, 1e-9);
        assert_eq!(cl.len(), 1);
        assert_eq!(cl[0].mu, 3);
    }

    #[test]
    fn obtuse_triangle_has_no_coincidences() {
        let p = Polygon::new(vec![Point::new(0.0, 0.0), Point::new(4.0, 0.0), Point::new(1.0, 1.0)]).unwrap();
        let t = trace_all(&p, &TraceConfig::for_polygon(&p)).unwrap();
        let rep = count_m(&p, &t);
        assert_eq!(rep.m, 0);
        assert_eq!(rep.m_from_orbits, 0);
        assert_eq!(rep.bound_generic, 0);
        assert!(rep.pass_generic && rep.pass_nontricky);
    }
}
