//! Numerical continuation of the space of gracing rectangles.
//!
//! Each component is followed chart by chart: inside a chart the solution set
//! is a conic in `(t1, t2, t3)`, tracked by a tangent predictor and a Newton
//! corrector on the hyperplane, the quadric and a step-normal plane. Box walls
//! hand the curve to the neighbouring chart; a side length collapsing to zero
//! ends an arc at a diameter.

use std::collections::{BTreeMap, HashSet};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chart::{Chart, ChartError, EdgeQuadruple};
use crate::diameters::{analyze, Diameter};
use crate::geom::{ccw_gaps, LabeledRectangle, Point, Polygon};
use crate::index::RectIndex;
use crate::oracle;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceConfig {
    /// Initial step, rectangle-space length.
    pub h0: f64,
    pub h_max: f64,
    pub h_min: f64,
    /// Residual bound for the corrector, length units.
    pub corrector_tol: f64,
    /// Side length below which a rectangle counts as degenerate.
    pub eps_deg: f64,
    /// Accuracy of located wall events, length units.
    pub wall_tol: f64,
    pub max_steps: usize,
    /// Largest tangent turn per step, radians.
    pub max_turn: f64,
    /// Oracle grid density for loop discovery; 0 disables the search.
    pub loop_grid: usize,
}

impl TraceConfig {
    pub fn for_polygon(p: &Polygon) -> Self {
        let s = p.perimeter();
        Self {
            h0: 1e-5 * s,
            h_max: 1e-4 * s,
            h_min: 1e-13 * s,
            corrector_tol: 1e-13 * s,
            eps_deg: 1e-7 * s,
            wall_tol: 1e-12 * s,
            max_steps: 2_000_000,
            max_turn: 0.02,
            loop_grid: 12,
        }
    }

    /// Same tolerances with every step length scaled by `f`.
    pub fn with_step_scale(mut self, f: f64) -> Self {
        self.h0 *= f;
        self.h_max *= f;
        self
    }

    pub fn validate(&self) -> Result<(), TraceError> {
        let pos = [self.h0, self.h_max, self.h_min, self.corrector_tol, self.eps_deg, self.wall_tol, self.max_turn];
        if pos.iter().any(|v| !(v.is_finite() && *v > 0.0)) || self.max_steps == 0 {
            return Err(TraceError::BadConfig("all tolerances and steps must be positive"));
        }
        if self.eps_deg < self.corrector_tol {
            return Err(TraceError::BadConfig("eps_deg must not be below the corrector tolerance"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TraceError {
    #[error("invalid trace configuration: {0}")]
    BadConfig(&'static str),
    #[error("polygon has a tricky diameter; tracing requires none")]
    TrickyDiameter,
    #[error("polygon is not generic: {0}")]
    NonGeneric(String),
    #[error("no viable chart at seed (diameter {diameter}, labeling {labeling})")]
    NoViableChart { diameter: usize, labeling: usize },
    #[error("step budget exhausted after {0} steps")]
    StepBudgetExhausted(usize),
    #[error("corrector diverged near {0:?}")]
    CorrectorDivergence(LabeledRectangle),
    #[error("dead end at polygon vertex {at} (slot {slot})")]
    DeadEnd { at: Point, slot: usize },
    #[error("chart transition into {quad:?} failed: {reason}")]
    ChartTransitionFailure { quad: [usize; 4], reason: String },
    #[error("arc ended at a degenerate rectangle matching no positive diameter: {0:?}")]
    UnmatchedTerminalDiameter(LabeledRectangle),
    #[error("arc endpoints inconsistent: seed {0:?} reached twice")]
    InconsistentEndpoints(SeedRef),
    #[error("untraced arc through {0:?}")]
    OrphanArc(LabeledRectangle),
    #[error("quadruple {quad:?} repeats {count} times in one inscribing sequence")]
    RepeatBoundViolated { quad: [usize; 4], count: usize },
}

/// A labeled degenerate seed: positive diameter index and labeling shift.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SeedRef {
    pub diameter: usize,
    pub labeling: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ComponentClass {
    Hyperbolic,
    NullX,
    NullY,
    Loop,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub rect: LabeledRectangle,
    /// Index into the component's chart visits.
    pub chart: usize,
    /// Offsets of `R1..R4` along their edges.
    pub t: [f64; 4],
    /// Rectangle-space arc length from the first sample.
    pub arc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArcComponent {
    pub samples: Vec<Sample>,
    /// Edge quadruple of every chart visit, in traversal order.
    pub charts: Vec<[usize; 4]>,
    /// `None` for loops.
    pub endpoints: Option<[SeedRef; 2]>,
    pub class: ComponentClass,
    /// Position under the cyclic relabeling action.
    pub shift: usize,
    pub orbit: usize,
    /// Passed through an in-box conic node.
    pub node_passed: bool,
}

impl ArcComponent {
    pub fn is_loop(&self) -> bool {
        self.endpoints.is_none()
    }

    pub fn length(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.arc)
    }

    /// `(X, Y)` of every sample.
    pub fn shape_points(&self) -> Vec<(f64, f64)> {
        self.samples.iter().map(|s| (s.rect.x, s.rect.y)).collect()
    }

    /// Reverses traversal direction.
    pub fn reverse(&mut self) {
        let total = self.length();
        let nc = self.charts.len();
        self.samples.reverse();
        for s in &mut self.samples {
            s.arc = total - s.arc;
            s.chart = nc - 1 - s.chart;
        }
        self.charts.reverse();
        if let Some(e) = &mut self.endpoints {
            e.swap(0, 1);
        }
    }

    /// Component with every sample relabeled by `k` cyclic shifts.
    pub fn shifted(&self, k: usize) -> ArcComponent {
        let k = k % 4;
        let mut out = self.clone();
        for s in &mut out.samples {
            let full = s.t;
            s.rect = s.rect.shifted(k);
            s.t = std::array::from_fn(|j| full[(j + k) % 4]);
        }
        for q in &mut out.charts {
            *q = [q[k], q[(k + 1) % 4], q[(k + 2) % 4], q[(k + 3) % 4]];
        }
        if let Some(e) = &mut out.endpoints {
            for r in e.iter_mut() {
                r.labeling = (r.labeling + k) % 4;
            }
        }
        if k % 2 == 1 {
            out.class = match out.class {
                ComponentClass::NullX => ComponentClass::NullY,
                ComponentClass::NullY => ComponentClass::NullX,
                c => c,
            };
        }
        out.shift = (out.shift + k) % 4;
        out
    }
}

/// The four labeled degenerate rectangles over a diameter.
pub fn seed_rectangles(d: &Diameter) -> [LabeledRectangle; 4] {
    let (a, b) = (d.q1.point, d.q2.point);
    let l0 = LabeledRectangle::new([a, a, b, b]);
    [l0, l0.shifted(1), l0.shifted(2), l0.shifted(3)]
}

/// A starting state: chart, parameters and unit direction into the box.
#[derive(Debug, Clone)]
pub struct Start {
    pub chart: Chart,
    pub t: [f64; 3],
    pub dir: [f64; 3],
}

type V3 = Vector3<f64>;

fn v3(a: [f64; 3]) -> V3 {
    V3::new(a[0], a[1], a[2])
}

fn arr(v: V3) -> [f64; 3] {
    [v[0], v[1], v[2]]
}

/// Indices of event functions: 8 walls then 4 same-edge gaps.
const N_EVENTS: usize = 12;

struct Tracer<'a> {
    p: &'a Polygon,
    cfg: &'a TraceConfig,
}

#[derive(Debug)]
enum End {
    Degenerate,
    Loop,
}

struct Walk {
    samples: Vec<Sample>,
    charts: Vec<[usize; 4]>,
    end: End,
    node_passed: bool,
}

impl<'a> Tracer<'a> {
    fn new(p: &'a Polygon, cfg: &'a TraceConfig) -> Self {
        Self { p, cfg }
    }

    fn sample(ch: &Chart, t: [f64; 3], rect: LabeledRectangle, chart: usize, arc: f64) -> Sample {
        Sample { rect, chart, t: [t[0], t[1], t[2], ch.t4(t)], arc }
    }

    /// Rectangle-space speed of a unit move in `t`.
    fn speed(ch: &Chart, d: [f64; 3]) -> f64 {
        let u = ch.quad.seg.map(|s| s.dir);
        let m = [u[0] * d[0], u[1] * d[1], u[2] * d[2]];
        let m4 = m[0] - m[1] + m[2];
        m.iter().chain(std::iter::once(&m4)).map(|v| v.norm()).fold(0.0, f64::max)
    }

    fn cnorm(ch: &Chart) -> f64 {
        v3(ch.grad_pi()).norm()
    }

    /// Newton projection onto the curve with the extra linear equation
    /// `row . t = rhs`.
    fn solve(&self, ch: &Chart, guess: [f64; 3], row: V3, rhs: f64, max_move: f64) -> Option<[f64; 3]> {
        let cn = Self::cnorm(ch);
        let tol = self.cfg.corrector_tol;
        let mut t = v3(guess);
        for _ in 0..30 {
            let ta = arr(t);
            let f = V3::new(ch.pi_residual(ta) / cn, ch.q_value(ta) / ch.scale, row.dot(&t) - rhs);
            if f[0].abs() <= tol && f[1].abs() <= tol && f[2].abs() <= tol * row.norm().max(1.0) {
                return ((t - v3(guess)).norm() <= max_move).then_some(ta);
            }
            let gp = v3(ch.grad_pi()) / cn;
            let gq = v3(ch.grad_q(ta)) / ch.scale;
            let j = Matrix3::from_rows(&[gp.transpose(), gq.transpose(), row.transpose()]);
            let delta = j.lu().solve(&(-f))?;
            if !delta.iter().all(|x| x.is_finite()) {
                return None;
            }
            t += delta;
            if (t - v3(guess)).norm() > 4.0 * max_move {
                return None;
            }
        }
        None
    }

    fn correct(&self, ch: &Chart, tp: [f64; 3], normal: [f64; 3], max_move: f64) -> Option<[f64; 3]> {
        let n = v3(normal);
        self.solve(ch, tp, n, n.dot(&v3(tp)), max_move)
    }

    fn events(ch: &Chart, t: [f64; 3]) -> [f64; N_EVENTS] {
        let w = ch.wall_values(t);
        let full = [t[0], t[1], t[2], ch.t4(t)];
        let mut g = [f64::INFINITY; N_EVENTS];
        g[..8].copy_from_slice(&w);
        for j in 0..4 {
            let k = (j + 1) % 4;
            if ch.quad.idx[j] == ch.quad.idx[k] {
                g[8 + j] = full[k] - full[j];
            }
        }
        g
    }

    /// Gradient of event `k` in `t`; all events are linear.
    fn event_grad(ch: &Chart, k: usize) -> V3 {
        let u = ch.quad.seg.map(|s| s.dir);
        let g4 = V3::new(u[0].dot(u[3]), -u[1].dot(u[3]), u[2].dot(u[3]));
        let unit = |j: usize| -> V3 {
            if j < 3 {
                let mut e = V3::zeros();
                e[j] = 1.0;
                e
            } else {
                g4
            }
        };
        if k < 8 {
            let g = unit(k / 2);
            if k.is_multiple_of(2) {
                g
            } else {
                -g
            }
        } else {
            let j = k - 8;
            unit((j + 1) % 4) - unit(j)
        }
    }

    fn boundary_params(&self, ch: &Chart, t: [f64; 3]) -> [f64; 4] {
        let full = [t[0], t[1], t[2], ch.t4(t)];
        std::array::from_fn(|j| {
            let e = self.p.edge(ch.quad.idx[j]);
            e.s0 + full[j].clamp(0.0, e.len)
        })
    }

    fn gracing(&self, ch: &Chart, t: [f64; 3]) -> bool {
        ccw_gaps(self.boundary_params(ch, t), self.p.perimeter(), self.p.eps_geo()).is_some()
    }

    /// Edge candidates `(edge, offset)` for a point on the boundary.
    fn placements(&self, q: Point) -> Vec<(usize, f64)> {
        let (e, u, _) = self.p.closest_on_boundary(q);
        let tol = self.p.eps_geo();
        let len = self.p.edge(e).len;
        if u <= tol {
            let pe = self.p.prev_edge(e);
            vec![(pe, self.p.edge(pe).len), (e, 0.0)]
        } else if u >= len - tol {
            let ne = self.p.next_edge(e);
            vec![(e, len), (ne, 0.0)]
        } else {
            vec![(e, u)]
        }
    }

    /// Charts containing `r` at an in-box point, with its parameters.
    fn charts_at(&self, r: &LabeledRectangle) -> Vec<(Chart, [f64; 3])> {
        let pl: Vec<Vec<(usize, f64)>> = r.v.iter().map(|&q| self.placements(q)).collect();
        let mut out = vec![];
        for a in &pl[0] {
            for b in &pl[1] {
                for c in &pl[2] {
                    for d in &pl[3] {
                        let idx = [a.0, b.0, c.0, d.0];
                        let Ok(ch) = Chart::build(EdgeQuadruple::from_polygon(self.p, idx)) else { continue };
                        if ch.kind == crate::chart::ConicKind::DegeneratePlane {
                            continue;
                        }
                        let t = [a.1, b.1, c.1];
                        let tol = 1e-9 * ch.scale;
                        if ch.pi_residual(t).abs() > tol * Self::cnorm(&ch).max(1.0)
                            || (ch.t4(t) - d.1).abs() > tol
                        {
                            continue;
                        }
                        out.push((ch, t));
                    }
                }
            }
        }
        out
    }

    /// Directions leaving `t` along the curve.
    fn directions(ch: &Chart, t: [f64; 3]) -> Vec<[f64; 3]> {
        match ch.tangent_at(t, None) {
            Ok(d) => vec![d, d.map(|x| -x)],
            Err(_) => ch.node_directions(),
        }
    }

    /// Trial step from a degenerate seed: returns the stepped point when the
    /// direction enters the box along gracing, nondegenerate rectangles.
    fn trial(&self, ch: &Chart, t: [f64; 3], dir: [f64; 3]) -> Option<[f64; 3]> {
        let h = self.cfg.h0;
        let s = h / Self::speed(ch, dir).max(1e-300);
        let tp = arr(v3(t) + v3(dir) * s);
        let t1 = self.correct(ch, tp, dir, s)?;
        if !ch.in_box(t1, self.cfg.wall_tol) {
            return None;
        }
        let g = Self::events(ch, t1);
        if g.iter().any(|&x| x < -self.cfg.wall_tol) {
            return None;
        }
        let r = ch.rect(t1);
        if r.x.min(r.y) < 1e-3 * h || !self.gracing(ch, t1) {
            return None;
        }
        Some(t1)
    }

    pub fn initial_charts(&self, seed: &LabeledRectangle) -> Vec<Start> {
        let mut out: Vec<(Start, LabeledRectangle)> = vec![];
        for (ch, t) in self.charts_at(seed) {
            for dir in Self::directions(&ch, t) {
                if let Some(t1) = self.trial(&ch, t, dir) {
                    let r = ch.rect(t1);
                    if out.iter().any(|(_, o)| o.distance(&r) <= 1e-3 * self.cfg.h0) {
                        continue;
                    }
                    out.push((Start { chart: ch.clone(), t, dir }, r));
                }
            }
        }
        out.into_iter().map(|(s, _)| s).collect()
    }

    /// Locates the first event between `t0` and `t1`. Returns the event point.
    fn locate(&self, ch: &Chart, t0: [f64; 3], t1: [f64; 3], armed: &[usize]) -> [f64; 3] {
        let a = v3(t0);
        let b = v3(t1);
        let chord = b - a;
        let normal = chord.normalize();
        let max_move = chord.norm();
        let point = |theta: f64| -> Option<[f64; 3]> {
            let tp = arr(a + chord * theta);
            self.correct(ch, tp, arr(normal), max_move)
        };
        let fires = |t: [f64; 3]| -> bool {
            let g = Self::events(ch, t);
            armed.iter().any(|&k| g[k] <= 0.0)
        };
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        let mut best = t1;
        for _ in 0..80 {
            if (hi - lo) * max_move <= 0.1 * self.cfg.wall_tol {
                break;
            }
            let mid = 0.5 * (lo + hi);
            match point(mid) {
                Some(t) if fires(t) => {
                    hi = mid;
                    best = t;
                }
                Some(_) => lo = mid,
                None => hi = mid,
            }
        }
        // polish onto the wall of the event that fires first
        let g = Self::events(ch, best);
        let k = *armed
            .iter()
            .min_by(|&&x, &&y| g[x].partial_cmp(&g[y]).unwrap())
            .unwrap();
        let row = Self::event_grad(ch, k);
        let rhs = row.dot(&v3(best)) - g[k];
        if let Some(t) = self.solve(ch, best, row, rhs, max_move) {
            if ch.in_box(t, self.cfg.wall_tol) {
                return t;
            }
        }
        best
    }

    /// New chart after slot `j` crosses the polygon vertex at the end
    /// (`side = 1`) or start (`side = 0`) of its edge.
    fn transition(&self, ch: &Chart, t: [f64; 3], j: usize, side: usize, prev_dir: [f64; 3]) -> Result<Start, TraceError> {
        let mut idx = ch.quad.idx;
        let e = idx[j];
        let (ne, nt) = if side == 1 {
            (self.p.next_edge(e), 0.0)
        } else {
            let pe = self.p.prev_edge(e);
            (pe, self.p.edge(pe).len)
        };
        idx[j] = ne;
        let mut nt3 = t;
        if j < 3 {
            nt3[j] = nt;
        }
        let fail = |reason: String| TraceError::ChartTransitionFailure { quad: idx, reason };
        let nch = Chart::build(EdgeQuadruple::from_polygon(self.p, idx)).map_err(|e| fail(e.to_string()))?;
        if nch.kind == crate::chart::ConicKind::DegeneratePlane {
            return Err(fail("degenerate chart".into()));
        }
        let old = ch.rect(t);
        let new = nch.rect(nt3);
        if old.distance(&new) > 1e-8 * self.p.perimeter() {
            return Err(fail(format!("rectangle moved by {:e}", old.distance(&new))));
        }
        // the slot that moved must enter its new edge
        let wall = 2 * j + if side == 1 { 0 } else { 1 };
        let g = Self::event_grad(&nch, wall);
        let pick = |d: [f64; 3]| -> f64 { g.dot(&v3(d)) };
        let dir = match nch.tangent_at(nt3, Some(prev_dir)) {
            Ok(d) => {
                let s = pick(d);
                if s.abs() <= 1e-9 {
                    return Err(TraceError::DeadEnd { at: self.p.edge(ne).start, slot: j });
                }
                if s > 0.0 {
                    d
                } else {
                    d.map(|x| -x)
                }
            }
            Err(ChartError::SingularPoint(_)) => nch
                .node_directions()
                .into_iter()
                .filter(|&d| pick(d) > 1e-9)
                .max_by(|a, b| v3(*a).dot(&v3(prev_dir)).partial_cmp(&v3(*b).dot(&v3(prev_dir))).unwrap())
                .ok_or(TraceError::DeadEnd { at: new.v[j], slot: j })?,
            Err(e) => return Err(fail(e.to_string())),
        };
        Ok(Start { chart: nch, t: nt3, dir })
    }

    /// Follows the curve from `start` until it degenerates or, for loop
    /// tracing, returns to the start.
    fn walk(&self, start: Start, first: LabeledRectangle, loop_mode: bool) -> Result<Walk, TraceError> {
        let cfg = self.cfg;
        let mut ch = start.chart;
        let mut t = start.t;
        let mut dir = start.dir;
        let mut charts = vec![ch.quad.idx];
        let mut samples = vec![Self::sample(&ch, t, first, 0, 0.0)];
        let start_idx = ch.quad.idx;
        let start_t = t;
        let mut h = cfg.h0;
        let mut clean = 0usize;
        let mut arc = 0.0;
        let mut node_passed = false;
        let mut steps = 0usize;
        loop {
            steps += 1;
            if steps > cfg.max_steps {
                return Err(TraceError::StepBudgetExhausted(steps));
            }
            let speed = Self::speed(&ch, dir).max(1e-300);
            let s = h / speed;
            let tp = arr(v3(t) + v3(dir) * s);
            let Some(t1) = self.correct(&ch, tp, dir, s) else {
                h *= 0.5;
                clean = 0;
                if h < cfg.h_min {
                    return Err(TraceError::CorrectorDivergence(ch.rect(t)));
                }
                continue;
            };
            let (tau1, singular) = match ch.tangent_at(t1, Some(dir)) {
                Ok(d) => (d, false),
                Err(_) => (dir, true),
            };
            let turn = v3(dir).dot(&v3(tau1)).clamp(-1.0, 1.0).acos();
            let r0 = ch.rect(t);
            let r1 = ch.rect(t1);
            let moved = r0.distance(&r1);
            if (turn > cfg.max_turn || moved > 2.0 * h) && h > cfg.h_min * 16.0 {
                h *= 0.5;
                clean = 0;
                continue;
            }
            node_passed |= singular;

            let g0 = Self::events(&ch, t);
            let g1 = Self::events(&ch, t1);
            let armed: Vec<usize> =
                (0..N_EVENTS).filter(|&k| g1[k] <= cfg.wall_tol && g1[k] < g0[k] && g0[k].is_finite()).collect();
            // the loop closes when the start projects inside the step
            let closes = |end: [f64; 3]| {
                if !loop_mode || arc <= 10.0 * cfg.h_max || ch.quad.idx != start_idx {
                    return false;
                }
                let a = v3(t);
                let d = v3(end) - a;
                let lam = (v3(start_t) - a).dot(&d) / d.norm_squared();
                let off = (a + d * lam.clamp(0.0, 1.0) - v3(start_t)).norm() * speed;
                (0.0..=1.0).contains(&lam) && off <= 1e-6 * self.p.perimeter()
            };
            if !armed.is_empty() {
                let te = self.locate(&ch, t, t1, &armed);
                if closes(te) {
                    arc += r0.distance(&first);
                    samples.push(Self::sample(&ch, start_t, first, charts.len() - 1, arc));
                    return Ok(Walk { samples, charts, end: End::Loop, node_passed });
                }
                let re = ch.rect(te);
                arc += r0.distance(&re);
                samples.push(Self::sample(&ch, te, re, charts.len() - 1, arc));
                let ge = Self::events(&ch, te);
                let etol = 1e-9 * self.p.perimeter();
                if re.x.min(re.y) <= cfg.eps_deg || (8..N_EVENTS).any(|k| ge[k] <= etol) {
                    return Ok(Walk { samples, charts, end: End::Degenerate, node_passed });
                }
                let mut cur = Start { chart: ch.clone(), t: te, dir: tau1 };
                let mut hit = false;
                for slot in 0..4 {
                    for side in 0..2 {
                        let k = 2 * slot + side;
                        let gk = Self::events(&cur.chart, cur.t)[k];
                        let outward = Self::event_grad(&cur.chart, k).dot(&v3(cur.dir)) < 0.0;
                        if gk.abs() <= etol && outward {
                            cur = self.transition(&cur.chart, cur.t, slot, side, cur.dir)?;
                            hit = true;
                        }
                    }
                }
                if !hit {
                    // grazing contact; keep going in this chart
                    t = te;
                    dir = tau1;
                    continue;
                }
                ch = cur.chart;
                t = cur.t;
                dir = cur.dir;
                charts.push(ch.quad.idx);
                samples.push(Self::sample(&ch, t, ch.rect(t), charts.len() - 1, arc));
                h = h.max(cfg.h0);
                clean = 0;
                continue;
            }

            if closes(t1) {
                arc += r0.distance(&first);
                samples.push(Self::sample(&ch, start_t, first, charts.len() - 1, arc));
                return Ok(Walk { samples, charts, end: End::Loop, node_passed });
            }

            arc += moved;
            samples.push(Self::sample(&ch, t1, r1, charts.len() - 1, arc));
            t = t1;
            dir = tau1;
            clean += 1;
            if clean >= 4 {
                h = (h * 1.5).min(cfg.h_max);
                clean = 0;
            }
            if arc > 100.0 * cfg.eps_deg && r1.x.min(r1.y) <= cfg.eps_deg {
                return Ok(Walk { samples, charts, end: End::Degenerate, node_passed });
            }
        }
    }
}

/// Viable starting charts and directions at a degenerate seed.
pub fn initial_chart(p: &Polygon, seed: &LabeledRectangle, cfg: &TraceConfig) -> Vec<Start> {
    Tracer::new(p, cfg).initial_charts(seed)
}

fn match_seed(end: &LabeledRectangle, seeds: &[(SeedRef, LabeledRectangle)], tol: f64) -> Option<(SeedRef, LabeledRectangle)> {
    seeds
        .iter()
        .map(|(s, r)| (*s, *r, r.distance(end)))
        .filter(|x| x.2 <= tol)
        .min_by(|a, b| a.2.partial_cmp(&b.2).unwrap())
        .map(|(s, r, _)| (s, r))
}

fn all_seeds(pos: &[Diameter]) -> Vec<(SeedRef, LabeledRectangle)> {
    pos.iter()
        .enumerate()
        .flat_map(|(d, dia)| {
            seed_rectangles(dia)
                .into_iter()
                .enumerate()
                .map(move |(k, r)| (SeedRef { diameter: d, labeling: k }, r))
        })
        .collect()
}

fn class_of(ends: [SeedRef; 2]) -> ComponentClass {
    match (ends[0].labeling % 2, ends[1].labeling % 2) {
        (0, 0) => ComponentClass::NullY,
        (1, 1) => ComponentClass::NullX,
        _ => ComponentClass::Hyperbolic,
    }
}

/// Orbit key and shift of an arc from its endpoint labels.
fn orbit_key(ends: [SeedRef; 2]) -> ((usize, usize, usize), usize) {
    let [a, b] = ends;
    let (e, o) = if a.diameter != b.diameter {
        if a.diameter < b.diameter {
            (a, b)
        } else {
            (b, a)
        }
    } else if (b.labeling + 4 - a.labeling) % 4 == 1 {
        (a, b)
    } else {
        (b, a)
    };
    ((e.diameter, o.diameter, (o.labeling + 4 - e.labeling) % 4), e.labeling)
}

/// Traces one arc from a labeled seed.
pub fn continue_component(
    p: &Polygon,
    seed: SeedRef,
    diameters: &[Diameter],
    cfg: &TraceConfig,
) -> Result<ArcComponent, TraceError> {
    let tr = Tracer::new(p, cfg);
    let seeds = all_seeds(diameters);
    let rect = seed_rectangles(&diameters[seed.diameter])[seed.labeling];
    let start = tr
        .initial_charts(&rect)
        .into_iter()
        .next()
        .ok_or(TraceError::NoViableChart { diameter: seed.diameter, labeling: seed.labeling })?;
    let walk = tr.walk(start, rect, false)?;
    let mut samples = walk.samples;
    let last = samples.last().unwrap().rect;
    let (end, exact) =
        match_seed(&last, &seeds, 10.0 * cfg.eps_deg).ok_or(TraceError::UnmatchedTerminalDiameter(last))?;
    let n = samples.len();
    if n >= 2 {
        let prev = samples[n - 2];
        samples[n - 1].arc = prev.arc + exact.distance(&prev.rect);
    }
    samples[n - 1].rect = exact;
    let ends = [seed, end];
    let (_, shift) = orbit_key(ends);
    let mut comp = ArcComponent {
        samples,
        charts: walk.charts,
        endpoints: Some(ends),
        class: class_of(ends),
        shift,
        orbit: 0,
        node_passed: walk.node_passed,
    };
    canonical_orientation(p, &mut comp);
    Ok(comp)
}

fn canonical_orientation(p: &Polygon, comp: &mut ArcComponent) {
    let s = |r: &LabeledRectangle| p.closest_on_boundary(r.v[0]);
    let param = |r: &LabeledRectangle| {
        let (e, u, _) = s(r);
        p.wrap(p.edge(e).s0 + u)
    };
    if comp.is_loop() {
        let best = (0..comp.samples.len() - 1)
            .min_by(|&a, &b| {
                let ra = comp.samples[a].rect;
                let rb = comp.samples[b].rect;
                (ra.x, ra.y).partial_cmp(&(rb.x, rb.y)).unwrap()
            })
            .unwrap_or(0);
        rotate_loop(comp, best);
        return;
    }
    let a = param(&comp.samples[0].rect);
    let b = param(&comp.samples.last().unwrap().rect);
    if b < a {
        comp.reverse();
    }
}

/// Restarts a closed loop at sample `k`.
fn rotate_loop(comp: &mut ArcComponent, k: usize) {
    if k == 0 {
        return;
    }
    let n = comp.samples.len();
    // the last sample repeats the first
    let mut body: Vec<Sample> = comp.samples[..n - 1].to_vec();
    body.rotate_left(k);
    let mut first = body[0];
    first.arc = 0.0;
    let mut out: Vec<Sample> = Vec::with_capacity(n);
    let mut arc = 0.0;
    for (i, s) in body.iter().enumerate() {
        if i > 0 {
            arc += s.rect.distance(&out[i - 1].rect);
        }
        let mut s = *s;
        s.arc = arc;
        out.push(s);
    }
    arc += first.rect.distance(&out[n - 2].rect);
    first.arc = arc;
    out.push(first);
    comp.samples = out;
}

/// Everything traced for one polygon.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceResult {
    /// Positive diameters; `SeedRef::diameter` indexes this list.
    pub diameters: Vec<Diameter>,
    pub components: Vec<ArcComponent>,
    pub config: TraceConfig,
}

impl TraceResult {
    pub fn arcs(&self) -> impl Iterator<Item = &ArcComponent> {
        self.components.iter().filter(|c| !c.is_loop())
    }

    pub fn loops(&self) -> impl Iterator<Item = &ArcComponent> {
        self.components.iter().filter(|c| c.is_loop())
    }

    pub fn delta_plus(&self) -> usize {
        self.diameters.len()
    }
}

/// Traces every arc from the positive diameters, then searches for loops.
pub fn trace_all(p: &Polygon, cfg: &TraceConfig) -> Result<TraceResult, TraceError> {
    cfg.validate()?;
    let rep = analyze(p);
    if rep.has_tricky() {
        return Err(TraceError::TrickyDiameter);
    }
    if !rep.families.is_empty() {
        return Err(TraceError::NonGeneric(format!("{} parallel-edge families", rep.families.len())));
    }
    if !rep.ambiguous.is_empty() {
        return Err(TraceError::NonGeneric(format!("{} ambiguous chords", rep.ambiguous.len())));
    }
    let pos = rep.positive();
    let seeds = all_seeds(&pos);
    let mut done: HashSet<SeedRef> = HashSet::new();
    let mut arcs = vec![];
    for (seed, _) in &seeds {
        if done.contains(seed) {
            continue;
        }
        let comp = continue_component(p, *seed, &pos, cfg)?;
        for e in comp.endpoints.unwrap() {
            if !done.insert(e) {
                return Err(TraceError::InconsistentEndpoints(e));
            }
        }
        arcs.push(comp);
    }
    let loops = find_loops(p, cfg, &arcs)?;

    let mut keyed: Vec<(OrbitKey, usize, ArcComponent)> = arcs
        .into_iter()
        .map(|c| {
            let (key, shift) = orbit_key(c.endpoints.unwrap());
            ((0, key), shift, c)
        })
        .collect();
    for (i, group) in loops.into_iter().enumerate() {
        for c in group {
            let shift = c.shift;
            keyed.push(((1, (i, 0, 0)), shift, c));
        }
    }
    keyed.sort_by_key(|k| (k.0, k.1));
    let mut orbit_ids: BTreeMap<OrbitKey, usize> = BTreeMap::new();
    let mut components = vec![];
    for (key, _, mut c) in keyed {
        let next = orbit_ids.len();
        c.orbit = *orbit_ids.entry(key).or_insert(next);
        components.push(c);
    }
    Ok(TraceResult { diameters: pos, components, config: *cfg })
}

/// Arcs before loops, then the endpoint key or loop index.
type OrbitKey = (u8, (usize, usize, usize));

/// Loop orbits found from oracle hits lying off every traced component.
fn find_loops(p: &Polygon, cfg: &TraceConfig, arcs: &[ArcComponent]) -> Result<Vec<Vec<ArcComponent>>, TraceError> {
    if cfg.loop_grid == 0 {
        return Ok(vec![]);
    }
    let radius = 4.0 * cfg.h_max;
    let mut idx = RectIndex::new(radius);
    for c in arcs {
        for s in &c.samples {
            idx.insert(s.rect);
        }
    }
    let tr = Tracer::new(p, cfg);
    let mut groups = vec![];
    for hit in oracle::sample_all(p, cfg.loop_grid) {
        if idx.nearest_within(&hit, radius).is_some() {
            continue;
        }
        let Some((ch, t)) = tr.charts_at(&hit).into_iter().find(|(ch, t)| ch.in_box(*t, cfg.wall_tol)) else {
            continue;
        };
        let Ok(dir) = ch.tangent_at(t, None) else { continue };
        let rect = ch.rect(t);
        let walk = tr.walk(Start { chart: ch, t, dir }, rect, true)?;
        if !matches!(walk.end, End::Loop) {
            return Err(TraceError::OrphanArc(hit));
        }
        let mut base = ArcComponent {
            samples: walk.samples,
            charts: walk.charts,
            endpoints: None,
            class: ComponentClass::Loop,
            shift: 0,
            orbit: 0,
            node_passed: walk.node_passed,
        };
        canonical_orientation(p, &mut base);
        let group: Vec<ArcComponent> = (0..4).map(|k| base.shifted(k)).collect();
        for c in &group {
            for s in &c.samples {
                idx.insert(s.rect);
            }
        }
        groups.push(group);
    }
    Ok(groups)
}

/// Run-length compressed chart sequence, checked against the repeat bound.
pub fn inscribing_sequence(comp: &ArcComponent, n_edges: usize) -> Result<Vec<[usize; 4]>, TraceError> {
    let mut seq: Vec<[usize; 4]> = vec![];
    for q in &comp.charts {
        if seq.last() != Some(q) {
            seq.push(*q);
        }
    }
    let mut counts: BTreeMap<[usize; 4], usize> = BTreeMap::new();
    for q in &seq {
        *counts.entry(*q).or_default() += 1;
    }
    if let Some((q, &c)) = counts.iter().find(|(_, &c)| c > 64) {
        return Err(TraceError::RepeatBoundViolated { quad: *q, count: c });
    }
    debug_assert!(seq.len() <= 64 * n_edges.pow(4));
    Ok(seq)
}

/// Exact point on the component between samples `i` and `i + 1` at fraction
/// `lam`, re-projected onto the chart curve. `None` when the two samples sit in
/// different charts or projection fails.
pub fn eval_between(p: &Polygon, comp: &ArcComponent, cfg: &TraceConfig, i: usize, lam: f64) -> Option<Sample> {
    let a = comp.samples.get(i)?;
    let b = comp.samples.get(i + 1)?;
    if a.chart != b.chart {
        return None;
    }
    let ch = Chart::build(EdgeQuadruple::from_polygon(p, comp.charts[a.chart])).ok()?;
    let ta = V3::new(a.t[0], a.t[1], a.t[2]);
    let d = V3::new(b.t[0], b.t[1], b.t[2]) - ta;
    if d.norm() == 0.0 {
        return Some(*a);
    }
    let tp = arr(ta + d * lam);
    let t = Tracer::new(p, cfg).correct(&ch, tp, arr(d.normalize()), d.norm())?;
    let rect = ch.rect(t);
    Some(Tracer::sample(&ch, t, rect, a.chart, a.arc + lam * (b.arc - a.arc)))
}
