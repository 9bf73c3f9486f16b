//! Shape curves `(X, Y)`, their closing loops, the 1-form `-X dY + Y dX`,
//! the boundary region areas `A_j` and the sweep invariant
//! `A = (A1 + A3) - (A2 + A4)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{ccw_gaps, signed_area, LabeledRectangle, Point, Polygon};
use crate::tracer::{eval_between, ArcComponent, ComponentClass, TraceConfig};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ShapeError {
    #[error("shape curve endpoints ({0:?}, {1:?}) do not fit class {2:?}")]
    ClassMismatch((f64, f64), (f64, f64), ComponentClass),
    #[error("rectangle does not grace the polygon")]
    NotGracing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeCurve {
    pub points: Vec<(f64, f64)>,
    /// Rectangle-space arc parameter of each point.
    pub arc: Vec<f64>,
    pub class: ComponentClass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Augmentation {
    ViaOrigin,
    AlongAxis,
    None,
}

/// Closed chain; the last point joins the first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeLoop {
    pub chain: Vec<(f64, f64)>,
    pub augmentation: Augmentation,
}

impl ShapeLoop {
    pub fn signed_area(&self) -> f64 {
        signed_area(&to_points(&self.chain))
    }
}

fn to_points(c: &[(f64, f64)]) -> Vec<Point> {
    c.iter().map(|&(x, y)| Point::new(x, y)).collect()
}

/// Per-sample side lengths; arc endpoints land exactly on the axes.
pub fn shape_curve(comp: &ArcComponent) -> ShapeCurve {
    let mut points = comp.shape_points();
    if !comp.is_loop() && !points.is_empty() {
        let n = points.len();
        for i in [0, n - 1] {
            let (x, y) = points[i];
            if x <= y {
                points[i].0 = 0.0;
            } else {
                points[i].1 = 0.0;
            }
        }
    }
    ShapeCurve { points, arc: comp.samples.iter().map(|s| s.arc).collect(), class: comp.class }
}

/// Closes a shape curve along the coordinate axes.
pub fn shape_loop(curve: &ShapeCurve) -> Result<ShapeLoop, ShapeError> {
    let pts = &curve.points;
    let (first, last) = (pts[0], *pts.last().unwrap());
    let on_x = |p: (f64, f64)| p.1 == 0.0;
    let on_y = |p: (f64, f64)| p.0 == 0.0;
    let mismatch = || ShapeError::ClassMismatch(first, last, curve.class);
    match curve.class {
        ComponentClass::Hyperbolic => {
            if !((on_x(first) && on_y(last)) || (on_y(first) && on_x(last))) {
                return Err(mismatch());
            }
            let mut chain = pts.clone();
            chain.push((0.0, 0.0));
            Ok(ShapeLoop { chain, augmentation: Augmentation::ViaOrigin })
        }
        ComponentClass::NullX | ComponentClass::NullY => {
            let axis_ok = match curve.class {
                ComponentClass::NullX => on_x(first) && on_x(last),
                _ => on_y(first) && on_y(last),
            };
            if !axis_ok {
                return Err(mismatch());
            }
            Ok(ShapeLoop { chain: pts.clone(), augmentation: Augmentation::AlongAxis })
        }
        ComponentClass::Loop => {
            let mut chain = pts.clone();
            if chain.len() > 1 {
                chain.pop();
            }
            Ok(ShapeLoop { chain, augmentation: Augmentation::None })
        }
    }
}

/// `sum (y_i x_{i+1} - x_i y_{i+1})` over the segments of a closed chain.
pub fn omega_integral(chain: &[(f64, f64)]) -> f64 {
    let n = chain.len();
    (0..n)
        .map(|i| {
            let (x0, y0) = chain[i];
            let (x1, y1) = chain[(i + 1) % n];
            y0 * x1 - x0 * y1
        })
        .sum()
}

/// Integral of the same form along an open chain.
pub fn omega_open(chain: &[(f64, f64)]) -> f64 {
    chain.windows(2).map(|w| w[0].1 * w[1].0 - w[0].0 * w[1].1).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionAreas {
    pub a: [f64; 4],
    /// `(A1 + A3) - (A2 + A4)`
    pub total: f64,
}

/// `A_j` is the signed area enclosed by the counterclockwise boundary walk
/// from `R_j` to `R_{j+1}` closed by the chord back to `R_j`.
pub fn region_areas(p: &Polygon, r: &LabeledRectangle) -> Result<RegionAreas, ShapeError> {
    let tol = 1e-6 * p.perimeter();
    let mut s = [0.0; 4];
    for (sj, v) in s.iter_mut().zip(r.v) {
        *sj = p.boundary_param_tol(v, tol).map_err(|_| ShapeError::NotGracing)?.0;
    }
    let gaps = ccw_gaps(s, p.perimeter(), p.eps_geo()).ok_or(ShapeError::NotGracing)?;
    let eps = p.eps_geo();
    let mut a = [0.0; 4];
    for j in 0..4 {
        if gaps[j] == 0.0 {
            continue;
        }
        let mut chain = vec![r.v[j]];
        let mut verts: Vec<(f64, Point)> = p
            .edges()
            .iter()
            .map(|e| ((e.s0 - s[j]).rem_euclid(p.perimeter()), e.start))
            .filter(|&(off, _)| off > eps && off < gaps[j] - eps)
            .collect();
        verts.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
        chain.extend(verts.into_iter().map(|(_, v)| v));
        chain.push(r.v[(j + 1) % 4]);
        a[j] = signed_area(&chain);
    }
    Ok(RegionAreas { a, total: (a[0] + a[2]) - (a[1] + a[3]) })
}

/// Sample of the component at rectangle-space arc parameter `s`, projected
/// exactly onto the curve.
pub fn point_at_arc(p: &Polygon, comp: &ArcComponent, cfg: &TraceConfig, s: f64) -> Option<(usize, LabeledRectangle)> {
    let sm = &comp.samples;
    let i = sm.partition_point(|x| x.arc <= s).checked_sub(1)?;
    if i + 1 >= sm.len() {
        return None;
    }
    let (a, b) = (sm[i].arc, sm[i + 1].arc);
    if b <= a {
        return None;
    }
    let lam = (s - a) / (b - a);
    let smp = eval_between(p, comp, cfg, i, lam)?;
    Some((sm[i].chart, smp.rect))
}

/// Differential-identity residuals at stencil half-width `h`, evaluated at
/// every center in `centers` (arc parameters). Centers whose stencil leaves
/// one chart are skipped; returns `(max residual, centers used)`.
pub fn differential_residual(
    p: &Polygon,
    comp: &ArcComponent,
    cfg: &TraceConfig,
    centers: &[f64],
    h: f64,
) -> (f64, usize) {
    let mut worst: f64 = 0.0;
    let mut used = 0;
    for &c in centers {
        let pts: Vec<_> = [c - h, c, c + h].iter().map(|&s| point_at_arc(p, comp, cfg, s)).collect();
        let [Some((ka, ra)), Some((kc, rc)), Some((kb, rb))] = [pts[0], pts[1], pts[2]] else { continue };
        if ka != kc || kc != kb {
            continue;
        }
        let (Ok(aa), Ok(ab)) = (region_areas(p, &ra), region_areas(p, &rb)) else { continue };
        let dt = 2.0 * h;
        let lhs = (ab.total - aa.total) / dt;
        let rhs = rc.y * (rb.x - ra.x) / dt - rc.x * (rb.y - ra.y) / dt;
        worst = worst.max((lhs - rhs).abs());
        used += 1;
    }
    (worst, used)
}

/// Centers for the differential check: arc parameters whose `+-2h` stencil
/// stays inside one chart visit, at most `max_centers` of them spread evenly.
pub fn differential_centers(comp: &ArcComponent, h: f64, max_centers: usize) -> Vec<f64> {
    let sm = &comp.samples;
    let mut spans: Vec<(f64, f64)> = vec![];
    let mut i = 0;
    while i < sm.len() {
        let mut j = i;
        while j + 1 < sm.len() && sm[j + 1].chart == sm[i].chart {
            j += 1;
        }
        spans.push((sm[i].arc, sm[j].arc));
        i = j + 1;
    }
    let usable: Vec<(f64, f64)> =
        spans.into_iter().filter(|(a, b)| b - a > 4.0 * h).map(|(a, b)| (a + 2.0 * h, b - 2.0 * h)).collect();
    let total: f64 = usable.iter().map(|(a, b)| b - a).sum();
    if total <= 0.0 || max_centers == 0 {
        return vec![];
    }
    let step = total / max_centers as f64;
    let mut out = vec![];
    for (a, b) in usable {
        let mut s = a + 0.5 * step.min(b - a);
        while s <= b {
            out.push(s);
            s += step;
        }
    }
    out
}

/// Result of the halving experiment for one component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DifferentialCheck {
    pub h: f64,
    pub residual_h: f64,
    pub residual_half: f64,
    /// `residual_h / residual_half`; infinite when both are at roundoff.
    pub ratio: f64,
    pub centers: usize,
    pub pass: bool,
}

/// Residuals at `h` and `h/2` over the same centers. Passes when the ratio is
/// at least 3 or both residuals sit at roundoff level.
pub fn check_differential(p: &Polygon, comp: &ArcComponent, cfg: &TraceConfig, h: f64) -> DifferentialCheck {
    let centers = differential_centers(comp, h, 24);
    let (r1, n1) = differential_residual(p, comp, cfg, &centers, h);
    let (r2, _) = differential_residual(p, comp, cfg, &centers, 0.5 * h);
    let floor = 1e-9 * p.perimeter();
    let ratio = if r2 <= floor { f64::INFINITY } else { r1 / r2 };
    DifferentialCheck {
        h,
        residual_h: r1,
        residual_half: r2,
        ratio,
        centers: n1,
        pass: n1 == 0 || r1 <= floor || ratio >= 3.0,
    }
}

/// Largest stencil half-width that fits some chart visit, capped at `cap`.
pub fn differential_step(comp: &ArcComponent, cap: f64) -> f64 {
    let sm = &comp.samples;
    let mut best: f64 = 0.0;
    let mut i = 0;
    while i < sm.len() {
        let mut j = i;
        while j + 1 < sm.len() && sm[j + 1].chart == sm[i].chart {
            j += 1;
        }
        best = best.max(sm[j].arc - sm[i].arc);
        i = j + 1;
    }
    (best / 8.0).min(cap)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub class: ComponentClass,
    pub shape_area: f64,
    pub target: f64,
    pub residual: f64,
    pub pass: bool,
}

/// Sweep tolerance `max(1e-6 area(P), h_max^2)`.
pub fn sweep_tolerance(p: &Polygon, cfg: &TraceConfig) -> f64 {
    (1e-6 * p.area()).max(cfg.h_max * cfg.h_max)
}

pub fn verify_sweep(p: &Polygon, comp: &ArcComponent, tol: f64) -> Result<SweepReport, ShapeError> {
    let lp = shape_loop(&shape_curve(comp))?;
    let area = lp.signed_area();
    let target = if comp.class == ComponentClass::Hyperbolic { p.area() } else { 0.0 };
    let residual = (area.abs() - target).abs();
    Ok(SweepReport { class: comp.class, shape_area: area, target, residual, pass: residual <= tol })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tracer::trace_all;
    use proptest::prelude::*;

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

    fn close(a: [f64; 4], b: [f64; 4]) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12)
    }

    #[test]
    fn region_areas_of_the_family() {
        let p = obtuse();
        let r0 = region_areas(&p, &family(0.0)).unwrap();
        assert!(close(r0.a, [0.0, 0.0, 2.0, 0.0]), "{:?}", r0);
        assert!((r0.total - 2.0).abs() <= 1e-12);
        let r1 = region_areas(&p, &family(1.0)).unwrap();
        assert!(close(r1.a, [0.0, 1.5, 0.0, 0.5]), "{:?}", r1);
        assert!((r1.total + 2.0).abs() <= 1e-12);
        let rh = region_areas(&p, &family(0.5)).unwrap();
        assert!(close(rh.a, [0.0, 0.375, 0.5, 0.125]), "{:?}", rh);
        assert!(rh.total.abs() <= 1e-12);
    }

    #[test]
    fn non_gracing_is_rejected() {
        let p = obtuse();
        let r = family(0.5).reversed();
        assert_eq!(region_areas(&p, &r), Err(ShapeError::NotGracing));
        let off = LabeledRectangle::new([Point::new(0.5, 0.1), Point::new(2.5, 0.1), Point::new(2.5, 0.5), Point::new(0.5, 0.5)]);
        assert_eq!(region_areas(&p, &off), Err(ShapeError::NotGracing));
    }

    #[test]
    fn omega_examples() {
        let sq = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];
        assert_eq!(omega_integral(&sq), -2.0);
        let mut rev = sq;
        rev.reverse();
        assert_eq!(omega_integral(&rev), 2.0);
        let diag = [(0.0, 0.0), (0.5, 0.5), (2.0, 2.0)];
        assert_eq!(omega_open(&diag), 0.0);
    }

    #[test]
    fn obtuse_triangle_sweep_and_differential() {
        let p = obtuse();
        let cfg = TraceConfig::for_polygon(&p);
        let res = trace_all(&p, &cfg).unwrap();
        for c in &res.components {
            let rep = verify_sweep(&p, c, 1e-6).unwrap();
            assert!(rep.pass, "{:?}", rep);
            assert!((rep.shape_area.abs() - 2.0).abs() <= 1e-6);
            let centers = differential_centers(c, 0.1, 10);
            assert!(!centers.is_empty());
            for h in [0.1, 0.01] {
                let (r, n) = differential_residual(&p, c, &cfg, &centers, h);
                assert!(n > 0 && r <= 1e-8, "{r}");
            }
        }
        let c0 = res.components.iter().find(|c| c.shift == 0).unwrap();
        let lp = shape_loop(&shape_curve(c0)).unwrap();
        assert_eq!(lp.augmentation, Augmentation::ViaOrigin);
        let pts = &lp.chain;
        let has = |q: (f64, f64)| pts.iter().any(|&x| (x.0 - q.0).abs() < 1e-9 && (x.1 - q.1).abs() < 1e-9);
        assert!(has((4.0, 0.0)) && has((0.0, 1.0)) && has((0.0, 0.0)));
    }

    #[test]
    fn class_mismatch() {
        let curve = ShapeCurve { points: vec![(1.0, 0.0), (0.5, 0.5), (2.0, 0.0)], arc: vec![0.0, 1.0, 2.0], class: ComponentClass::Hyperbolic };
        assert!(matches!(shape_loop(&curve), Err(ShapeError::ClassMismatch(..))));
        let null = ShapeCurve { class: ComponentClass::NullX, ..curve };
        assert_eq!(shape_loop(&null).unwrap().augmentation, Augmentation::AlongAxis);
    }

    proptest! {
        #[test]
        fn omega_is_minus_twice_area(pts in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 3..12)) {
            let w = omega_integral(&pts);
            let a = signed_area(&to_points(&pts));
            let scale = pts.iter().map(|p| p.0.abs() + p.1.abs()).sum::<f64>().powi(2) + 1.0;
            prop_assert!((w + 2.0 * a).abs() <= 1e-12 * scale);
        }

        #[test]
        fn tiling_identity_on_the_family(h in 0.0f64..1.0) {
            let p = obtuse();
            let r = family(h);
            let ra = region_areas(&p, &r).unwrap();
            let sum: f64 = ra.a.iter().sum::<f64>() + r.area();
            prop_assert!((sum - p.area()).abs() <= 1e-12);
            prop_assert!((ra.total - (2.0 - 4.0 * h)).abs() <= 1e-12);
        }

        #[test]
        fn one_shift_negates_a(h in 0.01f64..0.99) {
            let p = obtuse();
            let r = family(h);
            let a = region_areas(&p, &r).unwrap().total;
            let b = region_areas(&p, &r.shifted(1)).unwrap().total;
            prop_assert!((a + b).abs() <= 1e-12);
        }
    }
}
