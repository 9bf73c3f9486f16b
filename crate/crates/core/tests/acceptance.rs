//! The seven acceptance criteria, one test each. Every test prints a single
//! `criterion N: PASS|FAIL ...` line and fails when its criterion does.

mod common;

use std::io::Write;
use std::sync::OnceLock;
use std::time::Instant;

use pegtrace::chart::{Chart, ConicKind, EdgeQuadruple, Segment};
use pegtrace::coincidence::{count_m, CoincidenceReport};
use pegtrace::diameters::delta_plus;
use pegtrace::generate::corpus_polygon;
use pegtrace::geom::{signed_area, Point, Polygon};
use pegtrace::report::{oracle_check, OracleCheck, DIFFERENTIAL_CAP};
use pegtrace::shape::{
    check_differential, differential_step, omega_integral, region_areas, shape_curve, shape_loop, verify_sweep,
};
use pegtrace::tracer::{inscribing_sequence, seed_rectangles, trace_all, ComponentClass, TraceConfig, TraceResult};

const CORPUS: usize = 100;

struct Entry {
    p: Polygon,
    trace: TraceResult,
}

fn corpus() -> &'static [Entry] {
    static C: OnceLock<Vec<Entry>> = OnceLock::new();
    C.get_or_init(|| {
        (0..CORPUS)
            .map(|i| {
                let p = corpus_polygon(i);
                let trace = trace_all(&p, &TraceConfig::for_polygon(&p)).unwrap_or_else(|e| panic!("polygon {i}: {e}"));
                Entry { p, trace }
            })
            .collect()
    })
}

fn report(n: usize, ok: bool, detail: String) {
    // bypasses libtest output capture so passing criteria are listed too
    let line = format!("criterion {n}: {} {detail}\n", if ok { "PASS" } else { "FAIL" });
    std::io::stderr().write_all(line.as_bytes()).unwrap();
    assert!(ok, "criterion {n} failed: {detail}");
}

#[test]
fn criterion_1_obtuse_triangle() {
    let t0 = Instant::now();
    let p = common::obtuse();
    let mut fails: Vec<String> = vec![];
    if delta_plus(&p) != 2 {
        fails.push("delta_plus".into());
    }
    let tr = trace_all(&p, &TraceConfig::for_polygon(&p)).unwrap();
    let loops: Vec<_> = tr.components.iter().map(|c| shape_loop(&shape_curve(c)).unwrap()).collect();
    let areas: Vec<f64> =
        [0.0, 0.5, 1.0].iter().map(|&h| region_areas(&p, &common::family(h)).unwrap().total).collect();
    let m = count_m(&p, &tr).m;
    let dt = t0.elapsed();
    if tr.components.len() != 4 || tr.components.iter().any(|c| c.class != ComponentClass::Hyperbolic) {
        fails.push("components".into());
    }
    let mut vertex_err: f64 = 0.0;
    let mut line_err: f64 = 0.0;
    let mut area_err: f64 = 0.0;
    for c in &tr.components {
        for s in &c.samples {
            vertex_err = vertex_err.max(common::distance_to_family(&s.rect));
        }
        let curve = if c.shift % 2 == 0 { c.shape_points() } else { c.shifted(1).shape_points() };
        for (x, y) in curve {
            line_err = line_err.max((x - (4.0 - 4.0 * y)).abs());
        }
    }
    for l in &loops {
        area_err = area_err.max((l.signed_area().abs() - 2.0).abs());
    }
    if vertex_err > 1e-8 || line_err > 1e-8 || area_err > 1e-6 {
        fails.push(format!("vertex {vertex_err:.1e} line {line_err:.1e} area {area_err:.1e}"));
    }
    for ((h, want), a) in [(0.0, 2.0), (0.5, 0.0), (1.0, -2.0)].into_iter().zip(areas) {
        if (a - want).abs() > 1e-8 {
            fails.push(format!("A({h}) = {a}"));
        }
    }
    if m != 0 {
        fails.push(format!("M = {m}"));
    }
    if dt.as_secs_f64() >= 1.0 {
        fails.push(format!("runtime {dt:?}"));
    }
    report(
        1,
        fails.is_empty(),
        format!("vertex err {vertex_err:.1e}, line err {line_err:.1e}, area err {area_err:.1e}, M = {m}, {dt:.2?} {fails:?}"),
    );
}

#[test]
fn criterion_2_sweep_corpus() {
    let t0 = Instant::now();
    let c = corpus();
    let (mut worst, mut bad, mut n) = (0.0f64, vec![], 0);
    for (i, e) in c.iter().enumerate() {
        let tol = 1e-6 * e.p.area();
        for comp in &e.trace.components {
            n += 1;
            let s = verify_sweep(&e.p, comp, tol).unwrap();
            worst = worst.max(s.residual / e.p.area());
            if !s.pass {
                bad.push(i);
            }
        }
    }
    let dt = t0.elapsed();
    report(
        2,
        bad.is_empty() && dt.as_secs() < 300,
        format!("{n} components, worst relative residual {worst:.2e}, failing polygons {bad:?}, {dt:.1?}"),
    );
}

#[test]
fn criterion_3_differential_identity() {
    let c = corpus();
    let (mut worst_ratio, mut bad, mut worst_omega) = (f64::INFINITY, vec![], 0.0f64);
    for (i, e) in c.iter().enumerate() {
        for comp in &e.trace.components {
            let h = differential_step(comp, DIFFERENTIAL_CAP * e.p.perimeter());
            let d = check_differential(&e.p, comp, &e.trace.config, h);
            worst_ratio = worst_ratio.min(d.ratio);
            if !d.pass {
                bad.push(i);
            }
            let chain = shape_loop(&shape_curve(comp)).unwrap().chain;
            let pts: Vec<Point> = chain.iter().map(|&(x, y)| Point::new(x, y)).collect();
            let area = signed_area(&pts);
            let scale = chain.iter().fold(0.0f64, |m, &(x, y)| m.max(x.abs()).max(y.abs()));
            let rel = (omega_integral(&chain) + 2.0 * area).abs() / (2.0 * area.abs()).max(scale * scale);
            worst_omega = worst_omega.max(rel);
        }
    }
    report(
        3,
        bad.is_empty() && worst_omega <= 1e-12,
        format!("min halving ratio {worst_ratio:.2}, omega identity rel err {worst_omega:.1e}, failing polygons {bad:?}"),
    );
}

#[test]
fn criterion_4_structure() {
    let c = corpus();
    let mut bad = vec![];
    let mut worst: f64 = 0.0;
    for (i, e) in c.iter().enumerate() {
        let tr = &e.trace;
        let tol = 10.0 * tr.config.eps_deg;
        let mut ok = tr.arcs().count() == 2 * tr.delta_plus();
        for comp in tr.arcs() {
            let ends = comp.endpoints.unwrap();
            let seeds = ends.map(|s| seed_rectangles(&tr.diameters[s.diameter])[s.labeling]);
            let (first, last) = (comp.samples[0].rect, comp.samples[comp.samples.len() - 1].rect);
            let d = (first.distance(&seeds[0]).max(last.distance(&seeds[1])))
                .min(first.distance(&seeds[1]).max(last.distance(&seeds[0])));
            worst = worst.max(d);
            ok &= d <= tol;
        }
        if !ok {
            bad.push(i);
        }
    }
    report(4, bad.is_empty(), format!("worst endpoint distance {worst:.1e}, failing polygons {bad:?}"));
}

#[test]
fn criterion_5_coincidence_bounds() {
    let c = corpus();
    let reps: Vec<CoincidenceReport> = c.iter().map(|e| count_m(&e.p, &e.trace)).collect();
    let generic: Vec<String> = reps
        .iter()
        .enumerate()
        .filter(|(_, r)| !r.pass_generic)
        .map(|(i, r)| format!("{i}: M={} < {}", r.m, r.bound_generic))
        .collect();
    let nontricky = reps.iter().all(|r| r.pass_nontricky);
    let half = reps.iter().all(|r| r.m as i64 >= r.delta_plus as i64 - 2);
    let routes = reps.iter().all(|r| r.m == r.m_from_orbits);
    report(
        5,
        generic.is_empty() && nontricky,
        format!(
            "2(d+ - 2) fails on {}/{} {generic:?}; ceil((d+ - 2)/16) {}; diagnostic M >= d+ - 2 {}; routes agree {routes}",
            generic.len(),
            reps.len(),
            if nontricky { "holds" } else { "fails" },
            if half { "holds" } else { "fails" },
        ),
    );
}

#[test]
fn criterion_6_oracle_equivalence() {
    let c = corpus();
    let t0 = Instant::now();
    let checks: Vec<OracleCheck> = c.iter().map(|e| oracle_check(&e.p, &e.trace, 40)).collect();
    let bad: Vec<usize> = checks.iter().enumerate().filter(|(_, k)| !k.pass).map(|(i, _)| i).collect();
    let h = checks.iter().map(|k| k.max_hit_to_trace / k.hit_tolerance).fold(0.0, f64::max);
    let t = checks.iter().map(|k| k.max_trace_to_hit / k.trace_tolerance).fold(0.0, f64::max);
    report(
        6,
        bad.is_empty(),
        format!(
            "worst hit->trace {h:.3} of bound, worst trace->hit {t:.3} of bound, failing polygons {bad:?}, {:.1?}",
            t0.elapsed()
        ),
    );
}

#[test]
fn criterion_7_chart_suite() {
    let mut fails = vec![];
    let seg = |ax: f64, ay: f64, dx: f64, dy: f64| Segment { anchor: Point::new(ax, ay), dir: Point::new(dx, dy), len: 2.0 };
    let sq = Chart::build(EdgeQuadruple::from_segments([
        seg(0.0, 0.0, 1.0, 0.0),
        seg(2.0, 0.0, 0.0, 1.0),
        seg(0.0, 2.0, 1.0, 0.0),
        seg(0.0, 0.0, 0.0, 1.0),
    ]))
    .unwrap();
    if sq.kind != ConicKind::CrossingLines {
        fails.push(format!("square kind {:?}", sq.kind));
    }
    let branches = sq.components(17).unwrap();
    let on = |f: &dyn Fn(f64) -> f64| branches.iter().any(|b| b.iter().all(|q| (q.t[1] - f(q.t[0])).abs() < 1e-9));
    if branches.len() != 2 || !on(&|t| t) || !on(&|t| 2.0 - t) {
        fails.push("square branches".into());
    }

    let c = corpus();
    let (mut max_components, mut max_repeat, mut charts) = (0usize, 0usize, 0usize);
    for e in c.iter().take(20) {
        let n = e.p.len();
        for a in 0..n {
            for b in 0..n {
                for cc in 0..n {
                    for d in 0..n {
                        if let Ok(ch) = Chart::build(EdgeQuadruple::from_polygon(&e.p, [a, b, cc, d])) {
                            if let Ok(comps) = ch.components(16) {
                                charts += 1;
                                max_components = max_components.max(comps.len());
                            }
                        }
                    }
                }
            }
        }
    }
    for e in c {
        for comp in &e.trace.components {
            let seq = inscribing_sequence(comp, e.p.len()).unwrap();
            for q in &seq {
                max_repeat = max_repeat.max(seq.iter().filter(|x| *x == q).count());
            }
        }
    }
    if max_components > 64 || max_repeat > 64 {
        fails.push(format!("components {max_components}, repeats {max_repeat}"));
    }
    report(
        7,
        fails.is_empty(),
        format!("square CrossingLines; {charts} charts, max components {max_components}, max repeat {max_repeat} {fails:?}"),
    );
}
