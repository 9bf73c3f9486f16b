//! Traces every component of the space of inscribed rectangles.
//!
//! cargo run --release --example trace

use pegtrace::geom::{Point, Polygon};
use pegtrace::generate::corpus_polygon;
use pegtrace::tracer::{trace_all, TraceConfig};

fn run(name: &str, p: &Polygon) {
    let cfg = TraceConfig::for_polygon(p);
    let tr = trace_all(p, &cfg).unwrap();
    println!(
        "{name}: delta_plus = {}, {} arcs, {} loops",
        tr.delta_plus(),
        tr.arcs().count(),
        tr.loops().count()
    );
    for c in &tr.components {
        let (a, b) = (c.samples[0].rect, c.samples[c.samples.len() - 1].rect);
        println!(
            "  orbit {} shift {} {:?}: {} samples over {} charts, (X,Y) {:.4},{:.4} -> {:.4},{:.4}",
            c.orbit,
            c.shift,
            c.class,
            c.samples.len(),
            c.charts.len(),
            a.x,
            a.y,
            b.x,
            b.y
        );
    }
}

fn main() {
    let tri = Polygon::new(vec![Point::new(0.0, 0.0), Point::new(4.0, 0.0), Point::new(1.0, 1.0)]).unwrap();
    run("obtuse triangle", &tri);
    run("corpus polygon 7", &corpus_polygon(7));
}
