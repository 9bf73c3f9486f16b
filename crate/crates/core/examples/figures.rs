//! Shape-curve figures: axes, every shape curve, shaded shape loops.
//!
//! cargo run --release --example figures -- [out_dir]

use pegtrace::generate::corpus_polygon;
use pegtrace::geom::{Point, Polygon};
use pegtrace::report::{diameters_svg, shape_curves_svg};
use pegtrace::tracer::{trace_all, TraceConfig};

fn main() {
    let out = std::env::args().nth(1).unwrap_or_else(|| "target/figures".into());
    std::fs::create_dir_all(&out).unwrap();
    let tri = Polygon::new(vec![Point::new(0.0, 0.0), Point::new(4.0, 0.0), Point::new(1.0, 1.0)]).unwrap();
    for (name, p) in [("triangle".to_string(), tri), ("corpus41".into(), corpus_polygon(41))] {
        let tr = trace_all(&p, &TraceConfig::for_polygon(&p)).unwrap();
        std::fs::write(format!("{out}/{name}_diameters.svg"), diameters_svg(&p)).unwrap();
        std::fs::write(format!("{out}/{name}_shapes.svg"), shape_curves_svg(&tr)).unwrap();
        println!("{out}/{name}_shapes.svg: {} components", tr.components.len());
    }
}
