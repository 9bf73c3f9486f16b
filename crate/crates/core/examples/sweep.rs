//! The area sweep: along each arc the alternating region area changes by the
//! integral of Y dX - X dY, so every hyperbolic shape loop encloses area(P)
//! and every null or closed loop encloses zero.
//!
//! cargo run --release --example sweep

use pegtrace::generate::corpus_polygon;
use pegtrace::shape::{check_differential, differential_step, region_areas, sweep_tolerance, verify_sweep};
use pegtrace::tracer::{trace_all, TraceConfig};

fn main() {
    for i in [0, 7, 12] {
        let p = corpus_polygon(i);
        let cfg = TraceConfig::for_polygon(&p);
        let tr = trace_all(&p, &cfg).unwrap();
        let tol = sweep_tolerance(&p, &cfg);
        println!("corpus polygon {i}: area {:.6}, tolerance {tol:.2e}", p.area());
        for c in &tr.components {
            let s = verify_sweep(&p, c, tol).unwrap();
            let d = check_differential(&p, c, &cfg, differential_step(c, 0.005 * p.perimeter()));
            let first = region_areas(&p, &c.samples[0].rect).unwrap();
            println!(
                "  {:<10} shape area {:+.9}  residual {:.1e}  A(start) {:+.6}  diff ratio {:.2}  {}",
                format!("{:?}", c.class),
                s.shape_area,
                s.residual,
                first.total,
                d.ratio,
                if s.pass && d.pass { "ok" } else { "FAIL" }
            );
        }
    }
}
