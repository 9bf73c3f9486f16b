//! The chart-free brute-force finder, compared against the tracer in both
//! directions.
//!
//! cargo run --release --example oracle

use pegtrace::generate::corpus_polygon;
use pegtrace::report::oracle_check;
use pegtrace::tracer::{trace_all, TraceConfig};

fn main() {
    let p = corpus_polygon(3);
    let tr = trace_all(&p, &TraceConfig::for_polygon(&p)).unwrap();
    for n in [10, 20, 40] {
        let c = oracle_check(&p, &tr, n);
        println!(
            "grid {n:>2}: {:>5} rectangles; hit -> trace {:.2e} (bound {:.2e}); trace -> hit {:.2e} (bound {:.2e}) {}",
            c.hits,
            c.max_hit_to_trace,
            c.hit_tolerance,
            c.max_trace_to_hit,
            c.trace_tolerance,
            if c.pass { "ok" } else { "FAIL" }
        );
    }
}
