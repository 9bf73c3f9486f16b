//! Isometric coincidences: distinct inscribed rectangles with the same side
//! lengths, found where shape curves cross.
//!
//! cargo run --release --example coincidences

use pegtrace::coincidence::count_m;
use pegtrace::generate::corpus_polygon;
use pegtrace::tracer::{trace_all, TraceConfig};

fn main() {
    for i in [0, 1, 2, 73] {
        let p = corpus_polygon(i);
        let tr = trace_all(&p, &TraceConfig::for_polygon(&p)).unwrap();
        let rep = count_m(&p, &tr);
        println!(
            "corpus polygon {i}: M = {} (orbit count {}), delta_plus = {}, 2(delta_plus - 2) = {} {}",
            rep.m,
            rep.m_from_orbits,
            rep.delta_plus,
            rep.bound_generic,
            if rep.pass_generic { "holds" } else { "does not hold" }
        );
        for c in rep.clusters.iter().take(4) {
            println!("  (X, Y) = ({:.6}, {:.6})  mu = {}", c.x, c.y, c.mu);
            for q in &c.participants {
                let v = q.rect.v;
                println!("    component {:>2}: {} {} {} {}", q.component, v[0], v[1], v[2], v[3]);
            }
        }
        if rep.clusters.len() > 4 {
            println!("  ... {} clusters in all", rep.clusters.len());
        }
    }
}
