//! Diameters of an obtuse triangle and of a seeded random hexagon.
//!
//! cargo run --example diameters

use pegtrace::diameters::{analyze, Orientation};
use pegtrace::generate::{generate, GeneratorConfig};
use pegtrace::geom::{Point, Polygon};

fn show(name: &str, p: &Polygon) {
    let rep = analyze(p);
    println!("{name}: {} vertices, {} diameters, delta_plus = {}", p.len(), rep.diameters.len(), rep.delta_plus());
    for d in &rep.diameters {
        let sign = if d.orientation == Orientation::Positive { '+' } else { '-' };
        println!(
            "  {sign} {} -> {}  length {:.6}  {:?}{}",
            d.q1.point,
            d.q2.point,
            d.length,
            d.extremum,
            if d.tricky { "  tricky" } else { "" }
        );
    }
}

fn main() {
    let tri = Polygon::new(vec![Point::new(0.0, 0.0), Point::new(4.0, 0.0), Point::new(1.0, 1.0)]).unwrap();
    show("obtuse triangle", &tri);
    let hex = &generate(&GeneratorConfig::new(6), 1, 7).unwrap()[0];
    show("random hexagon (seed 7)", hex);
}
