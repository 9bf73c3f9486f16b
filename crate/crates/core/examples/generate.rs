//! Seeded random polygons, written as polygon JSON plus an SVG of each one's
//! diameters.
//!
//! cargo run --example generate -- [out_dir]

use pegtrace::diameters::delta_plus;
use pegtrace::generate::{generate, GeneratorConfig};
use pegtrace::report::{diameters_svg, polygon_json};

fn main() {
    let out = std::env::args().nth(1).unwrap_or_else(|| "target/generated".into());
    std::fs::create_dir_all(&out).unwrap();
    for n in 5..=9 {
        let polys = generate(&GeneratorConfig::new(n), 3, 1).unwrap();
        for (k, p) in polys.iter().enumerate() {
            let stem = format!("{out}/n{n}_{k}");
            std::fs::write(format!("{stem}.json"), polygon_json(p)).unwrap();
            std::fs::write(format!("{stem}.svg"), diameters_svg(p)).unwrap();
            println!("{stem}.json  delta_plus = {}", delta_plus(p));
        }
    }
}
