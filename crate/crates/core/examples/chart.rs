//! One chart: the rectangles with vertices on four fixed lines. For the
//! side lines of a square the conic degenerates into two crossing lines.
//!
//! cargo run --example chart

use pegtrace::chart::{Chart, EdgeQuadruple, Segment};
use pegtrace::geom::{Point, Polygon};

fn main() {
    let seg = |ax: f64, ay: f64, dx: f64, dy: f64| Segment { anchor: Point::new(ax, ay), dir: Point::new(dx, dy), len: 2.0 };
    let quad = EdgeQuadruple::from_segments([
        seg(0.0, 0.0, 1.0, 0.0),
        seg(2.0, 0.0, 0.0, 1.0),
        seg(0.0, 2.0, 1.0, 0.0),
        seg(0.0, 0.0, 0.0, 1.0),
    ]);
    let ch = Chart::build(quad).unwrap();
    println!("square side lines: {:?}, hyperplane c = {:?}", ch.kind, ch.c);
    for (k, branch) in ch.components(5).unwrap().iter().enumerate() {
        println!("branch {k}:");
        for q in branch {
            println!("  t = ({:.3}, {:.3}, {:.3})  X = {:.4}  Y = {:.4}", q.t[0], q.t[1], q.t[2], q.rect.x, q.rect.y);
        }
    }

    let pent = Polygon::new(vec![
        Point::new(0.0, 0.0),
        Point::new(3.0, -0.4),
        Point::new(4.2, 1.5),
        Point::new(2.0, 3.1),
        Point::new(-0.6, 1.9),
    ])
    .unwrap();
    for idx in [[0, 1, 2, 3], [0, 0, 2, 4], [1, 2, 3, 4]] {
        match Chart::build(EdgeQuadruple::from_polygon(&pent, idx)) {
            Ok(ch) => println!("pentagon edges {idx:?}: {:?}", ch.kind),
            Err(e) => println!("pentagon edges {idx:?}: {e}"),
        }
    }
}
