#![allow(dead_code)]

use pegtrace::geom::{LabeledRectangle, Point, Polygon};

pub fn poly(v: &[(f64, f64)]) -> Polygon {
    Polygon::new(v.iter().map(|&(x, y)| Point::new(x, y)).collect()).unwrap()
}

pub fn obtuse() -> Polygon {
    poly(&[(0.0, 0.0), (4.0, 0.0), (1.0, 1.0)])
}

/// The obtuse triangle's rectangle family.
pub fn family(h: f64) -> LabeledRectangle {
    LabeledRectangle::new([
        Point::new(h, 0.0),
        Point::new(4.0 - 3.0 * h, 0.0),
        Point::new(4.0 - 3.0 * h, h),
        Point::new(h, h),
    ])
}

/// Distance from `r` to the family, any labeling, by golden-section search on `h`.
pub fn distance_to_family(r: &LabeledRectangle) -> f64 {
    let mut best = f64::INFINITY;
    for k in 0..4 {
        let q = r.shifted(k);
        let f = |h: f64| family(h).distance(&q);
        let (mut a, mut b) = (0.0f64, 1.0f64);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..200 {
            let (c, d) = (b - g * (b - a), a + g * (b - a));
            if f(c) < f(d) {
                b = d;
            } else {
                a = c;
            }
        }
        best = best.min(f(0.5 * (a + b)));
    }
    best
}

/// Side midpoint chord of a thin rectangle: the long axis, endpoints ordered.
pub fn long_axis(r: &LabeledRectangle) -> (Point, Point) {
    let v = r.v;
    let (a, b) = if r.x >= r.y {
        ((v[0] + v[3]) * 0.5, (v[1] + v[2]) * 0.5)
    } else {
        ((v[0] + v[1]) * 0.5, (v[2] + v[3]) * 0.5)
    };
    if (a.x, a.y) <= (b.x, b.y) {
        (a, b)
    } else {
        (b, a)
    }
}

pub fn chord_distance(a: (Point, Point), b: (Point, Point)) -> f64 {
    (a.0.dist(b.0) + a.1.dist(b.1)).min(a.0.dist(b.1) + a.1.dist(b.0))
}
