//! Bucketed nearest-neighbour queries over labeled rectangles in the
//! max-vertex metric.

use std::collections::HashMap;

use crate::geom::LabeledRectangle;

/// Hash grid keyed on the position of `R1`. Queries with radius up to the
/// cell size are exact.
#[derive(Debug, Clone)]
pub struct RectIndex {
    cell: f64,
    buckets: HashMap<(i64, i64), Vec<usize>>,
    rects: Vec<LabeledRectangle>,
}

impl RectIndex {
    pub fn new(cell: f64) -> Self {
        Self { cell, buckets: HashMap::new(), rects: vec![] }
    }

    pub fn from_rects(cell: f64, rects: impl IntoIterator<Item = LabeledRectangle>) -> Self {
        let mut idx = Self::new(cell);
        for r in rects {
            idx.insert(r);
        }
        idx
    }

    fn key(&self, r: &LabeledRectangle) -> (i64, i64) {
        ((r.v[0].x / self.cell).floor() as i64, (r.v[0].y / self.cell).floor() as i64)
    }

    pub fn insert(&mut self, r: LabeledRectangle) -> usize {
        let id = self.rects.len();
        let k = self.key(&r);
        self.buckets.entry(k).or_default().push(id);
        self.rects.push(r);
        id
    }

    pub fn len(&self) -> usize {
        self.rects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rects.is_empty()
    }

    pub fn get(&self, id: usize) -> &LabeledRectangle {
        &self.rects[id]
    }

    /// Nearest stored rectangle within `radius <= cell`, as `(id, distance)`.
    pub fn nearest_within(&self, r: &LabeledRectangle, radius: f64) -> Option<(usize, f64)> {
        let (kx, ky) = self.key(r);
        let reach = (radius / self.cell).ceil().max(1.0) as i64;
        let mut best: Option<(usize, f64)> = None;
        for dx in -reach..=reach {
            for dy in -reach..=reach {
                let Some(ids) = self.buckets.get(&(kx + dx, ky + dy)) else { continue };
                for &id in ids {
                    let d = self.rects[id].distance(r);
                    if d <= radius && best.is_none_or(|(_, b)| d < b) {
                        best = Some((id, d));
                    }
                }
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Point;

    fn sq(x: f64, y: f64) -> LabeledRectangle {
        LabeledRectangle::new([
            Point::new(x, y),
            Point::new(x + 1.0, y),
            Point::new(x + 1.0, y + 1.0),
            Point::new(x, y + 1.0),
        ])
    }

    #[test]
    fn finds_neighbours_across_cells() {
        let idx = RectIndex::from_rects(0.1, [sq(0.0, 0.0), sq(0.55, 0.0), sq(0.099, 0.0)]);
        let (id, d) = idx.nearest_within(&sq(0.101, 0.0), 0.1).unwrap();
        assert_eq!(id, 2);
        assert!(d < 0.0021);
        assert!(idx.nearest_within(&sq(0.3, 0.0), 0.1).is_none());
    }
}
