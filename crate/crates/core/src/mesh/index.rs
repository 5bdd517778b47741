//! Uniform-grid bucketing of segments for proximity queries.

use std::collections::HashMap;

use super::geometry::{point_segment_distance, Point};

pub(crate) struct SegmentIndex {
    cell: f64,
    segs: Vec<(Point, Point)>,
    grid: HashMap<(i64, i64), Vec<usize>>,
}

impl SegmentIndex {
    pub fn new(segs: Vec<(Point, Point)>, cell: f64) -> Self {
        let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        let key = |v: f64| (v / cell).floor() as i64;
        for (i, (a, b)) in segs.iter().enumerate() {
            let (x0, x1) = (key(a.x.min(b.x)), key(a.x.max(b.x)));
            let (y0, y1) = (key(a.y.min(b.y)), key(a.y.max(b.y)));
            for cx in x0..=x1 {
                for cy in y0..=y1 {
                    grid.entry((cx, cy)).or_default().push(i);
                }
            }
        }
        Self { cell, segs, grid }
    }

    /// Indices of segments within `r` of `p`, in increasing order. Requires `r <= cell`.
    pub fn near(&self, p: Point, r: f64) -> Vec<usize> {
        let cx = (p.x / self.cell).floor() as i64;
        let cy = (p.y / self.cell).floor() as i64;
        let mut out = Vec::new();
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(list) = self.grid.get(&(cx + dx, cy + dy)) {
                    for &i in list {
                        let (a, b) = self.segs[i];
                        if point_segment_distance(p, a, b).0 <= r {
                            out.push(i);
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn min_distance(&self, p: Point) -> f64 {
        let cx = (p.x / self.cell).floor() as i64;
        let cy = (p.y / self.cell).floor() as i64;
        let mut best = f64::INFINITY;
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(list) = self.grid.get(&(cx + dx, cy + dy)) {
                    for &i in list {
                        let (a, b) = self.segs[i];
                        best = best.min(point_segment_distance(p, a, b).0);
                    }
                }
            }
        }
        best
    }
}
