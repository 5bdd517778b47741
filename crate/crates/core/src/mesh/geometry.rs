//! Planar primitives: points, domains, crack paths and sieve patterns.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::GeometryError;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Point) -> f64 {
        (self - o).norm()
    }

    /// Counterclockwise rotation by 90 degrees.
    pub fn perp(self) -> Point {
        Point::new(-self.y, self.x)
    }

    pub fn normalized(self) -> Point {
        let n = self.norm();
        Point::new(self.x / n, self.y / n)
    }

    pub fn lerp(self, o: Point, t: f64) -> Point {
        Point::new(self.x + (o.x - self.x) * t, self.y + (o.y - self.y) * t)
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

/// Distance from `p` to the segment `[a, b]` and the clamped parameter of the foot point.
pub fn point_segment_distance(p: Point, a: Point, b: Point) -> (f64, f64) {
    let d = b - a;
    let l2 = d.dot(d);
    if l2 == 0.0 {
        return (p.dist(a), 0.0);
    }
    let t = ((p - a).dot(d) / l2).clamp(0.0, 1.0);
    (p.dist(a + d * t), t)
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b - a).cross(c - a)
}

/// Proper or touching intersection test for closed segments.
pub fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point, tol: f64) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    let sp = (p2 - p1).norm().max(1e-300);
    let sq = (q2 - q1).norm().max(1e-300);
    let s = |v: f64, len: f64| {
        if v.abs() <= tol * len {
            0
        } else if v > 0.0 {
            1
        } else {
            -1
        }
    };
    let (o1, o2, o3, o4) = (s(d1, sq), s(d2, sq), s(d3, sp), s(d4, sp));
    if o1 * o2 < 0 && o3 * o4 < 0 {
        return true;
    }
    let on = |p: Point, a: Point, b: Point| point_segment_distance(p, a, b).0 <= tol;
    on(p1, q1, q2) || on(p2, q1, q2) || on(q1, p1, p2) || on(q2, p1, p2)
}

/// The computational domain Ω. All supported kinds are convex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    UnitSquare,
    Disk { center: Point, radius: f64 },
    Rectangle { x0: f64, y0: f64, x1: f64, y1: f64 },
}

impl Domain {
    pub fn rectangle(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Domain::Rectangle { x0, y0, x1, y1 }
    }

    pub fn disk(center: Point, radius: f64) -> Self {
        Domain::Disk { center, radius }
    }

    pub fn area(&self) -> f64 {
        match *self {
            Domain::UnitSquare => 1.0,
            Domain::Disk { radius, .. } => PI * radius * radius,
            Domain::Rectangle { x0, y0, x1, y1 } => (x1 - x0) * (y1 - y0),
        }
    }

    pub fn diameter(&self) -> f64 {
        match *self {
            Domain::UnitSquare => 2f64.sqrt(),
            Domain::Disk { radius, .. } => 2.0 * radius,
            Domain::Rectangle { x0, y0, x1, y1 } => (x1 - x0).hypot(y1 - y0),
        }
    }

    /// Signed distance to the boundary, positive inside.
    pub fn inner_distance(&self, p: Point) -> f64 {
        match *self {
            Domain::UnitSquare => Domain::rectangle(0.0, 0.0, 1.0, 1.0).inner_distance(p),
            Domain::Disk { center, radius } => radius - p.dist(center),
            Domain::Rectangle { x0, y0, x1, y1 } => {
                (p.x - x0).min(x1 - p.x).min(p.y - y0).min(y1 - p.y)
            }
        }
    }

    pub fn contains(&self, p: Point) -> bool {
        self.inner_distance(p) > 0.0
    }

    /// Counterclockwise boundary polygon. Disks are replaced by an inscribed regular
    /// polygon whose chord error is at most `h²` and whose sides do not exceed `h`.
    pub fn boundary_polygon(&self, h: f64) -> Vec<Point> {
        match *self {
            Domain::UnitSquare => Domain::rectangle(0.0, 0.0, 1.0, 1.0).boundary_polygon(h),
            Domain::Rectangle { x0, y0, x1, y1 } => vec![
                Point::new(x0, y0),
                Point::new(x1, y0),
                Point::new(x1, y1),
                Point::new(x0, y1),
            ],
            Domain::Disk { center, radius } => {
                circle_vertices(center, radius, circle_sides(radius, h).max(8))
            }
        }
    }

    pub(crate) fn validate(&self) -> Result<(), GeometryError> {
        let ok = match *self {
            Domain::UnitSquare => true,
            Domain::Disk { radius, .. } => radius > 0.0 && radius.is_finite(),
            Domain::Rectangle { x0, y0, x1, y1 } => x1 > x0 && y1 > y0,
        };
        if ok {
            Ok(())
        } else {
            Err(GeometryError::Degenerate("empty domain".into()))
        }
    }
}

/// Number of sides of an inscribed polygon with chord error ≤ h² and side ≤ h.
pub fn circle_sides(radius: f64, h: f64) -> usize {
    let by_side = (2.0 * PI * radius / h).ceil();
    let sag = (h * h / radius).min(1.0);
    let by_sag = (PI / (1.0 - sag).acos()).ceil();
    by_side.max(by_sag).max(3.0) as usize
}

fn circle_vertices(center: Point, radius: f64, n: usize) -> Vec<Point> {
    (0..n)
        .map(|i| {
            let a = 2.0 * PI * i as f64 / n as f64;
            center + Point::new(a.cos(), a.sin()) * radius
        })
        .collect()
}

/// An oriented crack curve. The plus face lies to the left of the travel direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CrackPath {
    Segment { a: Point, b: Point },
    Polyline { points: Vec<Point> },
    ClosedPolygon { points: Vec<Point> },
    CircleApprox { center: Point, radius: f64, n_sides: usize },
}

impl CrackPath {
    pub fn segment(a: Point, b: Point) -> Self {
        CrackPath::Segment { a, b }
    }

    /// Circle surrogate resolved at mesh size `h`.
    pub fn circle(center: Point, radius: f64, h: f64) -> Self {
        CrackPath::CircleApprox { center, radius, n_sides: circle_sides(radius, h) }
    }

    /// Closed polygonal realization of `{x : d(x, [a,b]) = r}`, traversed counterclockwise.
    pub fn stadium(a: Point, b: Point, r: f64, h: f64) -> Self {
        let t = (b - a).normalized();
        let nrm = t.perp();
        let n_cap = (circle_sides(r, h) / 2).max(4);
        let base = nrm.y.atan2(nrm.x);
        let mut pts = Vec::with_capacity(2 * n_cap + 2);
        // cap around b from -n to +n, then cap around a from +n to -n
        for i in 0..=n_cap {
            let ang = base - PI + PI * i as f64 / n_cap as f64;
            pts.push(b + Point::new(ang.cos(), ang.sin()) * r);
        }
        for i in 0..=n_cap {
            let ang = base + PI * i as f64 / n_cap as f64;
            pts.push(a + Point::new(ang.cos(), ang.sin()) * r);
        }
        CrackPath::ClosedPolygon { points: pts }
    }

    pub fn is_closed(&self) -> bool {
        matches!(self, CrackPath::ClosedPolygon { .. } | CrackPath::CircleApprox { .. })
    }

    /// Vertex list; closed paths do not repeat the first vertex.
    pub fn points(&self) -> Vec<Point> {
        match self {
            CrackPath::Segment { a, b } => vec![*a, *b],
            CrackPath::Polyline { points } | CrackPath::ClosedPolygon { points } => points.clone(),
            CrackPath::CircleApprox { center, radius, n_sides } => {
                circle_vertices(*center, *radius, *n_sides)
            }
        }
    }

    /// Consecutive vertex pairs in travel order.
    pub fn segments(&self) -> Vec<(Point, Point)> {
        let p = self.points();
        let mut out: Vec<(Point, Point)> = p.windows(2).map(|w| (w[0], w[1])).collect();
        if self.is_closed() && p.len() > 2 {
            out.push((p[p.len() - 1], p[0]));
        }
        out
    }

    pub fn length(&self) -> f64 {
        self.segments().iter().map(|(a, b)| a.dist(*b)).sum()
    }

    /// Endpoints of an open path.
    pub fn endpoints(&self) -> Vec<Point> {
        if self.is_closed() {
            return Vec::new();
        }
        let p = self.points();
        vec![p[0], p[p.len() - 1]]
    }

    /// Endpoints lying in the interior of `domain`.
    pub fn tips(&self, domain: &Domain) -> Vec<Point> {
        let tol = 1e-12 * domain.diameter();
        self.endpoints()
            .into_iter()
            .filter(|p| domain.inner_distance(*p) > tol)
            .collect()
    }

    /// Point at arc length `s` from the start.
    pub fn point_at(&self, s: f64) -> Point {
        let mut acc = 0.0;
        let segs = self.segments();
        for (a, b) in &segs {
            let l = a.dist(*b);
            if s <= acc + l {
                return a.lerp(*b, ((s - acc) / l).clamp(0.0, 1.0));
            }
            acc += l;
        }
        segs.last().map(|(_, b)| *b).unwrap_or_default()
    }

    /// Open sub-path between arc lengths `s0 < s1` (measured from the start vertex).
    pub fn sub_arc(&self, s0: f64, s1: f64) -> CrackPath {
        let mut pts = vec![self.point_at(s0)];
        let mut acc = 0.0;
        for (a, b) in self.segments() {
            acc += a.dist(b);
            if acc > s0 && acc < s1 {
                pts.push(b);
            }
        }
        pts.push(self.point_at(s1));
        pts.dedup_by(|x, y| x.dist(*y) < 1e-14);
        if pts.len() == 2 {
            CrackPath::Segment { a: pts[0], b: pts[1] }
        } else {
            CrackPath::Polyline { points: pts }
        }
    }

    pub(crate) fn validate(&self) -> Result<(), GeometryError> {
        let p = self.points();
        let min_pts = if self.is_closed() { 3 } else { 2 };
        if p.len() < min_pts {
            return Err(GeometryError::Degenerate("too few vertices".into()));
        }
        if p.iter().any(|q| !q.x.is_finite() || !q.y.is_finite()) {
            return Err(GeometryError::Degenerate("non-finite vertex".into()));
        }
        let segs = self.segments();
        let scale = segs.iter().map(|(a, b)| a.dist(*b)).fold(0.0, f64::max);
        if segs.iter().any(|(a, b)| a.dist(*b) <= 1e-12 * scale.max(1e-300)) {
            return Err(GeometryError::Degenerate("zero-length segment".into()));
        }
        let tol = 1e-12 * scale;
        let n = segs.len();
        for i in 0..n {
            for j in (i + 1)..n {
                let adjacent = j == i + 1 || (self.is_closed() && i == 0 && j == n - 1);
                let (p1, p2) = segs[i];
                let (q1, q2) = segs[j];
                if adjacent {
                    // adjacent segments may only share their common vertex
                    let shared = if j == i + 1 { p2 } else { p1 };
                    let other_i = if j == i + 1 { p1 } else { p2 };
                    let other_j = if j == i + 1 { q2 } else { q1 };
                    let back = (p2 - p1).normalized().dot((q2 - q1).normalized()) < -1.0 + 1e-12;
                    if back
                        || point_segment_distance(other_j, p1, p2).0 <= tol
                        || point_segment_distance(other_i, q1, q2).0 <= tol
                    {
                        return Err(GeometryError::SelfIntersecting);
                    }
                    let _ = shared;
                } else if segments_intersect(p1, p2, q1, q2, tol) {
                    return Err(GeometryError::SelfIntersecting);
                }
            }
        }
        Ok(())
    }

    pub(crate) fn intersects(&self, other: &CrackPath) -> bool {
        let a = self.segments();
        let b = other.segments();
        let scale = self.length().max(other.length());
        a.iter().any(|(p1, p2)| {
            b.iter()
                .any(|(q1, q2)| segments_intersect(*p1, *p2, *q1, *q2, 1e-12 * scale))
        })
    }
}

/// Collinear extension of a segment by `s` beyond its first endpoint `a`.
pub fn extend_crack(crack: &CrackPath, s: f64, domain: &Domain) -> Result<CrackPath, GeometryError> {
    let (a, b) = match crack {
        CrackPath::Segment { a, b } => (*a, *b),
        _ => return Err(GeometryError::Degenerate("extension needs a segment".into())),
    };
    if !(s >= 0.0) || !s.is_finite() {
        return Err(GeometryError::Degenerate(format!("extension length {s}")));
    }
    if s == 0.0 {
        return Ok(crack.clone());
    }
    let t = (b - a).normalized();
    let a2 = a - t * s;
    if domain.inner_distance(a2) <= 0.0 {
        return Err(GeometryError::ExtensionExitsDomain(s));
    }
    Ok(CrackPath::Segment { a: a2, b })
}

/// A crack perforated by regularly spaced gaps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SievePattern {
    pub base: CrackPath,
    pub n_teeth: usize,
    pub gap_fraction: f64,
    pub teeth: Vec<CrackPath>,
}

impl SievePattern {
    pub fn teeth_length(&self) -> f64 {
        self.teeth.iter().map(CrackPath::length).sum()
    }
}

/// Splits `base` into `n_teeth` equal periods and keeps the centered `(1 − gap_fraction)` part of each.
pub fn build_sieve(base: &CrackPath, n_teeth: usize, gap_fraction: f64) -> SievePattern {
    let n = n_teeth.max(1);
    let g = gap_fraction.clamp(0.0, 1.0);
    let teeth = if g == 0.0 {
        vec![base.clone()]
    } else if g == 1.0 {
        Vec::new()
    } else {
        let period = base.length() / n as f64;
        (0..n)
            .map(|i| {
                let s0 = i as f64 * period + 0.5 * g * period;
                let s1 = (i + 1) as f64 * period - 0.5 * g * period;
                base.sub_arc(s0, s1)
            })
            .collect()
    };
    SievePattern { base: base.clone(), n_teeth: n, gap_fraction: g, teeth }
}
