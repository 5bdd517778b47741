//! Constrained Delaunay triangulation of a domain with embedded polylines.
//!
//! Points come from an equilateral lattice (optionally thinned by a sizing
//! function) plus the subdivided constraint polylines; spade performs the
//! constrained triangulation and the quality refinement.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use spade::{
    AngleLimit, ConstrainedDelaunayTriangulation, Point2, RefinementParameters, Triangulation as _,
};

use super::geometry::{point_segment_distance, segments_intersect, CrackPath, Domain, Point};
use super::index::SegmentIndex;
use super::{Mesh, Triangulation};
use crate::error::{Error, GeometryError, Result};

/// Target element size as a function of position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Sizing {
    Uniform { h: f64 },
    /// `h(p) = min(h_max, h_min + growth · max(0, d(p, focus) − plateau))`.
    Graded { h_min: f64, h_max: f64, growth: f64, plateau: f64, focus: Vec<(Point, Point)> },
}

impl Sizing {
    pub fn uniform(h: f64) -> Self {
        Sizing::Uniform { h }
    }

    pub fn at(&self, p: Point) -> f64 {
        match self {
            Sizing::Uniform { h } => *h,
            Sizing::Graded { h_min, h_max, growth, plateau, focus } => {
                let d = focus
                    .iter()
                    .map(|(a, b)| point_segment_distance(p, *a, *b).0)
                    .fold(f64::INFINITY, f64::min);
                let d = if d.is_finite() { d } else { 0.0 };
                (h_min + growth * (d - plateau).max(0.0)).min(*h_max)
            }
        }
    }

    pub fn h_min(&self) -> f64 {
        match self {
            Sizing::Uniform { h } => *h,
            Sizing::Graded { h_min, .. } => *h_min,
        }
    }

    pub fn h_max(&self) -> f64 {
        match self {
            Sizing::Uniform { h } => *h,
            Sizing::Graded { h_max, .. } => *h_max,
        }
    }

    fn validate(&self) -> std::result::Result<(), GeometryError> {
        let (lo, hi) = (self.h_min(), self.h_max());
        if !(lo > 0.0) || !lo.is_finite() || !(hi >= lo) || !hi.is_finite() {
            return Err(GeometryError::InvalidSize(lo));
        }
        if let Sizing::Graded { growth, plateau, .. } = self {
            if !(*growth > 0.0) || !(*plateau >= 0.0) {
                return Err(GeometryError::InvalidSize(*growth));
            }
        }
        Ok(())
    }
}

/// Mesh generator configuration.
#[derive(Debug, Clone)]
pub struct MeshBuilder {
    domain: Domain,
    sizing: Sizing,
    cracks: Vec<CrackPath>,
    guides: Vec<CrackPath>,
    allow_spanning: bool,
    anchor: Option<(Point, Point)>,
    min_angle_deg: f64,
}

const EDGE_FACTOR: f64 = 1.45;

impl MeshBuilder {
    pub fn new(domain: Domain, sizing: Sizing) -> Self {
        Self {
            domain,
            sizing,
            cracks: Vec::new(),
            guides: Vec::new(),
            allow_spanning: false,
            anchor: None,
            min_angle_deg: 25.0,
        }
    }

    pub fn crack(mut self, c: CrackPath) -> Self {
        self.cracks.push(c);
        self
    }

    pub fn cracks(mut self, cs: impl IntoIterator<Item = CrackPath>) -> Self {
        self.cracks.extend(cs);
        self
    }

    /// Adds a polyline that is resolved by mesh edges without being cut.
    pub fn guide(mut self, g: CrackPath) -> Self {
        self.guides.push(g);
        self
    }

    pub fn guides(mut self, gs: impl IntoIterator<Item = CrackPath>) -> Self {
        self.guides.extend(gs);
        self
    }

    /// Allows open cracks whose endpoints lie on ∂Ω (through-cracks).
    pub fn spanning(mut self, allow: bool) -> Self {
        self.allow_spanning = allow;
        self
    }

    /// Fixes the lattice origin and its first axis direction.
    pub fn anchor(mut self, origin: Point, direction: Point) -> Self {
        self.anchor = Some((origin, direction));
        self
    }

    pub fn build(&self) -> Result<Mesh> {
        let base = self.triangulate()?;
        Mesh::cut(base, &self.cracks, self.allow_spanning)
    }

    /// Conforming triangulation resolving boundary, cracks and guides (no seam yet).
    pub fn triangulate(&self) -> Result<Arc<Triangulation>> {
        self.domain.validate()?;
        self.sizing.validate()?;
        let diam = self.domain.diameter();
        let tol = 1e-10 * diam;

        for c in &self.cracks {
            c.validate()?;
            check_inside(c, &self.domain, self.allow_spanning, tol)?;
        }
        for g in &self.guides {
            g.validate()?;
            check_inside(g, &self.domain, true, tol)?;
        }
        for i in 0..self.cracks.len() {
            for j in (i + 1)..self.cracks.len() {
                if self.cracks[i].intersects(&self.cracks[j]) {
                    return Err(GeometryError::CracksIntersect(i, j).into());
                }
            }
        }

        let boundary = self.domain.boundary_polygon(self.boundary_h());
        let mut polylines: Vec<Vec<(Point, Point)>> = Vec::new();
        polylines.push(closed_segments(&boundary));
        for p in self.cracks.iter().chain(&self.guides) {
            polylines.push(p.segments());
        }

        // breakpoints: every polyline vertex
        let mut pool = PointPool::new(tol);
        for segs in &polylines {
            for (a, b) in segs {
                pool.insert(*a);
                pool.insert(*b);
            }
        }
        let breaks = pool.points.clone();

        let mut prims: Vec<[usize; 2]> = Vec::new();
        for segs in &polylines {
            for &(a, b) in segs {
                let mut ts: Vec<f64> = breaks
                    .iter()
                    .filter_map(|&q| {
                        let (d, t) = point_segment_distance(q, a, b);
                        (d <= tol && t > 1e-12 && t < 1.0 - 1e-12).then_some(t)
                    })
                    .collect();
                ts.push(0.0);
                ts.push(1.0);
                ts.sort_by(f64::total_cmp);
                ts.dedup_by(|x, y| (*x - *y).abs() < 1e-12);
                for w in ts.windows(2) {
                    let i = pool.insert(a.lerp(b, w[0]));
                    let j = pool.insert(a.lerp(b, w[1]));
                    if i != j {
                        prims.push([i.min(j), i.max(j)]);
                    }
                }
            }
        }
        prims.sort_unstable();
        prims.dedup();

        for i in 0..prims.len() {
            let [a0, a1] = prims[i];
            for j in (i + 1)..prims.len() {
                let [b0, b1] = prims[j];
                if a0 == b0 || a0 == b1 || a1 == b0 || a1 == b1 {
                    continue;
                }
                let (p1, p2, q1, q2) = (pool.points[a0], pool.points[a1], pool.points[b0], pool.points[b1]);
                if p1.x.max(p2.x) + tol < q1.x.min(q2.x)
                    || q1.x.max(q2.x) + tol < p1.x.min(p2.x)
                    || p1.y.max(p2.y) + tol < q1.y.min(q2.y)
                    || q1.y.max(q2.y) + tol < p1.y.min(p2.y)
                {
                    continue;
                }
                if segments_intersect(p1, p2, q1, q2, tol) {
                    return Err(GeometryError::Triangulation(format!(
                        "constraint segments intersect near ({:.6}, {:.6})",
                        p1.x, p1.y
                    ))
                    .into());
                }
            }
        }

        // subdivide primitives
        let mut verts: Vec<Point> = pool.points.clone();
        let mut edges: Vec<[usize; 2]> = Vec::new();
        let mut constraint_segs: Vec<(Point, Point)> = Vec::new();
        for &[i, j] in &prims {
            let (a, b) = (pool.points[i], pool.points[j]);
            constraint_segs.push((a, b));
            let len = a.dist(b);
            let hloc = (0..=10)
                .map(|k| self.sizing.at(a.lerp(b, k as f64 / 10.0)))
                .fold(f64::INFINITY, f64::min);
            let n = ((len / hloc) - 1e-9).ceil().max(1.0) as usize;
            let mut prev = i;
            for k in 1..n {
                verts.push(a.lerp(b, k as f64 / n as f64));
                let cur = verts.len() - 1;
                edges.push([prev, cur]);
                prev = cur;
            }
            edges.push([prev, j]);
        }

        // lattice seeding
        let h0 = self.sizing.h_min();
        let cell = self.sizing.h_max().max(h0);
        let index = SegmentIndex::new(constraint_segs, cell);
        let (origin, dir) = self.anchor.unwrap_or_else(|| {
            self.guides
                .iter()
                .chain(&self.cracks)
                .next()
                .map(|c| {
                    let s = c.segments()[0];
                    (s.0, s.1 - s.0)
                })
                .unwrap_or((boundary[0], Point::new(1.0, 0.0)))
        });
        let e1 = dir.normalized() * h0;
        let e2 = Point::new(
            e1.x * 0.5 - e1.y * 3f64.sqrt() / 2.0,
            e1.x * 3f64.sqrt() / 2.0 + e1.y * 0.5,
        );
        let det = e1.cross(e2);
        let to_lat = |p: Point| {
            let d = p - origin;
            (d.cross(e2) / det, e1.cross(d) / det)
        };
        let (mut imin, mut imax, mut jmin, mut jmax) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for q in &boundary {
            let (i, j) = to_lat(*q);
            imin = imin.min(i);
            imax = imax.max(i);
            jmin = jmin.min(j);
            jmax = jmax.max(j);
        }
        let bsegs = closed_segments(&boundary);
        let bindex = SegmentIndex::new(bsegs, cell);
        for j in (jmin.floor() as i64 - 1)..=(jmax.ceil() as i64 + 1) {
            for i in (imin.floor() as i64 - 1)..=(imax.ceil() as i64 + 1) {
                let p = origin + e1 * i as f64 + e2 * j as f64;
                if self.domain_polygon_distance(p, &boundary) <= 0.0 {
                    continue;
                }
                let hp = self.sizing.at(p);
                let level = (hp / h0 * (1.0 + 1e-9)).log2().floor().max(0.0) as u32;
                let step = 1i64 << level.min(30);
                if i.rem_euclid(step) != 0 || j.rem_euclid(step) != 0 {
                    continue;
                }
                let keep = 0.5 * hp;
                if bindex.min_distance(p) <= keep || index.min_distance(p) <= keep {
                    continue;
                }
                verts.push(p);
            }
        }

        let spade_pts: Vec<Point2<f64>> = verts.iter().map(|p| Point2::new(p.x, p.y)).collect();
        let mut cdt: ConstrainedDelaunayTriangulation<Point2<f64>> =
            ConstrainedDelaunayTriangulation::bulk_load_cdt(spade_pts, edges)
                .map_err(|e| GeometryError::Triangulation(format!("{e:?}")))?;
        if cdt.num_vertices() != verts.len() {
            return Err(GeometryError::Triangulation("duplicate vertices".into()).into());
        }

        let params = || {
            RefinementParameters::<f64>::new()
                .with_angle_limit(AngleLimit::from_deg(self.min_angle_deg))
                .with_max_additional_vertices(20 * verts.len() + 1000)
        };
        let mut converged = false;
        for _ in 0..40 {
            cdt.refine(params());
            let mut inserts = Vec::new();
            for f in cdt.inner_faces() {
                let vs = f.vertices().map(|v| {
                    let p = v.position();
                    Point::new(p.x, p.y)
                });
                let c = (vs[0] + vs[1] + vs[2]) * (1.0 / 3.0);
                let lmax = vs[0].dist(vs[1]).max(vs[1].dist(vs[2])).max(vs[2].dist(vs[0]));
                if lmax > EDGE_FACTOR * self.sizing.at(c) {
                    inserts.push(c);
                }
            }
            if inserts.is_empty() {
                converged = true;
                break;
            }
            for c in inserts {
                cdt.insert(Point2::new(c.x, c.y))
                    .map_err(|e| GeometryError::Triangulation(format!("{e:?}")))?;
            }
        }
        if !converged {
            return Err(GeometryError::Triangulation("size refinement did not converge".into()).into());
        }

        let vertices: Vec<Point> = cdt
            .vertices()
            .map(|v| {
                let p = v.position();
                Point::new(p.x, p.y)
            })
            .collect();
        let mut triangles = Vec::with_capacity(cdt.num_inner_faces());
        for f in cdt.inner_faces() {
            let [a, b, c] = f.vertices().map(|v| v.fix().index());
            triangles.push([a, b, c]);
        }
        Ok(Arc::new(Triangulation::new(
            self.domain,
            vertices,
            triangles,
            self.sizing.h_max(),
        )?))
    }

    fn boundary_h(&self) -> f64 {
        match self.domain {
            Domain::Disk { center, radius } => {
                let n = 64;
                (0..n)
                    .map(|k| {
                        let a = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                        self.sizing.at(center + Point::new(a.cos(), a.sin()) * radius)
                    })
                    .fold(f64::INFINITY, f64::min)
            }
            _ => self.sizing.h_min(),
        }
    }

    fn domain_polygon_distance(&self, p: Point, poly: &[Point]) -> f64 {
        // convex CCW polygon: minimum signed distance to edge lines
        let n = poly.len();
        (0..n)
            .map(|i| {
                let (a, b) = (poly[i], poly[(i + 1) % n]);
                (b - a).cross(p - a) / a.dist(b)
            })
            .fold(f64::INFINITY, f64::min)
    }
}

fn closed_segments(poly: &[Point]) -> Vec<(Point, Point)> {
    (0..poly.len()).map(|i| (poly[i], poly[(i + 1) % poly.len()])).collect()
}

fn check_inside(c: &CrackPath, domain: &Domain, spanning: bool, tol: f64) -> std::result::Result<(), GeometryError> {
    let pts = c.points();
    let ends = c.endpoints();
    for p in &pts {
        let d = domain.inner_distance(*p);
        let is_end = ends.iter().any(|e| e == p);
        if spanning && is_end && d.abs() <= tol {
            continue;
        }
        if d <= tol {
            return Err(GeometryError::TouchesBoundary { x: p.x, y: p.y });
        }
    }
    if let Domain::Disk { .. } = domain {
        // a spanning endpoint must lie on the polygonal surrogate, which differs from the circle
        if spanning && ends.iter().any(|e| domain.inner_distance(*e).abs() <= tol) {
            return Err(GeometryError::Degenerate("through-cracks need a polygonal domain".into()));
        }
    }
    Ok(())
}

struct PointPool {
    tol: f64,
    points: Vec<Point>,
}

impl PointPool {
    fn new(tol: f64) -> Self {
        Self { tol, points: Vec::new() }
    }

    fn insert(&mut self, p: Point) -> usize {
        if let Some(i) = self.points.iter().position(|q| q.dist(p) <= self.tol) {
            return i;
        }
        self.points.push(p);
        self.points.len() - 1
    }
}

/// Uniform mesh of `domain` with an optional crack resolved by mesh edges.
pub fn build_mesh(domain: Domain, crack: Option<CrackPath>, target_h: f64) -> Result<Mesh> {
    if !(target_h > 0.0) || !target_h.is_finite() {
        return Err(Error::Geometry(GeometryError::InvalidSize(target_h)));
    }
    MeshBuilder::new(domain, Sizing::uniform(target_h)).cracks(crack).build()
}
