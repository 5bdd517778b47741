//! Triangular meshes of cracked planar domains.
//!
//! A [`Triangulation`] is a conforming mesh that resolves all crack and guide
//! polylines by edges. [`Mesh::cut`] turns it into a mesh of Ω∖S by duplicating
//! the nodes along the crack faces: the original node keeps the plus face, a new
//! node is appended for the minus face. Tip nodes stay single-valued.

mod builder;
pub mod geometry;
mod index;
mod io;

use std::collections::HashMap;
use std::sync::Arc;

pub use builder::{build_mesh, MeshBuilder, Sizing};
pub use geometry::{build_sieve, extend_crack, CrackPath, Domain, Point, SievePattern};
pub use io::{EdgeLabel, MeshText};

use crate::error::{Error, GeometryError, Result};
use index::SegmentIndex;

/// Conforming triangulation without seams.
#[derive(Debug, Clone)]
pub struct Triangulation {
    pub domain: Domain,
    pub vertices: Vec<Point>,
    pub triangles: Vec<[usize; 3]>,
    /// Outer boundary edges, oriented counterclockwise around Ω.
    pub boundary_edges: Vec<[usize; 2]>,
    pub target_h: f64,
}

impl Triangulation {
    pub fn new(domain: Domain, vertices: Vec<Point>, triangles: Vec<[usize; 3]>, target_h: f64) -> Result<Self> {
        for (i, t) in triangles.iter().enumerate() {
            let a = signed_area(vertices[t[0]], vertices[t[1]], vertices[t[2]]);
            if !(a > 0.0) {
                return Err(Error::DegenerateTriangle { index: i, area: a });
            }
        }
        let mut count: HashMap<(usize, usize), (usize, [usize; 2])> = HashMap::new();
        for t in &triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                let e = count.entry((a.min(b), a.max(b))).or_insert((0, [a, b]));
                e.0 += 1;
            }
        }
        let mut boundary_edges: Vec<[usize; 2]> =
            count.into_values().filter(|(c, _)| *c == 1).map(|(_, e)| e).collect();
        boundary_edges.sort_unstable();
        Ok(Self { domain, vertices, triangles, boundary_edges, target_h })
    }

    /// Uniform red refinement: each triangle is split into four similar ones.
    pub fn refine(&self) -> Result<Triangulation> {
        let mut vertices = self.vertices.clone();
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, vs: &mut Vec<Point>| -> usize {
            *mid.entry((a.min(b), a.max(b))).or_insert_with(|| {
                vs.push(vs[a].lerp(vs[b], 0.5));
                vs.len() - 1
            })
        };
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        for &[a, b, c] in &self.triangles {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            triangles.push([a, ab, ca]);
            triangles.push([ab, b, bc]);
            triangles.push([ca, bc, c]);
            triangles.push([ab, bc, ca]);
        }
        Triangulation::new(self.domain, vertices, triangles, 0.5 * self.target_h)
    }

    pub fn max_edge(&self) -> f64 {
        self.triangles
            .iter()
            .flat_map(|t| (0..3).map(move |k| (t[k], t[(k + 1) % 3])))
            .map(|(a, b)| self.vertices[a].dist(self.vertices[b]))
            .fold(0.0, f64::max)
    }
}

pub fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * (b - a).cross(c - a)
}

/// Which face of the crack an element lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Plus,
    Minus,
}

/// A crack edge seen from both faces, oriented along the crack travel direction.
#[derive(Debug, Clone, PartialEq)]
pub struct CrackEdge {
    pub plus: [usize; 2],
    pub minus: [usize; 2],
    pub path: usize,
    pub plus_triangle: usize,
    pub minus_triangle: usize,
    pub length: f64,
    /// Unit normal pointing from the minus face into the plus face.
    pub normal: Point,
    pub midpoint: Point,
    /// Arc-length of the edge midpoint along its path.
    pub arc: f64,
}

impl CrackEdge {
    pub fn nodes(&self, side: Side) -> [usize; 2] {
        match side {
            Side::Plus => self.plus,
            Side::Minus => self.minus,
        }
    }

    pub fn triangle(&self, side: Side) -> usize {
        match side {
            Side::Plus => self.plus_triangle,
            Side::Minus => self.minus_triangle,
        }
    }
}

/// Mesh of Ω∖S with duplicated seam nodes.
#[derive(Debug, Clone)]
pub struct Mesh {
    base: Arc<Triangulation>,
    cracks: Vec<CrackPath>,
    allow_spanning: bool,
    node_vertex: Vec<usize>,
    triangles: Vec<[usize; 3]>,
    seam_pairs: Vec<(usize, usize)>,
    tip_nodes: Vec<usize>,
    crack_edges: Vec<CrackEdge>,
    boundary_edges: Vec<[usize; 2]>,
    sample_points: Vec<Point>,
    h: f64,
}

impl Mesh {
    /// Cuts `base` along `cracks`, which must be resolved by its edges.
    pub fn cut(base: Arc<Triangulation>, cracks: &[CrackPath], allow_spanning: bool) -> Result<Mesh> {
        let diam = base.domain.diameter();
        let tol = 1e-9 * base.target_h.min(diam);
        let vtx = &base.vertices;

        for c in cracks {
            c.validate()?;
            for p in c.points() {
                let d = base.domain.inner_distance(p);
                let end = c.endpoints().contains(&p);
                if !(d > tol || (allow_spanning && end && d.abs() <= tol)) {
                    return Err(GeometryError::TouchesBoundary { x: p.x, y: p.y }.into());
                }
            }
        }

        // crack segments with their path, segment index and starting arc-length
        let mut segs = Vec::new();
        let mut seg_info = Vec::new();
        for (k, c) in cracks.iter().enumerate() {
            let mut acc = 0.0;
            for (j, (a, b)) in c.segments().into_iter().enumerate() {
                segs.push((a, b));
                seg_info.push((k, j, acc));
                acc += a.dist(b);
            }
        }
        let index = SegmentIndex::new(segs.clone(), base.target_h.max(1e-3 * diam));

        // vertex -> list of (segment id, parameter)
        let mut on_seg: HashMap<usize, Vec<(usize, f64)>> = HashMap::new();
        if !segs.is_empty() {
            for (v, p) in vtx.iter().enumerate() {
                for s in index.near(*p, tol) {
                    let (a, b) = segs[s];
                    let (d, t) = geometry::point_segment_distance(*p, a, b);
                    if d <= tol {
                        on_seg.entry(v).or_default().push((s, t));
                    }
                }
            }
        }

        // geometric edge -> adjacent triangles
        let mut edge_tris: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (ti, t) in base.triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                edge_tris.entry((a.min(b), a.max(b))).or_default().push(ti);
            }
        }

        struct Raw {
            p: usize,
            q: usize,
            seg: usize,
            t_mid: f64,
        }
        let mut raw: Vec<Raw> = Vec::new();
        for &(a, b) in edge_tris.keys() {
            let (Some(la), Some(lb)) = (on_seg.get(&a), on_seg.get(&b)) else { continue };
            let common = la
                .iter()
                .filter_map(|&(s, ta)| lb.iter().find(|(s2, _)| *s2 == s).map(|&(_, tb)| (s, ta, tb)))
                .next();
            if let Some((s, ta, tb)) = common {
                let (p, q) = if ta < tb { (a, b) } else { (b, a) };
                raw.push(Raw { p, q, seg: s, t_mid: 0.5 * (ta + tb) });
            }
        }
        raw.sort_by(|x, y| x.seg.cmp(&y.seg).then(x.t_mid.total_cmp(&y.t_mid)));

        let mut found = vec![0.0; cracks.len()];
        for r in &raw {
            found[seg_info[r.seg].0] += vtx[r.p].dist(vtx[r.q]);
        }
        for (k, c) in cracks.iter().enumerate() {
            let expected = c.length();
            if (found[k] - expected).abs() > 1e-9 * expected {
                return Err(GeometryError::NotResolved { found: found[k], expected }.into());
            }
        }

        // plus/minus triangle per crack edge
        let mut crack_set: HashMap<(usize, usize), usize> = HashMap::new();
        let mut sides: Vec<(usize, usize)> = Vec::with_capacity(raw.len());
        for (ei, r) in raw.iter().enumerate() {
            let tris = &edge_tris[&(r.p.min(r.q), r.p.max(r.q))];
            if tris.len() != 2 {
                let p = vtx[r.p];
                return Err(GeometryError::TouchesBoundary { x: p.x, y: p.y }.into());
            }
            let d = vtx[r.q] - vtx[r.p];
            let mut plus = None;
            let mut minus = None;
            for &ti in tris {
                let third = base.triangles[ti].iter().copied().find(|&v| v != r.p && v != r.q).unwrap();
                if d.cross(vtx[third] - vtx[r.p]) > 0.0 {
                    plus = Some(ti);
                } else {
                    minus = Some(ti);
                }
            }
            let (Some(tp), Some(tm)) = (plus, minus) else {
                return Err(GeometryError::Degenerate("crack edge without two faces".into()).into());
            };
            sides.push((tp, tm));
            crack_set.insert((r.p.min(r.q), r.p.max(r.q)), ei);
        }

        // vertex -> incident triangles
        let mut vtris: Vec<Vec<usize>> = vec![Vec::new(); vtx.len()];
        for (ti, t) in base.triangles.iter().enumerate() {
            for &v in t {
                vtris[v].push(ti);
            }
        }
        let mut crack_vertices: Vec<usize> = raw.iter().flat_map(|r| [r.p, r.q]).collect();
        crack_vertices.sort_unstable();
        crack_vertices.dedup();

        // node id of (triangle, vertex) corners that differ from the vertex id
        let mut corner: HashMap<(usize, usize), usize> = HashMap::new();
        let mut node_vertex: Vec<usize> = (0..vtx.len()).collect();
        let mut seam_pairs = Vec::new();
        let mut tip_nodes = Vec::new();
        for &v in &crack_vertices {
            let tris = &vtris[v];
            let mut parent: Vec<usize> = (0..tris.len()).collect();
            fn find(p: &mut [usize], i: usize) -> usize {
                let mut r = i;
                while p[r] != r {
                    r = p[r];
                }
                let mut c = i;
                while p[c] != r {
                    let n = p[c];
                    p[c] = r;
                    c = n;
                }
                r
            }
            for (li, &ti) in tris.iter().enumerate() {
                for &w in base.triangles[ti].iter().filter(|&&w| w != v) {
                    let key = (v.min(w), v.max(w));
                    if crack_set.contains_key(&key) {
                        continue;
                    }
                    for (lj, &tj) in tris.iter().enumerate() {
                        if tj != ti && base.triangles[tj].contains(&w) {
                            let (ra, rb) = (find(&mut parent, li), find(&mut parent, lj));
                            if ra != rb {
                                parent[ra.max(rb)] = ra.min(rb);
                            }
                        }
                    }
                }
            }
            let mut roots: Vec<usize> = (0..tris.len()).map(|i| find(&mut parent, i)).collect();
            let mut uniq = roots.clone();
            uniq.sort_unstable();
            uniq.dedup();
            match uniq.len() {
                1 => tip_nodes.push(v),
                2 => {
                    // the plus component keeps v
                    let mut plus_root = None;
                    for (ei, r) in raw.iter().enumerate() {
                        if r.p != v && r.q != v {
                            continue;
                        }
                        let lp = tris.iter().position(|&t| t == sides[ei].0).unwrap();
                        let lm = tris.iter().position(|&t| t == sides[ei].1).unwrap();
                        let (rp, rm) = (roots[lp], roots[lm]);
                        if rp == rm || plus_root.is_some_and(|x| x != rp) {
                            return Err(GeometryError::Junction(v).into());
                        }
                        plus_root = Some(rp);
                    }
                    let plus_root = plus_root.unwrap();
                    let minus_id = node_vertex.len();
                    node_vertex.push(v);
                    seam_pairs.push((v, minus_id));
                    for (li, &ti) in tris.iter().enumerate() {
                        if roots[li] != plus_root {
                            corner.insert((ti, v), minus_id);
                        }
                    }
                }
                _ => return Err(GeometryError::Junction(v).into()),
            }
            roots.clear();
        }

        let node_of = |ti: usize, v: usize| corner.get(&(ti, v)).copied().unwrap_or(v);
        let triangles: Vec<[usize; 3]> = base
            .triangles
            .iter()
            .enumerate()
            .map(|(ti, t)| t.map(|v| node_of(ti, v)))
            .collect();

        let crack_edges: Vec<CrackEdge> = raw
            .iter()
            .zip(&sides)
            .map(|(r, &(tp, tm))| {
                let (a, b) = (vtx[r.p], vtx[r.q]);
                let (k, j, acc) = seg_info[r.seg];
                let _ = j;
                let seg_start = segs[r.seg].0;
                let mid = a.lerp(b, 0.5);
                CrackEdge {
                    plus: [node_of(tp, r.p), node_of(tp, r.q)],
                    minus: [node_of(tm, r.p), node_of(tm, r.q)],
                    path: k,
                    plus_triangle: tp,
                    minus_triangle: tm,
                    length: a.dist(b),
                    normal: (b - a).normalized().perp(),
                    midpoint: mid,
                    arc: acc + seg_start.dist(mid),
                }
            })
            .collect();

        let boundary_edges: Vec<[usize; 2]> = base
            .boundary_edges
            .iter()
            .map(|&[a, b]| {
                let ti = edge_tris[&(a.min(b), a.max(b))][0];
                [node_of(ti, a), node_of(ti, b)]
            })
            .collect();

        let mut mesh = Mesh {
            h: base.max_edge(),
            base,
            cracks: cracks.to_vec(),
            allow_spanning,
            node_vertex,
            triangles,
            seam_pairs,
            tip_nodes,
            crack_edges,
            boundary_edges,
            sample_points: Vec::new(),
        };
        mesh.sample_points = mesh.compute_sample_points();
        Ok(mesh)
    }

    fn compute_sample_points(&self) -> Vec<Point> {
        let mut pts: Vec<Point> = (0..self.n_nodes()).map(|i| self.node(i)).collect();
        let mut on_seam = vec![false; self.n_nodes()];
        for &(p, m) in &self.seam_pairs {
            on_seam[p] = true;
            on_seam[m] = true;
        }
        let mut acc = vec![(Point::default(), 0usize); self.n_nodes()];
        for t in &self.triangles {
            let c = (self.node(t[0]) + self.node(t[1]) + self.node(t[2])) * (1.0 / 3.0);
            for &n in t {
                if on_seam[n] {
                    acc[n].0 = acc[n].0 + c;
                    acc[n].1 += 1;
                }
            }
        }
        for (n, (sum, cnt)) in acc.into_iter().enumerate() {
            if cnt > 0 {
                let c = sum * (1.0 / cnt as f64);
                let d = c - pts[n];
                pts[n] = pts[n] + d.normalized() * (1e-9 * self.h);
            }
        }
        pts
    }

    /// Re-cuts the same triangulation along different cracks.
    pub fn recut(&self, cracks: &[CrackPath]) -> Result<Mesh> {
        Mesh::cut(self.base.clone(), cracks, self.allow_spanning)
    }

    /// Uniform refinement preserving the seam and tips.
    pub fn refine(&self) -> Result<Mesh> {
        Mesh::cut(Arc::new(self.base.refine()?), &self.cracks, self.allow_spanning)
    }

    pub fn base(&self) -> &Arc<Triangulation> {
        &self.base
    }

    pub fn domain(&self) -> &Domain {
        &self.base.domain
    }

    pub fn cracks(&self) -> &[CrackPath] {
        &self.cracks
    }

    pub fn n_nodes(&self) -> usize {
        self.node_vertex.len()
    }

    pub fn node(&self, i: usize) -> Point {
        self.base.vertices[self.node_vertex[i]]
    }

    /// Geometric vertex shared by all copies of a node.
    pub fn vertex_of(&self, i: usize) -> usize {
        self.node_vertex[i]
    }

    pub fn n_vertices(&self) -> usize {
        self.base.vertices.len()
    }

    /// Evaluation point of a node, nudged into its own face for seam copies.
    pub fn sample_point(&self, i: usize) -> Point {
        self.sample_points[i]
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        self.triangles[t].map(|n| self.node(n))
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        signed_area(a, b, c)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.area(t)).sum()
    }

    pub fn seam_pairs(&self) -> &[(usize, usize)] {
        &self.seam_pairs
    }

    pub fn tip_nodes(&self) -> &[usize] {
        &self.tip_nodes
    }

    pub fn crack_edges(&self) -> &[CrackEdge] {
        &self.crack_edges
    }

    /// Outer boundary edges (node ids), oriented counterclockwise.
    pub fn boundary_edges(&self) -> &[[usize; 2]] {
        &self.boundary_edges
    }

    pub fn boundary_nodes(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.boundary_edges.iter().flatten().copied().collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn crack_length(&self) -> f64 {
        self.crack_edges.iter().map(|e| e.length).sum()
    }

    /// Edge labels: each crack edge appears once per face.
    pub fn tagged_edges(&self) -> Vec<([usize; 2], EdgeLabel)> {
        let mut out: Vec<([usize; 2], EdgeLabel)> =
            self.boundary_edges.iter().map(|e| (*e, EdgeLabel::OuterBoundary)).collect();
        for e in &self.crack_edges {
            out.push((e.plus, EdgeLabel::CrackPlus));
            out.push((e.minus, EdgeLabel::CrackMinus));
        }
        out
    }

    /// Connected components of Ω∖S: per-triangle label and count.
    pub fn components(&self) -> (usize, Vec<usize>) {
        let mut edge_tris: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (ti, t) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                edge_tris.entry((a.min(b), a.max(b))).or_default().push(ti);
            }
        }
        let nt = self.triangles.len();
        let mut label = vec![usize::MAX; nt];
        let mut count = 0;
        for start in 0..nt {
            if label[start] != usize::MAX {
                continue;
            }
            let mut stack = vec![start];
            label[start] = count;
            while let Some(t) = stack.pop() {
                let tri = self.triangles[t];
                for k in 0..3 {
                    let (a, b) = (tri[k], tri[(k + 1) % 3]);
                    for &o in &edge_tris[&(a.min(b), a.max(b))] {
                        if label[o] == usize::MAX {
                            label[o] = count;
                            stack.push(o);
                        }
                    }
                }
            }
            count += 1;
        }
        (count, label)
    }

    /// Node-to-triangle incidence.
    pub fn node_triangles(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_nodes()];
        for (ti, t) in self.triangles.iter().enumerate() {
            for &n in t {
                out[n].push(ti);
            }
        }
        out
    }

    /// Undirected node-node edges of the triangulation, sorted.
    pub fn edges(&self) -> Vec<[usize; 2]> {
        let mut e: Vec<[usize; 2]> = self
            .triangles
            .iter()
            .flat_map(|t| (0..3).map(move |k| [t[k].min(t[(k + 1) % 3]), t[k].max(t[(k + 1) % 3])]))
            .collect();
        e.sort_unstable();
        e.dedup();
        e
    }

    /// Whether two meshes share the same underlying triangulation.
    pub fn same_triangulation(&self, other: &Mesh) -> bool {
        Arc::ptr_eq(&self.base, &other.base)
    }
}
