//! Plain-text mesh format.
//!
//! ```text
//! nodes N triangles T seams P
//! <id> <x> <y>            (N lines)
//! <id> <n1> <n2> <n3>     (T lines)
//! <plus_id> <minus_id>    (P lines)
//! edge <n1> <n2> <label>  (remaining lines)
//! ```

use std::fmt::Write as _;
use std::str::FromStr;

use super::{Mesh, Point};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeLabel {
    OuterBoundary,
    CrackPlus,
    CrackMinus,
}

impl EdgeLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            EdgeLabel::OuterBoundary => "outer_boundary",
            EdgeLabel::CrackPlus => "crack_plus",
            EdgeLabel::CrackMinus => "crack_minus",
        }
    }
}

impl FromStr for EdgeLabel {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "outer_boundary" => Ok(EdgeLabel::OuterBoundary),
            "crack_plus" => Ok(EdgeLabel::CrackPlus),
            "crack_minus" => Ok(EdgeLabel::CrackMinus),
            other => Err(format!("unknown edge label {other}")),
        }
    }
}

/// Flat mesh data as stored in the text format.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshText {
    pub nodes: Vec<Point>,
    pub triangles: Vec<[usize; 3]>,
    pub seams: Vec<(usize, usize)>,
    pub edges: Vec<([usize; 2], EdgeLabel)>,
}

impl MeshText {
    pub fn from_mesh(m: &Mesh) -> Self {
        Self {
            nodes: (0..m.n_nodes()).map(|i| m.node(i)).collect(),
            triangles: m.triangles().to_vec(),
            seams: m.seam_pairs().to_vec(),
            edges: m.tagged_edges(),
        }
    }

    pub fn write(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "nodes {} triangles {} seams {}", self.nodes.len(), self.triangles.len(), self.seams.len());
        for (i, p) in self.nodes.iter().enumerate() {
            let _ = writeln!(s, "{i} {:?} {:?}", p.x, p.y);
        }
        for (i, t) in self.triangles.iter().enumerate() {
            let _ = writeln!(s, "{i} {} {} {}", t[0], t[1], t[2]);
        }
        for (p, m) in &self.seams {
            let _ = writeln!(s, "{p} {m}");
        }
        for (e, l) in &self.edges {
            let _ = writeln!(s, "edge {} {} {}", e[0], e[1], l.as_str());
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let perr = |line: usize, msg: &str| Error::Parse { line: line + 1, msg: msg.to_string() };
        let (l0, header) = lines.next().ok_or_else(|| perr(0, "empty input"))?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 6 || h[0] != "nodes" || h[2] != "triangles" || h[4] != "seams" {
            return Err(perr(l0, "bad header"));
        }
        let num = |s: &str, line: usize| s.parse::<usize>().map_err(|_| perr(line, "bad integer"));
        let (n, t, p) = (num(h[1], l0)?, num(h[3], l0)?, num(h[5], l0)?);
        let mut out = MeshText { nodes: Vec::with_capacity(n), triangles: Vec::with_capacity(t), seams: Vec::new(), edges: Vec::new() };
        for k in 0..n {
            let (li, l) = lines.next().ok_or_else(|| perr(usize::MAX - 1, "missing node line"))?;
            let f: Vec<&str> = l.split_whitespace().collect();
            if f.len() != 3 || num(f[0], li)? != k {
                return Err(perr(li, "bad node line"));
            }
            let x = f[1].parse::<f64>().map_err(|_| perr(li, "bad coordinate"))?;
            let y = f[2].parse::<f64>().map_err(|_| perr(li, "bad coordinate"))?;
            out.nodes.push(Point::new(x, y));
        }
        for k in 0..t {
            let (li, l) = lines.next().ok_or_else(|| perr(usize::MAX - 1, "missing triangle line"))?;
            let f: Vec<&str> = l.split_whitespace().collect();
            if f.len() != 4 || num(f[0], li)? != k {
                return Err(perr(li, "bad triangle line"));
            }
            let tri = [num(f[1], li)?, num(f[2], li)?, num(f[3], li)?];
            if tri.iter().any(|&v| v >= n) {
                return Err(perr(li, "node index out of range"));
            }
            out.triangles.push(tri);
        }
        for _ in 0..p {
            let (li, l) = lines.next().ok_or_else(|| perr(usize::MAX - 1, "missing seam line"))?;
            let f: Vec<&str> = l.split_whitespace().collect();
            if f.len() != 2 {
                return Err(perr(li, "bad seam line"));
            }
            out.seams.push((num(f[0], li)?, num(f[1], li)?));
        }
        for (li, l) in lines {
            let f: Vec<&str> = l.split_whitespace().collect();
            if f.len() != 4 || f[0] != "edge" {
                return Err(perr(li, "bad edge line"));
            }
            let label = f[3].parse::<EdgeLabel>().map_err(|e| perr(li, &e))?;
            out.edges.push(([num(f[1], li)?, num(f[2], li)?], label));
        }
        Ok(out)
    }
}
