//! Helpers shared by the experiment runners.

use std::sync::Arc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::result::Row;
use crate::error::Result;
use crate::fem::{CrackMeasure, SolveOptions};
use crate::mesh::{CrackPath, Domain, Mesh, MeshBuilder, Point, Sizing};
use crate::solvers::{BoundaryCondition, BoundaryData, ProblemSpec, Solution, Source};

/// Independent stream for case `index` under `seed`.
pub fn rng_for(seed: u64, index: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(index);
    r
}

/// Least-squares slope of `log e` against `log h`.
pub fn fitted_order(h: &[f64], e: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> =
        h.iter().zip(e).filter(|(h, e)| **h > 0.0 && **e > 0.0).map(|(h, e)| (h.ln(), e.ln())).collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Mesh statistics appended to every row.
pub fn mesh_stats(row: Row, mesh: &Mesh) -> Row {
    row.with("n_nodes", mesh.n_nodes()).with("n_triangles", mesh.triangles().len()).with("h_max_edge", mesh.h())
}

pub struct Stopwatch(Instant);

impl Stopwatch {
    pub fn start() -> Self {
        Self(Instant::now())
    }

    pub fn seconds(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

/// Vertical spanning crack `x = 1/2` of the unit square, traversed downwards so the plus face is `x > 1/2`.
pub fn vertical_crack() -> CrackPath {
    CrackPath::segment(Point::new(0.5, 1.0), Point::new(0.5, 0.0))
}

/// `u = 0` on `x = 0`, `u = 1` on `x = 1`, zero flux on the horizontal sides.
pub fn slab_boundary() -> BoundaryData {
    BoundaryData::empty()
        .with(|p| p.x < 1e-12, BoundaryCondition::dirichlet(|_| 0.0))
        .with(|p| p.x > 1.0 - 1e-12, BoundaryCondition::dirichlet(|_| 1.0))
        .with(|p| p.x >= 1e-12 && p.x <= 1.0 - 1e-12, BoundaryCondition::NeumannZero)
}

/// Unit square cut by the vertical spanning crack at size `h`, plus the base triangulation guides.
pub fn slab_mesh(h: f64, guides: Vec<CrackPath>) -> Result<Arc<Mesh>> {
    let m = MeshBuilder::new(Domain::UnitSquare, Sizing::uniform(h))
        .crack(vertical_crack())
        .guides(guides)
        .spanning(true)
        .anchor(Point::new(0.5, 0.0), Point::new(0.0, 1.0))
        .build()?;
    Ok(Arc::new(m))
}

/// Transmission solve on the slab geometry.
pub fn slab_transmission(mesh: &Arc<Mesh>, source: Source, beta: f64, tol: f64) -> Result<Solution> {
    let mu = CrackMeasure::constant(mesh, beta);
    let mut spec = ProblemSpec::new(mesh.clone(), source, slab_boundary()).transmission(mu);
    spec.options = SolveOptions::with_tol(tol);
    crate::solvers::solve_transmission(&spec)
}

/// Length-weighted mean of per-edge values.
pub fn edge_mean(mesh: &Mesh, v: &[f64]) -> f64 {
    let (mut s, mut l) = (0.0, 0.0);
    for (e, x) in mesh.crack_edges().iter().zip(v) {
        s += e.length * x;
        l += e.length;
    }
    if l > 0.0 {
        s / l
    } else {
        0.0
    }
}

/// Relative difference `|a − b| / |b|` (absolute when `b = 0`).
pub fn rel(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        (a - b).abs()
    } else {
        ((a - b) / b).abs()
    }
}
