//! Element matrices with exact P1 integration.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::field::barycentric_gradients;
use super::sparse::{SparseSymMatrix, Triplets};
use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point};

/// Finite stand-in for an infinite transmission density.
pub const BETA_INF: f64 = 1e8;

/// Piecewise-constant transmission density β per crack edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrackMeasure {
    pub beta: Vec<f64>,
}

impl CrackMeasure {
    pub fn constant(mesh: &Mesh, beta: f64) -> Self {
        Self { beta: vec![beta.min(BETA_INF); mesh.crack_edges().len()] }
    }

    /// Density from a function of the edge midpoint and its arc-length position.
    pub fn from_fn(mesh: &Mesh, f: impl Fn(Point, f64) -> f64) -> Self {
        Self { beta: mesh.crack_edges().iter().map(|e| f(e.midpoint, e.arc).min(BETA_INF)).collect() }
    }

    pub fn validate(&self, mesh: &Mesh) -> Result<()> {
        if self.beta.len() != mesh.crack_edges().len() {
            return Err(Error::InvalidProblem(format!(
                "measure has {} densities for {} crack edges",
                self.beta.len(),
                mesh.crack_edges().len()
            )));
        }
        if let Some(b) = self.beta.iter().find(|b| !(**b >= 0.0) || !b.is_finite()) {
            return Err(Error::InvalidProblem(format!("invalid density {b}")));
        }
        Ok(())
    }

    /// `Σ β · edge length`.
    pub fn total_mass(&self, mesh: &Mesh) -> f64 {
        self.beta.iter().zip(mesh.crack_edges()).map(|(b, e)| b * e.length).sum()
    }
}

fn checked_area(mesh: &Mesh, t: usize) -> Result<f64> {
    let a = mesh.area(t);
    if !(a > 0.0) {
        return Err(Error::DegenerateTriangle { index: t, area: a });
    }
    Ok(a)
}

fn element_stiffness(mesh: &Mesh, t: usize) -> Result<[[f64; 3]; 3]> {
    let a = checked_area(mesh, t)?;
    let g = barycentric_gradients(mesh.triangle_points(t));
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = a * g[i].dot(g[j]);
        }
    }
    Ok(k)
}

fn assemble_local(mesh: &Mesh, local: impl Fn(usize) -> Result<[[f64; 3]; 3]> + Sync) -> Result<SparseSymMatrix> {
    let locals: Vec<[[f64; 3]; 3]> =
        (0..mesh.triangles().len()).into_par_iter().map(&local).collect::<Result<_>>()?;
    let mut trip = Triplets::new(mesh.n_nodes());
    for (t, k) in locals.iter().enumerate() {
        let tri = mesh.triangles()[t];
        for i in 0..3 {
            for j in 0..=i {
                trip.add(tri[i], tri[j], k[i][j]);
            }
        }
    }
    Ok(trip.build())
}

/// Stiffness matrix with `vᵀKv = ‖∇v‖²` on Ω∖S.
pub fn assemble_stiffness(mesh: &Mesh) -> Result<SparseSymMatrix> {
    assemble_local(mesh, |t| element_stiffness(mesh, t))
}

/// Consistent (`lumped = false`) or row-sum lumped mass matrix.
pub fn assemble_mass(mesh: &Mesh, lumped: bool) -> Result<SparseSymMatrix> {
    if lumped {
        return Ok(SparseSymMatrix::from_diagonal(&lumped_mass(mesh)?));
    }
    assemble_local(mesh, |t| {
        let a = checked_area(mesh, t)?;
        let mut m = [[a / 12.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = a / 6.0;
        }
        Ok(m)
    })
}

/// Row sums of the consistent mass matrix.
pub fn lumped_mass(mesh: &Mesh) -> Result<Vec<f64>> {
    let mut d = vec![0.0; mesh.n_nodes()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let a = checked_area(mesh, t)?;
        for &n in tri {
            d[n] += a / 3.0;
        }
    }
    Ok(d)
}

/// Mass matrix weighted by the P1 function `w`: `vᵀ M_w v = ∫ w v²`.
pub fn assemble_weighted_mass(mesh: &Mesh, w: &[f64]) -> Result<SparseSymMatrix> {
    assemble_local(mesh, |t| {
        let a = checked_area(mesh, t)?;
        let tri = mesh.triangles()[t];
        let wl = tri.map(|n| w[n]);
        let ws = wl[0] + wl[1] + wl[2];
        let mut m = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = if i == j {
                    wl[i] * a / 10.0 + (ws - wl[i]) * a / 30.0
                } else {
                    (wl[i] + wl[j]) * a / 30.0 + (ws - wl[i] - wl[j]) * a / 60.0
                };
            }
        }
        Ok(m)
    })
}

/// Crack term with `vᵀBv = Σ_e β_e ∫_e [v]² dH¹`.
pub fn assemble_crack_robin(mesh: &Mesh, mu: &CrackMeasure) -> Result<SparseSymMatrix> {
    mu.validate(mesh)?;
    let mut trip = Triplets::new(mesh.n_nodes());
    for (e, &beta) in mesh.crack_edges().iter().zip(&mu.beta) {
        if beta == 0.0 {
            continue;
        }
        let c = beta * e.length / 6.0;
        // jump at endpoint k: +plus[k] − minus[k], absent at tips
        let terms = |k: usize| -> Vec<(usize, f64)> {
            if e.plus[k] == e.minus[k] {
                Vec::new()
            } else {
                vec![(e.plus[k], 1.0), (e.minus[k], -1.0)]
            }
        };
        for a in 0..2 {
            for b in 0..2 {
                let w = if a == b { 2.0 * c } else { c };
                for &(ni, si) in &terms(a) {
                    for &(nj, sj) in &terms(b) {
                        // ordered pairs visit each off-diagonal entry twice; keep the lower one
                        if ni >= nj {
                            trip.add(ni, nj, w * si * sj);
                        }
                    }
                }
            }
        }
    }
    Ok(trip.build())
}

/// Load vector `M f_I` of the nodal interpolant of `f`.
pub fn load_vector(mesh: &Mesh, f_nodal: &[f64]) -> Result<Vec<f64>> {
    Ok(assemble_mass(mesh, false)?.matvec(f_nodal))
}
