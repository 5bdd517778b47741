//! Jumps and normal fluxes across crack faces.

use super::field::Field;
use crate::mesh::Side;

/// Jump `[v] = v⁺ − v⁻` at the two endpoints of every crack edge (zero at tips).
#[derive(Debug, Clone, PartialEq)]
pub struct CrackJump {
    pub per_edge: Vec<[f64; 2]>,
    /// One value per seam pair, in mesh order.
    pub per_pair: Vec<f64>,
}

impl CrackJump {
    pub fn midpoint(&self, e: usize) -> f64 {
        0.5 * (self.per_edge[e][0] + self.per_edge[e][1])
    }
}

pub fn jump_trace(v: &Field) -> CrackJump {
    let m = v.mesh();
    let x = v.values();
    let per_edge = m
        .crack_edges()
        .iter()
        .map(|e| [x[e.plus[0]] - x[e.minus[0]], x[e.plus[1]] - x[e.minus[1]]])
        .collect();
    let per_pair = m.seam_pairs().iter().map(|&(p, q)| x[p] - x[q]).collect();
    CrackJump { per_edge, per_pair }
}

/// Per-edge `∇v·n` from the triangle adjacent on `side`, `n` pointing into the plus face.
pub fn flux_on_crack(v: &Field, side: Side) -> Vec<f64> {
    v.mesh()
        .crack_edges()
        .iter()
        .map(|e| v.gradient(e.triangle(side)).dot(e.normal))
        .collect()
}

/// Mean of the two face fluxes per edge.
pub fn mean_flux(v: &Field) -> Vec<f64> {
    flux_on_crack(v, Side::Plus)
        .into_iter()
        .zip(flux_on_crack(v, Side::Minus))
        .map(|(a, b)| 0.5 * (a + b))
        .collect()
}
