//! Exact P1 norms, including distances between fields on different cuts of one triangulation.

use super::assembly::lumped_mass;
use super::field::{barycentric_gradients, Field};
use crate::error::{Error, Result};

/// `∫_T (Σ eᵢλᵢ)² = |T|/12 · (Σ eᵢ² + (Σ eᵢ)²)`.
fn p1_square(area: f64, e: [f64; 3]) -> f64 {
    let s = e[0] + e[1] + e[2];
    area / 12.0 * (e[0] * e[0] + e[1] * e[1] + e[2] * e[2] + s * s)
}

pub fn l2_norm(v: &Field) -> f64 {
    let m = v.mesh();
    let x = v.values();
    (0..m.triangles().len())
        .map(|t| p1_square(m.area(t), m.triangles()[t].map(|n| x[n])))
        .sum::<f64>()
        .sqrt()
}

pub fn l2_norm_lumped(v: &Field) -> Result<f64> {
    let d = lumped_mass(v.mesh())?;
    Ok(v.values().iter().zip(&d).map(|(x, m)| m * x * x).sum::<f64>().sqrt())
}

/// `‖∇v‖²` over Ω∖S.
pub fn gradient_energy(v: &Field) -> f64 {
    let m = v.mesh();
    (0..m.triangles().len()).map(|t| m.area(t) * v.gradient(t).dot(v.gradient(t))).sum()
}

pub fn h1_seminorm(v: &Field) -> f64 {
    gradient_energy(v).sqrt()
}

pub fn h1_norm(v: &Field) -> f64 {
    (gradient_energy(v) + l2_norm(v).powi(2)).sqrt()
}

/// L² and H¹-seminorm of `u − v` for fields on cuts of the same triangulation.
pub fn matched_distance(u: &Field, v: &Field) -> Result<(f64, f64)> {
    let (mu, mv) = (u.mesh(), v.mesh());
    if !mu.same_triangulation(mv) {
        return Err(Error::MeshMismatch);
    }
    let (xu, xv) = (u.values(), v.values());
    let mut l2 = 0.0;
    let mut h1 = 0.0;
    for t in 0..mu.triangles().len() {
        let (tu, tv) = (mu.triangles()[t], mv.triangles()[t]);
        let e = [xu[tu[0]] - xv[tv[0]], xu[tu[1]] - xv[tv[1]], xu[tu[2]] - xv[tv[2]]];
        let a = mu.area(t);
        l2 += p1_square(a, e);
        let g = barycentric_gradients(mu.triangle_points(t));
        let ge = g[0] * e[0] + g[1] * e[1] + g[2] * e[2];
        h1 += a * ge.dot(ge);
    }
    Ok((l2.sqrt(), h1.sqrt()))
}
