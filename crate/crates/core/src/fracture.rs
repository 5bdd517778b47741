//! Crack-tip quantities: total energy, stress-intensity fit, energy-release rate and the tip slope bound.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fem::{gradient_energy, Field};
use crate::mesh::{CrackPath, Point};
use crate::slope::{lumped_distance, velocity_norm};
use crate::solvers::FamilyMember;

/// `‖∇u‖² + Σ length(S)`.
pub fn energy(u: &Field, cracks: &[CrackPath]) -> f64 {
    gradient_energy(u) + cracks.iter().map(CrackPath::length).sum::<f64>()
}

/// Polar frame at a crack tip; `θ = ±π` on the crack faces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TipFrame {
    pub tip: Point,
    /// Unit vector pointing from the crack into the material.
    pub direction: Point,
}

impl TipFrame {
    pub fn new(tip: Point, direction: Point) -> Result<Self> {
        let n = direction.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidProblem("tip direction must be nonzero".into()));
        }
        Ok(Self { tip, direction: direction * (1.0 / n) })
    }

    /// Frame at the first endpoint `a` of a segment crack `[a, b]`.
    pub fn at_first_endpoint(crack: &CrackPath) -> Result<Self> {
        match crack {
            CrackPath::Segment { a, b } => Self::new(*a, *a - *b),
            _ => Err(Error::InvalidProblem("tip frame needs a segment".into())),
        }
    }

    /// `(ρ, θ)` with `θ ∈ (−π, π]`.
    pub fn polar(&self, p: Point) -> (f64, f64) {
        let d = p - self.tip;
        let rho = d.norm();
        let theta = self.direction.cross(d).atan2(self.direction.dot(d));
        (rho, if theta == -PI { PI } else { theta })
    }

    /// `√(2ρ/π) sin(θ/2)`.
    pub fn singular(&self, p: Point) -> f64 {
        let (rho, theta) = self.polar(p);
        (2.0 * rho / PI).sqrt() * (0.5 * theta).sin()
    }
}

/// Harmonic field on ℝ²∖[a,b] with zero flux on both faces, behaving like
/// `κ√(2ρ/π) sin(θ/2)` at `a`, plus `background · (distance along the crack from its midpoint)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlitField {
    pub a: Point,
    pub b: Point,
    pub kappa: f64,
    pub background: f64,
}

impl SlitField {
    pub fn new(crack: &CrackPath, kappa: f64, background: f64) -> Result<Self> {
        match crack {
            CrackPath::Segment { a, b } => Ok(Self { a: *a, b: *b, kappa, background }),
            _ => Err(Error::InvalidProblem("slit field needs a segment".into())),
        }
    }

    fn local(&self, p: Point) -> (Complex64, f64) {
        let m = self.a.lerp(self.b, 0.5);
        let t = (self.a - self.b).normalized();
        let d = p - m;
        (Complex64::new(d.dot(t), t.cross(d)), 0.5 * self.a.dist(self.b))
    }

    /// `Im(√(z−c)·√(z+c))` in the crack frame (principal branches).
    fn w(&self, p: Point) -> Complex64 {
        let (z, c) = self.local(p);
        (z - c).sqrt() * (z + c).sqrt()
    }

    pub fn value(&self, p: Point) -> f64 {
        let (z, c) = self.local(p);
        self.kappa / (PI * c).sqrt() * self.w(p).im + self.background * z.re
    }

    /// Gradient in global coordinates.
    pub fn gradient(&self, p: Point) -> Point {
        let (z, c) = self.local(p);
        let t = (self.a - self.b).normalized();
        let n = t.perp();
        // d/dz √(z²−c²) = z / √(z²−c²); ∇Im g = (Im g', Re g') in the local frame
        let g = self.w(p);
        let dg = z / g;
        let s = self.kappa / (PI * c).sqrt();
        let gx = s * dg.im + self.background;
        let gy = s * dg.re;
        t * gx + n * gy
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SifEstimate {
    pub kappa: f64,
    pub window: (f64, f64),
    pub fit_residual: f64,
    pub n_nodes: usize,
}

/// Least-squares fit of nodal values with `ρ ∈ [ρ_min, ρ_max]` against
/// `{√(2ρ/π) sin(θ/2), 1, ρ cos θ, ρ sin θ}`.
pub fn extract_sif(u: &Field, frame: &TipFrame, window: (f64, f64)) -> Result<SifEstimate> {
    let (rmin, rmax) = window;
    if !(rmin > 0.0 && rmax > rmin) {
        return Err(Error::Fit(format!("invalid window ({rmin}, {rmax})")));
    }
    let mesh = u.mesh();
    let mut ata = [[0.0f64; 4]; 4];
    let mut atb = [0.0f64; 4];
    let mut rows = Vec::new();
    for i in 0..mesh.n_nodes() {
        let p = mesh.sample_point(i);
        let (rho, theta) = frame.polar(p);
        if rho < rmin || rho > rmax {
            continue;
        }
        let phi = [
            (2.0 * rho / PI).sqrt() * (0.5 * theta).sin(),
            1.0,
            rho * theta.cos(),
            rho * theta.sin(),
        ];
        let y = u.values()[i];
        for r in 0..4 {
            for c in 0..4 {
                ata[r][c] += phi[r] * phi[c];
            }
            atb[r] += phi[r] * y;
        }
        rows.push((phi, y));
    }
    if rows.len() < 12 {
        return Err(Error::Fit(format!("only {} nodes in window", rows.len())));
    }
    let coef = solve4(ata, atb).ok_or_else(|| Error::Fit("singular normal equations".into()))?;
    let ss: f64 = rows
        .iter()
        .map(|(phi, y)| {
            let fit: f64 = phi.iter().zip(&coef).map(|(a, b)| a * b).sum();
            (fit - y).powi(2)
        })
        .sum();
    Ok(SifEstimate { kappa: coef[0], window, fit_residual: (ss / rows.len() as f64).sqrt(), n_nodes: rows.len() })
}

fn solve4(mut a: [[f64; 4]; 4], mut b: [f64; 4]) -> Option<[f64; 4]> {
    // column scaling keeps the elimination well conditioned
    let scale: Vec<f64> = (0..4).map(|c| a[c][c].sqrt().max(1e-300)).collect();
    for r in 0..4 {
        for c in 0..4 {
            a[r][c] /= scale[r] * scale[c];
        }
        b[r] /= scale[r];
    }
    for k in 0..4 {
        let piv = (k..4).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))?;
        if a[piv][k].abs() < 1e-13 {
            return None;
        }
        a.swap(k, piv);
        b.swap(k, piv);
        for i in (k + 1)..4 {
            let f = a[i][k] / a[k][k];
            for j in k..4 {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = [0.0; 4];
    for k in (0..4).rev() {
        let s: f64 = ((k + 1)..4).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    for (v, s) in x.iter_mut().zip(&scale) {
        *v /= s;
    }
    Some(x)
}

/// One family sample: extension, elastic energy and crack length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FamilyPoint {
    pub s: f64,
    pub elastic: f64,
    pub length: f64,
}

impl FamilyPoint {
    pub fn from_member(m: &FamilyMember) -> Self {
        Self { s: m.s, elastic: gradient_energy(m.field()), length: m.crack.length() }
    }

    pub fn total(&self) -> f64 {
        self.elastic + self.length
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReleaseRate {
    pub df_ds: f64,
    pub delastic_ds: f64,
    pub step: f64,
}

/// Second-order one-sided derivatives at `s = 0` from samples at `0, h_s, 2h_s`.
pub fn energy_release_rate(family: &[FamilyPoint]) -> Result<ReleaseRate> {
    if family.len() < 3 {
        return Err(Error::InvalidProblem("need three family members".into()));
    }
    let (p0, p1, p2) = (family[0], family[1], family[2]);
    let hs = p1.s - p0.s;
    if p0.s != 0.0 || !(hs > 0.0) || ((p2.s - p1.s) - hs).abs() > 1e-9 * hs {
        return Err(Error::InvalidProblem("family must be sampled at 0, h_s, 2h_s".into()));
    }
    let d = |e0: f64, e1: f64, e2: f64| (-3.0 * e0 + 4.0 * e1 - e2) / (2.0 * hs);
    Ok(ReleaseRate {
        df_ds: d(p0.total(), p1.total(), p2.total()),
        delastic_ds: d(p0.elastic, p1.elastic, p2.elastic),
        step: hs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TipBound {
    /// `(κ²−1)⁺/‖u̇(0)‖`; `+∞` when the velocity vanishes and `|κ| > 1`.
    pub value: f64,
    pub velocity_norm: f64,
}

/// `(κ²−1)⁺ / ‖u̇(0)‖`, the velocity from the family members at `h_s` and `2h_s`.
pub fn tip_slope_bound(family: &[FamilyMember], kappa: f64) -> Result<TipBound> {
    if family.len() < 3 {
        return Err(Error::InvalidProblem("need three family members".into()));
    }
    let u0 = family[0].field();
    let d1 = lumped_distance(family[1].field(), u0)? / family[1].s;
    let d2 = lumped_distance(family[2].field(), u0)? / family[2].s;
    let v = velocity_norm(d1, d2);
    let excess = (kappa * kappa - 1.0).max(0.0);
    let value = if excess == 0.0 {
        0.0
    } else if v > 0.0 {
        excess / v
    } else {
        f64::INFINITY
    };
    Ok(TipBound { value, velocity_norm: v })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_angles() {
        let f = TipFrame::new(Point::new(0.0, 0.0), Point::new(1.0, 0.0)).unwrap();
        assert_eq!(f.polar(Point::new(2.0, 0.0)), (2.0, 0.0));
        let (_, t) = f.polar(Point::new(-1.0, 0.0));
        assert_eq!(t, PI);
        let (_, t) = f.polar(Point::new(0.0, 1.0));
        assert!((t - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn slit_field_matches_tip_expansion() {
        let crack = CrackPath::segment(Point::new(0.3, 0.5), Point::new(0.7, 0.5));
        let sf = SlitField::new(&crack, 1.3, 0.0).unwrap();
        let frame = TipFrame::at_first_endpoint(&crack).unwrap();
        for &(r, th) in &[(1e-6f64, 0.5f64), (1e-6, 3.0), (1e-6, -2.5)] {
            let p = frame.tip + Point::new(-th.cos(), -th.sin()) * r;
            let (rho, theta) = frame.polar(p);
            let expected = 1.3 * (2.0 * rho / PI).sqrt() * (theta / 2.0).sin();
            assert!((sf.value(p) - expected).abs() < 1e-3 * expected.abs().max(1e-9), "{theta}");
        }
    }

    #[test]
    fn slit_field_gradient_is_consistent() {
        let crack = CrackPath::segment(Point::new(0.3, 0.45), Point::new(0.7, 0.55));
        let sf = SlitField::new(&crack, 0.7, 1.0).unwrap();
        let p = Point::new(0.2, 0.8);
        let h = 1e-6;
        let g = sf.gradient(p);
        let gx = (sf.value(p + Point::new(h, 0.0)) - sf.value(p - Point::new(h, 0.0))) / (2.0 * h);
        let gy = (sf.value(p + Point::new(0.0, h)) - sf.value(p - Point::new(0.0, h))) / (2.0 * h);
        assert!((g.x - gx).abs() < 1e-6 && (g.y - gy).abs() < 1e-6);
    }

    #[test]
    fn positive_part_of_bound() {
        let v = velocity_norm(1.0, 1.5);
        assert_eq!(v, 0.5);
        assert_eq!(velocity_norm(1.0, 3.0), 1.0);
    }
}
