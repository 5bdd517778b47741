//! Slope quantities: recovered source, closed-form slopes and probe quotients.
//!
//! All L² norms of nodal quantities use mass-lumped quadrature, so that the
//! directional quotient `−2(∇u|∇φ)/‖φ‖` is bounded by `2‖f_h‖` exactly
//! (Cauchy–Schwarz in the lumped inner product).

use std::collections::HashSet;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::fem::{
    assemble_stiffness, gradient_energy, h1_seminorm, jump_trace, lumped_mass, mean_flux, CrackMeasure, Field,
    BETA_INF,
};
use crate::mesh::Mesh;

/// Test space used when turning `Ku` into a source density.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TestSpace {
    /// Test functions may jump across the crack: each face row stands alone.
    JumpsOnS,
    /// Continuous test functions: plus and minus rows are summed.
    Continuous,
}

#[derive(Debug, Clone)]
pub struct RecoveredSource {
    pub field: Field,
    /// Lumped L² norm over the rows that were recovered.
    pub norm: f64,
}

/// `f_h = M_L⁻¹ K u` on rows not listed in `constrained`.
pub fn recover_f(u: &Field, space: TestSpace, constrained: &[usize]) -> Result<RecoveredSource> {
    let mesh = u.mesh();
    let ku = assemble_stiffness(mesh)?.matvec(u.values());
    let lm = lumped_mass(mesh)?;
    let n = mesh.n_nodes();
    let mut excluded = vec![false; n];
    for &i in constrained {
        excluded[i] = true;
    }
    let mut f = vec![0.0; n];
    let mut norm2 = 0.0;
    let mut partner = vec![usize::MAX; n];
    if space == TestSpace::Continuous {
        for &(p, m) in mesh.seam_pairs() {
            partner[p] = m;
            partner[m] = p;
        }
    }
    for i in 0..n {
        if excluded[i] {
            continue;
        }
        let j = partner[i];
        if j == usize::MAX {
            f[i] = ku[i] / lm[i];
            norm2 += lm[i] * f[i] * f[i];
        } else if j > i {
            if excluded[j] {
                continue;
            }
            let v = (ku[i] + ku[j]) / (lm[i] + lm[j]);
            f[i] = v;
            f[j] = v;
            norm2 += (lm[i] + lm[j]) * v * v;
        }
    }
    Ok(RecoveredSource { field: Field::new(mesh.clone(), f)?.with_label("f_recovered"), norm: norm2.sqrt() })
}

#[derive(Debug, Clone)]
pub struct SlopeReport {
    pub f_recovered: Field,
    pub two_norm_f: f64,
    pub probe_max_quotient: f64,
    pub n_probes: usize,
    pub divu_min: f64,
    pub notes: Vec<String>,
    pub h: f64,
}

impl Serialize for SlopeReport {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr<'a> {
            f_recovered: &'a [f64],
            two_norm_f: f64,
            probe_max_quotient: f64,
            n_probes: usize,
            #[serde(serialize_with = "finite_or_null")]
            divu_min: f64,
            notes: &'a [String],
            h: f64,
        }
        Repr {
            f_recovered: self.f_recovered.values(),
            two_norm_f: self.two_norm_f,
            probe_max_quotient: self.probe_max_quotient,
            n_probes: self.n_probes,
            divu_min: self.divu_min,
            notes: &self.notes,
            h: self.h,
        }
        .serialize(s)
    }
}

fn finite_or_null<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_none()
    }
}

impl SlopeReport {
    fn new(f: RecoveredSource, h: f64) -> Self {
        Self {
            two_norm_f: 2.0 * f.norm,
            f_recovered: f.field,
            probe_max_quotient: 0.0,
            n_probes: 0,
            divu_min: f64::INFINITY,
            notes: Vec::new(),
            h,
        }
    }

    /// Adds probe statistics (quotients from `slope_lower_bound_direction` or `unilateral_probe`).
    pub fn with_probes(mut self, quotients: &[f64]) -> Self {
        self.n_probes += quotients.len();
        self.probe_max_quotient = quotients.iter().copied().fold(self.probe_max_quotient, f64::max);
        self
    }
}

/// `2‖f_h‖` for a crack without tips. `reference` is the intended source, used only
/// to flag a large Euler residual.
pub fn slope_smooth(u: &Field, constrained: &[usize], reference: Option<&Field>) -> Result<SlopeReport> {
    let f = recover_f(u, TestSpace::JumpsOnS, constrained)?;
    let mut rep = SlopeReport::new(f, u.mesh().h());
    if !u.mesh().tip_nodes().is_empty() {
        rep.notes.push(format!("crack has {} tips; closed form not applicable", u.mesh().tip_nodes().len()));
    }
    if let Some(r) = reference {
        let lm = lumped_mass(u.mesh())?;
        let mut excluded = vec![false; lm.len()];
        for &i in constrained {
            excluded[i] = true;
        }
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..lm.len() {
            if !excluded[i] {
                let d = rep.f_recovered.values()[i] - r.values()[i];
                num += lm[i] * d * d;
                den += lm[i] * r.values()[i] * r.values()[i];
            }
        }
        let rel = if den > 0.0 { (num / den).sqrt() } else { num.sqrt() };
        if rel > 0.05 {
            rep.notes.push(format!("Euler residual {rel:.3e} exceeds 5%"));
        }
    }
    let flux = mean_flux(u);
    let mesh = u.mesh();
    if !flux.is_empty() {
        let rms = (flux.iter().zip(mesh.crack_edges()).map(|(q, e)| q * q * e.length).sum::<f64>()
            / mesh.crack_length())
        .sqrt();
        let scale = h1_seminorm(u) / mesh.total_area().sqrt();
        if rms > 0.1 * scale.max(1e-300) {
            rep.notes.push(format!("crack flux rms {rms:.3e} is not small"));
        }
    }
    Ok(rep)
}

/// `−2(∇u|∇φ)/‖φ‖` with the lumped norm; `φ` must vanish on `constrained`.
pub fn slope_lower_bound_direction(u: &Field, phi: &Field, constrained: &[usize]) -> Result<f64> {
    if !u.same_mesh(phi) {
        return Err(Error::MeshMismatch);
    }
    if let Some(&i) = constrained.iter().find(|&&i| phi.values()[i] != 0.0) {
        return Err(Error::InvalidProblem(format!("direction is nonzero on constrained node {i}")));
    }
    let lm = lumped_mass(u.mesh())?;
    let norm = phi.values().iter().zip(&lm).map(|(p, m)| m * p * p).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::InvalidProblem("zero direction".into()));
    }
    let ku = assemble_stiffness(u.mesh())?.matvec(u.values());
    let ip: f64 = ku.iter().zip(phi.values()).map(|(a, b)| a * b).sum();
    Ok(-2.0 * ip / norm)
}

/// Lumped-quadrature L² distance between fields on cuts of one triangulation.
pub fn lumped_distance(u: &Field, v: &Field) -> Result<f64> {
    let (mu, mv) = (u.mesh(), v.mesh());
    if !mu.same_triangulation(mv) {
        return Err(Error::MeshMismatch);
    }
    let mut s = 0.0;
    for t in 0..mu.triangles().len() {
        let (tu, tv) = (mu.triangles()[t], mv.triangles()[t]);
        let a = mu.area(t) / 3.0;
        for k in 0..3 {
            let e = u.values()[tu[k]] - v.values()[tv[k]];
            s += a * e * e;
        }
    }
    Ok(s.sqrt())
}

/// Length of the union of the crack edge sets of two cuts of one triangulation.
pub fn union_crack_length(a: &Mesh, b: &Mesh) -> Result<f64> {
    if !a.same_triangulation(b) {
        return Err(Error::MeshMismatch);
    }
    let key = |m: &Mesh, e: &crate::mesh::CrackEdge| {
        let (x, y) = (m.vertex_of(e.plus[0]), m.vertex_of(e.plus[1]));
        (x.min(y), x.max(y))
    };
    let mut seen = HashSet::new();
    let mut len = 0.0;
    for (m, e) in a.crack_edges().iter().map(|e| (a, e)).chain(b.crack_edges().iter().map(|e| (b, e))) {
        if seen.insert(key(m, e)) {
            len += e.length;
        }
    }
    Ok(len)
}

/// `F(v, S ∪ S(v))` relative to a reference mesh carrying `S`.
pub fn probe_energy(u_mesh: &Mesh, v: &Field) -> Result<f64> {
    Ok(gradient_energy(v) + union_crack_length(u_mesh, v.mesh())?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeOutcome {
    pub max_quotient: f64,
    pub quotients: Vec<f64>,
}

/// Max over `probes` of `(F(u,S) − F(v, S∪S(v)))⁺ / ‖v − u‖`.
pub fn unilateral_probe(u: &Field, probes: &[Field]) -> Result<ProbeOutcome> {
    let mu = u.mesh();
    let fu = gradient_energy(u) + mu.crack_length();
    let scale = u.max_abs().max(1.0);
    let mut quotients = Vec::with_capacity(probes.len());
    for v in probes {
        let mv = v.mesh();
        if !mu.same_triangulation(mv) {
            return Err(Error::MeshMismatch);
        }
        for (eu, ev) in mu.boundary_edges().iter().zip(mv.boundary_edges()) {
            for k in 0..2 {
                if (u.values()[eu[k]] - v.values()[ev[k]]).abs() > 1e-9 * scale {
                    return Err(Error::InvalidProblem("probe changes the boundary trace".into()));
                }
            }
        }
        let d = lumped_distance(u, v)?;
        let q = if d > 0.0 { ((fu - probe_energy(mu, v)?) / d).max(0.0) } else { 0.0 };
        quotients.push(q);
    }
    Ok(ProbeOutcome { max_quotient: quotients.iter().copied().fold(0.0, f64::max), quotients })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DivuReport {
    /// `[u]·∂u/∂n` at each crack edge midpoint.
    pub density: Vec<f64>,
    pub divu_min: f64,
}

/// Edgewise `[u]·flux`; nonnegative values certify the crack part of `|∇u|² − div(u∇u) ≤ fu`.
pub fn check_divu_inequality(u: &Field) -> DivuReport {
    let jump = jump_trace(u);
    let flux = mean_flux(u);
    let density: Vec<f64> = (0..flux.len()).map(|e| jump.midpoint(e) * flux[e]).collect();
    let divu_min = density.iter().copied().fold(f64::INFINITY, f64::min);
    DivuReport { density, divu_min }
}

/// Floors used to classify crack edges when inverting the transmission law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuFloors {
    pub jump: f64,
    pub flux: f64,
}

impl MuFloors {
    pub fn for_field(u: &Field) -> Self {
        Self { jump: 1e-8 * u.max_abs(), flux: 1e-6 * h1_seminorm(u) }
    }
}

/// Edgewise `β = flux/[u]`, `BETA_INF` for continuous edges with crossing flux, 0 when both vanish.
pub fn measure_mu_from_flux(u: &Field) -> CrackMeasure {
    measure_mu_with(u, MuFloors::for_field(u))
}

pub fn measure_mu_with(u: &Field, floors: MuFloors) -> CrackMeasure {
    let jump = jump_trace(u);
    let flux = mean_flux(u);
    let beta = (0..flux.len())
        .map(|e| {
            let j = jump.midpoint(e);
            let q = flux[e];
            if j.abs() > floors.jump {
                (q / j).clamp(0.0, BETA_INF)
            } else if q.abs() > floors.flux {
                BETA_INF
            } else {
                0.0
            }
        })
        .collect();
    CrackMeasure { beta }
}

/// `2‖f_h‖` with continuous test functions, plus the crack sign check.
pub fn relaxed_slope(u: &Field, constrained: &[usize]) -> Result<SlopeReport> {
    let f = recover_f(u, TestSpace::Continuous, constrained)?;
    let mut rep = SlopeReport::new(f, u.mesh().h());
    if !u.mesh().crack_edges().is_empty() {
        let d = check_divu_inequality(u);
        rep.divu_min = d.divu_min;
        if d.divu_min < -1e-8 {
            rep.notes.push(format!("[u]·flux reaches {:.3e} < 0", d.divu_min));
        }
    }
    Ok(rep)
}

/// Richardson extrapolation of a quantity with error `∝ h^order`.
pub fn richardson(h_coarse: f64, coarse: f64, h_fine: f64, fine: f64, order: f64) -> f64 {
    let r = (h_coarse / h_fine).powf(order);
    fine + (fine - coarse) / (r - 1.0)
}

/// Observed convergence order from two errors.
pub fn observed_order(h1: f64, e1: f64, h2: f64, e2: f64) -> f64 {
    (e1 / e2).ln() / (h1 / h2).ln()
}

/// `‖u̇(0)‖` from difference quotients `d₁` at step `s` and `d₂` at `2s`, extrapolated linearly.
pub fn velocity_norm(d1: f64, d2: f64) -> f64 {
    let x = 2.0 * d1 - d2;
    if x > 0.0 {
        x
    } else {
        d1
    }
}

/// `(arc-length, jump, mean flux)` at each crack edge midpoint.
pub fn crack_profile(u: &Field) -> Vec<(f64, f64, f64)> {
    let jump = jump_trace(u);
    let flux = mean_flux(u);
    u.mesh()
        .crack_edges()
        .iter()
        .enumerate()
        .map(|(e, ce)| (ce.arc, jump.midpoint(e), flux[e]))
        .collect()
}
