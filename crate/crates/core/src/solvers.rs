//! Boundary-value and minimization problems on cracked meshes.
//!
//! Every problem is the quadratic minimization of
//! `vᵀ(K + B_μ + cM + M_ρ/ε)v − 2 loadᵀv` over nodal vectors with prescribed
//! Dirichlet values, solved by PCG. Floating components (no Dirichlet node, no
//! mass, no transmission coupling) get a compatibility projection of the load
//! and one pinned node.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::{
    assemble_crack_robin, assemble_mass, assemble_stiffness, assemble_weighted_mass, dot, lumped_mass,
    solve_spd, CrackMeasure, Field, Preconditioner, SolveOptions, SolveReport, SparseSymMatrix,
};
use crate::mesh::{extend_crack, CrackPath, Domain, Mesh, MeshBuilder, Point, Sizing};

pub type ScalarFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
pub type Selector = Arc<dyn Fn(Point) -> bool + Send + Sync>;

pub fn scalar_fn(f: impl Fn(Point) -> f64 + Send + Sync + 'static) -> ScalarFn {
    Arc::new(f)
}

/// Right-hand side `f` of `−Δu = f`.
#[derive(Clone)]
pub enum Source {
    Zero,
    Function(ScalarFn),
    Nodal(Field),
}

impl fmt::Debug for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Zero => write!(f, "Zero"),
            Source::Function(_) => write!(f, "Function"),
            Source::Nodal(_) => write!(f, "Nodal"),
        }
    }
}

impl Source {
    pub fn function(f: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        Source::Function(Arc::new(f))
    }

    /// Nodal values on `mesh`.
    pub fn nodal(&self, mesh: &Arc<Mesh>) -> Result<Vec<f64>> {
        match self {
            Source::Zero => Ok(vec![0.0; mesh.n_nodes()]),
            Source::Function(f) => Ok((0..mesh.n_nodes()).map(|i| f(mesh.sample_point(i))).collect()),
            Source::Nodal(v) => transfer(v, mesh).map(Field::into_values),
        }
    }
}

/// Moves a field to another cut of the same triangulation by matching triangle corners.
/// Nodes that receive several values (a face copy that became continuous) get their mean.
pub fn transfer(v: &Field, target: &Arc<Mesh>) -> Result<Field> {
    if Arc::ptr_eq(v.mesh(), target) {
        return Ok(v.clone());
    }
    let src = v.mesh();
    if !src.same_triangulation(target) {
        return Err(Error::MeshMismatch);
    }
    let mut sum = vec![0.0; target.n_nodes()];
    let mut cnt = vec![0usize; target.n_nodes()];
    for (ts, tt) in src.triangles().iter().zip(target.triangles()) {
        for k in 0..3 {
            sum[tt[k]] += v.values()[ts[k]];
            cnt[tt[k]] += 1;
        }
    }
    let vals = sum.iter().zip(&cnt).map(|(s, c)| s / (*c).max(1) as f64).collect();
    Field::new(target.clone(), vals)
}

#[derive(Clone)]
pub enum BoundaryValue {
    Function(ScalarFn),
    Nodal(Field),
}

#[derive(Clone)]
pub enum BoundaryCondition {
    Dirichlet(BoundaryValue),
    NeumannZero,
}

impl BoundaryCondition {
    pub fn dirichlet(g: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        BoundaryCondition::Dirichlet(BoundaryValue::Function(scalar_fn(g)))
    }
}

#[derive(Clone)]
pub struct BoundaryPiece {
    pub selector: Selector,
    pub condition: BoundaryCondition,
}

/// Boundary conditions per outer edge, selected by edge midpoint.
#[derive(Clone)]
pub struct BoundaryData {
    pieces: Vec<BoundaryPiece>,
}

impl fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BoundaryData({} pieces)", self.pieces.len())
    }
}

impl BoundaryData {
    pub fn empty() -> Self {
        Self { pieces: Vec::new() }
    }

    pub fn dirichlet(g: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        Self::empty().with(|_| true, BoundaryCondition::Dirichlet(BoundaryValue::Function(Arc::new(g))))
    }

    pub fn dirichlet_nodal(g: Field) -> Self {
        Self::empty().with(|_| true, BoundaryCondition::Dirichlet(BoundaryValue::Nodal(g)))
    }

    pub fn neumann() -> Self {
        Self::empty().with(|_| true, BoundaryCondition::NeumannZero)
    }

    pub fn with(mut self, selector: impl Fn(Point) -> bool + Send + Sync + 'static, condition: BoundaryCondition) -> Self {
        self.pieces.push(BoundaryPiece { selector: Arc::new(selector), condition });
        self
    }

    /// Dirichlet node values. Errors unless every outer edge is claimed by exactly one piece.
    pub fn resolve(&self, mesh: &Arc<Mesh>) -> Result<Vec<(usize, f64)>> {
        let mut values: Vec<Option<f64>> = vec![None; mesh.n_nodes()];
        for (ei, e) in mesh.boundary_edges().iter().enumerate() {
            let mid = mesh.node(e[0]).lerp(mesh.node(e[1]), 0.5);
            let hits: Vec<&BoundaryPiece> = self.pieces.iter().filter(|p| (p.selector)(mid)).collect();
            if hits.len() != 1 {
                return Err(Error::InvalidProblem(format!(
                    "boundary edge {ei} at ({:.4}, {:.4}) covered by {} pieces",
                    mid.x,
                    mid.y,
                    hits.len()
                )));
            }
            if let BoundaryCondition::Dirichlet(g) = &hits[0].condition {
                for (k, &n) in e.iter().enumerate() {
                    let v = match g {
                        BoundaryValue::Function(f) => f(mesh.sample_point(n)),
                        BoundaryValue::Nodal(field) => nodal_boundary_value(field, mesh, ei, k)?,
                    };
                    values[n] = Some(v);
                }
            }
        }
        Ok(values.into_iter().enumerate().filter_map(|(i, v)| v.map(|v| (i, v))).collect())
    }
}

fn nodal_boundary_value(field: &Field, mesh: &Arc<Mesh>, edge: usize, k: usize) -> Result<f64> {
    let fm = field.mesh();
    if Arc::ptr_eq(fm, mesh) {
        return Ok(field.values()[mesh.boundary_edges()[edge][k]]);
    }
    if fm.same_triangulation(mesh) {
        return Ok(field.values()[fm.boundary_edges()[edge][k]]);
    }
    Err(Error::MeshMismatch)
}

#[derive(Debug, Clone)]
pub enum CrackCondition {
    Neumann,
    Transmission(CrackMeasure),
}

#[derive(Debug, Clone)]
pub struct Penalty {
    pub u_ref: Field,
    pub eps: f64,
}

#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub mesh: Arc<Mesh>,
    pub source: Source,
    pub boundary: BoundaryData,
    pub crack_condition: CrackCondition,
    pub extra_mass: f64,
    pub penalty: Option<Penalty>,
    /// Extra prescribed node values (e.g. a region pinned to zero).
    pub fixed: Vec<(usize, f64)>,
    pub options: SolveOptions,
}

impl ProblemSpec {
    pub fn new(mesh: Arc<Mesh>, source: Source, boundary: BoundaryData) -> Self {
        Self {
            mesh,
            source,
            boundary,
            crack_condition: CrackCondition::Neumann,
            extra_mass: 0.0,
            penalty: None,
            fixed: Vec::new(),
            options: SolveOptions::default(),
        }
    }

    pub fn transmission(mut self, mu: CrackMeasure) -> Self {
        self.crack_condition = CrackCondition::Transmission(mu);
        self
    }

    pub fn extra_mass(mut self, c: f64) -> Self {
        self.extra_mass = c;
        self
    }

    pub fn penalty(mut self, u_ref: Field, eps: f64) -> Self {
        self.penalty = Some(Penalty { u_ref, eps });
        self
    }

    pub fn fixed(mut self, fixed: Vec<(usize, f64)>) -> Self {
        self.fixed = fixed;
        self
    }

    pub fn tol(mut self, tol: f64) -> Self {
        self.options.tol = tol;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.extra_mass >= 0.0) || !self.extra_mass.is_finite() {
            return Err(Error::InvalidProblem(format!("extra mass {}", self.extra_mass)));
        }
        if let Some(p) = &self.penalty {
            if !(p.eps > 0.0) || !p.eps.is_finite() {
                return Err(Error::InvalidProblem(format!("penalty eps {}", p.eps)));
            }
            if !Arc::ptr_eq(p.u_ref.mesh(), &self.mesh) {
                return Err(Error::MeshMismatch);
            }
        }
        if let CrackCondition::Transmission(mu) = &self.crack_condition {
            mu.validate(&self.mesh)?;
        }
        Ok(())
    }
}

/// A solved problem with the assembled quadratic form for certificates.
#[derive(Debug, Clone)]
pub struct Solution {
    pub u: Field,
    pub report: SolveReport,
    pub matrix: SparseSymMatrix,
    pub rhs: Vec<f64>,
    /// Constant making `objective` match the functional (penalty terms in `u_ref`).
    pub offset: f64,
    pub constrained: Vec<(usize, f64)>,
    /// Whether a compatibility projection was applied to the load.
    pub projected: bool,
    pub floating_components: usize,
    /// Nodes fixed only to remove the constant null space of floating components.
    pub pinned: Vec<usize>,
    pub warnings: Vec<String>,
}

impl Solution {
    /// `vᵀAv − 2 rhsᵀv + offset`.
    pub fn objective_at(&self, v: &[f64]) -> f64 {
        self.matrix.quad_form(v) - 2.0 * dot(&self.rhs, v) + self.offset
    }

    pub fn objective(&self) -> f64 {
        self.objective_at(self.u.values())
    }

    /// Relative residual of the discrete weak form on free rows.
    pub fn weak_residual(&self) -> f64 {
        let mut free = vec![true; self.rhs.len()];
        for &(i, _) in &self.constrained {
            free[i] = false;
        }
        let au = self.matrix.matvec(self.u.values());
        let r = (0..au.len()).filter(|&i| free[i]).map(|i| (self.rhs[i] - au[i]).powi(2)).sum::<f64>().sqrt();
        if self.report.reference_norm > 0.0 {
            r / self.report.reference_norm
        } else {
            r
        }
    }

    pub fn constrained_nodes(&self) -> Vec<usize> {
        self.constrained.iter().map(|c| c.0).collect()
    }

    /// Prescribed nodes whose equations are not part of the weak form (pins excluded).
    pub fn dirichlet_nodes(&self) -> Vec<usize> {
        self.constrained.iter().map(|c| c.0).filter(|i| !self.pinned.contains(i)).collect()
    }
}

/// Node components; Robin couplings with β > 0 join the two faces.
fn node_components(mesh: &Mesh, mu: Option<&CrackMeasure>) -> Vec<usize> {
    let n = mesh.n_nodes();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    let union = |p: &mut Vec<usize>, a: usize, b: usize| {
        let (ra, rb) = (find(p, a), find(p, b));
        if ra != rb {
            p[ra.max(rb)] = ra.min(rb);
        }
    };
    for t in mesh.triangles() {
        union(&mut parent, t[0], t[1]);
        union(&mut parent, t[1], t[2]);
    }
    if let Some(mu) = mu {
        for (e, &b) in mesh.crack_edges().iter().zip(&mu.beta) {
            if b > 0.0 {
                union(&mut parent, e.plus[0], e.minus[0]);
                union(&mut parent, e.plus[1], e.minus[1]);
            }
        }
    }
    (0..n).map(|i| find(&mut parent, i)).collect()
}

/// Assembles and solves any supported problem.
pub fn solve(spec: &ProblemSpec) -> Result<Solution> {
    spec.validate()?;
    let mesh = &spec.mesh;
    let n = mesh.n_nodes();
    let k = assemble_stiffness(mesh)?;
    let mut terms: Vec<(f64, SparseSymMatrix)> = vec![(1.0, k)];
    let mu = match &spec.crack_condition {
        CrackCondition::Neumann => None,
        CrackCondition::Transmission(mu) => {
            terms.push((1.0, assemble_crack_robin(mesh, mu)?));
            Some(mu)
        }
    };
    let mass = assemble_mass(mesh, false)?;
    let f_nodal = spec.source.nodal(mesh)?;
    let mut rhs = mass.matvec(&f_nodal);
    if spec.extra_mass > 0.0 {
        terms.push((spec.extra_mass, mass.clone()));
    }
    let mut offset = 0.0;
    if let Some(p) = &spec.penalty {
        let rho: Vec<f64> = f_nodal.iter().map(|f| f.abs() + p.eps).collect();
        let m_rho = assemble_weighted_mass(mesh, &rho)?;
        let mu_ref = m_rho.matvec(p.u_ref.values());
        for (r, m) in rhs.iter_mut().zip(&mu_ref) {
            *r += m / p.eps;
        }
        offset = m_rho.quad_form(p.u_ref.values()) / p.eps;
        terms.push((1.0 / p.eps, m_rho));
    }
    let refs: Vec<(f64, &SparseSymMatrix)> = terms.iter().map(|(c, m)| (*c, m)).collect();
    let a = SparseSymMatrix::linear_combination(&refs);

    let mut constrained = match &spec.penalty {
        // the penalized minimizer keeps the trace of the reference field
        Some(p) => spec
            .boundary
            .resolve(mesh)?
            .into_iter()
            .map(|(i, _)| (i, p.u_ref.values()[i]))
            .collect::<Vec<_>>(),
        None => spec.boundary.resolve(mesh)?,
    };
    for &(i, v) in &spec.fixed {
        if i >= n {
            return Err(Error::InvalidProblem(format!("fixed node {i} out of range")));
        }
        match constrained.iter_mut().find(|c| c.0 == i) {
            Some(c) => c.1 = v,
            None => constrained.push((i, v)),
        }
    }
    constrained.sort_by_key(|c| c.0);

    let mut projected = false;
    let mut floating = 0;
    let mut pinned = Vec::new();
    let mut warnings = Vec::new();
    if spec.extra_mass == 0.0 && spec.penalty.is_none() {
        let comp = node_components(mesh, mu);
        let mut has_dirichlet = vec![false; n];
        for &(i, _) in &constrained {
            has_dirichlet[comp[i]] = true;
        }
        let lm = lumped_mass(mesh)?;
        let mut roots: Vec<usize> = comp.clone();
        roots.sort_unstable();
        roots.dedup();
        for r in roots {
            if has_dirichlet[r] {
                continue;
            }
            floating += 1;
            let nodes: Vec<usize> = (0..n).filter(|&i| comp[i] == r).collect();
            let total: f64 = nodes.iter().map(|&i| rhs[i]).sum();
            let m: f64 = nodes.iter().map(|&i| lm[i]).sum();
            let scale: f64 = nodes.iter().map(|&i| rhs[i].abs()).sum();
            if total.abs() > 1e-12 * scale.max(1e-300) {
                projected = true;
                warnings.push(format!("load projected on floating component {floating} (mean {:.3e})", total / m));
            }
            for &i in &nodes {
                rhs[i] -= lm[i] * total / m;
            }
            constrained.push((nodes[0], 0.0));
            pinned.push(nodes[0]);
        }
        constrained.sort_by_key(|c| c.0);
    }

    let mut opts = spec.options.clone();
    if let (Some(p), None) = (&spec.penalty, &opts.initial_guess) {
        opts.initial_guess = Some(p.u_ref.values().to_vec());
    }
    if opts.preconditioner == Preconditioner::Jacobi && !mesh.seam_pairs().is_empty() {
        opts.preconditioner = Preconditioner::BlockJacobi(mesh.seam_pairs().to_vec());
    }
    let (x, report) = solve_spd(&a, &rhs, &constrained, &opts)?;
    Ok(Solution {
        u: Field::new(mesh.clone(), x)?,
        report,
        matrix: a,
        rhs,
        offset,
        constrained,
        projected,
        floating_components: floating,
        pinned,
        warnings,
    })
}

/// `−Δu = f` in Ω∖S with natural Neumann conditions on both crack faces.
pub fn solve_neumann_crack(spec: &ProblemSpec) -> Result<Solution> {
    if !matches!(spec.crack_condition, CrackCondition::Neumann) || spec.penalty.is_some() {
        return Err(Error::InvalidProblem("expected a Neumann crack problem without penalty".into()));
    }
    solve(spec)
}

/// `(K + B_μ + cM) u = load`: flux equals `β[u]` on the crack.
pub fn solve_transmission(spec: &ProblemSpec) -> Result<Solution> {
    if !matches!(spec.crack_condition, CrackCondition::Transmission(_)) {
        return Err(Error::InvalidProblem("expected a transmission problem".into()));
    }
    solve(spec)
}

/// Minimizer of `‖∇w‖² + (1/ε)((|f|+ε)(w−u)|w−u) − 2(f|w)` with the trace of `u` on ∂Ω.
pub fn solve_penalized(spec: &ProblemSpec) -> Result<Solution> {
    if spec.penalty.is_none() || !matches!(spec.crack_condition, CrackCondition::Neumann) {
        return Err(Error::InvalidProblem("expected a penalized Neumann crack problem".into()));
    }
    solve(spec)
}

/// Minimizer of `‖∇v‖² + c‖v‖² − 2(load|v)` with Neumann teeth; the load is the problem source.
pub fn solve_sieve(spec: &ProblemSpec) -> Result<Solution> {
    if !(spec.extra_mass > 0.0) || !matches!(spec.crack_condition, CrackCondition::Neumann) {
        return Err(Error::InvalidProblem("sieve problems need extra mass and Neumann teeth".into()));
    }
    solve(spec)
}

/// A segment crack extended at its first endpoint, sharing one triangulation.
#[derive(Clone)]
pub struct CrackFamily {
    pub domain: Domain,
    pub crack: CrackPath,
    pub sizing: Sizing,
    pub source: Source,
    pub boundary: BoundaryData,
    pub options: SolveOptions,
}

#[derive(Debug, Clone)]
pub struct FamilyMember {
    pub s: f64,
    pub crack: CrackPath,
    pub solution: Solution,
}

impl FamilyMember {
    pub fn field(&self) -> &Field {
        &self.solution.u
    }
}

/// Solves the Neumann crack problem on `S_s` for every `s`, with fixed Dirichlet data.
/// All members are cuts of one triangulation resolving every extension.
pub fn solve_crack_family(family: &CrackFamily, s_values: &[f64]) -> Result<Vec<FamilyMember>> {
    let (a, b) = match family.crack {
        CrackPath::Segment { a, b } => (a, b),
        _ => return Err(Error::InvalidProblem("crack family needs a segment".into())),
    };
    let cracks: Vec<CrackPath> =
        s_values.iter().map(|&s| extend_crack(&family.crack, s, &family.domain)).collect::<std::result::Result<_, _>>()?;
    let base = MeshBuilder::new(family.domain, family.sizing.clone())
        .guides(cracks.iter().cloned())
        .anchor(a, b - a)
        .triangulate()?;
    s_values
        .par_iter()
        .zip(cracks.par_iter())
        .map(|(&s, c)| {
            let mesh = Arc::new(Mesh::cut(base.clone(), std::slice::from_ref(c), false)?);
            let mut spec = ProblemSpec::new(mesh, family.source.clone(), family.boundary.clone());
            spec.options = family.options.clone();
            let solution = solve_neumann_crack(&spec)?;
            Ok(FamilyMember { s, crack: c.clone(), solution })
        })
        .collect()
}
