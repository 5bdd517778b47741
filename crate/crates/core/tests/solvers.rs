//! Neumann-crack, transmission, penalized, sieve and crack-family problems.

use std::f64::consts::PI;
use std::sync::Arc;

use crackslope_core::fem::{
    flux_on_crack, gradient_energy, h1_norm, jump_trace, l2_norm, mean_flux, CrackMeasure, Field, SolveOptions,
    BETA_INF,
};
use crackslope_core::fracture::SlitField;
use crackslope_core::mesh::{
    build_mesh, build_sieve, CrackPath, Domain, Mesh, MeshBuilder, Point, Side, Sizing,
};
use crackslope_core::solvers::{
    solve_crack_family, solve_neumann_crack, solve_penalized, solve_sieve, solve_transmission, transfer,
    BoundaryCondition, BoundaryData, CrackFamily, ProblemSpec, Solution, Source,
};
use crackslope_core::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-10;

fn p(x: f64, y: f64) -> Point {
    Point::new(x, y)
}

fn slit(h: f64) -> Arc<Mesh> {
    Arc::new(build_mesh(Domain::UnitSquare, Some(CrackPath::segment(p(0.3, 0.5), p(0.7, 0.5))), h).unwrap())
}

fn vertical() -> CrackPath {
    CrackPath::segment(p(0.5, 1.0), p(0.5, 0.0))
}

/// Left-to-right slab: crack `x = 1/2` across the full height.
fn slab(h: f64, guides: Vec<CrackPath>) -> Arc<Mesh> {
    Arc::new(
        MeshBuilder::new(Domain::UnitSquare, Sizing::uniform(h))
            .crack(vertical())
            .guides(guides)
            .spanning(true)
            .anchor(p(0.5, 0.0), p(0.0, 1.0))
            .build()
            .unwrap(),
    )
}

fn slab_boundary() -> BoundaryData {
    BoundaryData::empty()
        .with(|q| q.x < 1e-12, BoundaryCondition::dirichlet(|_| 0.0))
        .with(|q| q.x > 1.0 - 1e-12, BoundaryCondition::dirichlet(|_| 1.0))
        .with(|q| q.x >= 1e-12 && q.x <= 1.0 - 1e-12, BoundaryCondition::NeumannZero)
}

fn transmission(mesh: &Arc<Mesh>, beta: f64) -> Solution {
    let spec = ProblemSpec::new(mesh.clone(), Source::Zero, slab_boundary())
        .transmission(CrackMeasure::constant(mesh, beta))
        .tol(TOL);
    solve_transmission(&spec).unwrap()
}

fn assert_galerkin(sol: &Solution) {
    assert!(sol.weak_residual() <= 10.0 * TOL, "weak residual {}", sol.weak_residual());
}

fn bump(q: Point) -> f64 {
    let r2 = (q - p(0.45, 0.4)).dot(q - p(0.45, 0.4)) / 0.09;
    if r2 < 1.0 {
        10.0 * (1.0 - 1.0 / (1.0 - r2)).exp()
    } else {
        0.0
    }
}

#[test]
fn constants_are_harmonic() {
    let m = slit(0.08);
    let spec = ProblemSpec::new(m.clone(), Source::Zero, BoundaryData::dirichlet(|_| 2.5)).tol(TOL);
    let sol = solve_neumann_crack(&spec).unwrap();
    assert!(sol.u.values().iter().all(|v| (v - 2.5).abs() < 1e-9));
    assert!(jump_trace(&sol.u).per_pair.iter().all(|j| j.abs() < 1e-9));
    assert_galerkin(&sol);
}

#[test]
fn linear_data_across_horizontal_crack() {
    let m = slit(0.05);
    let spec = ProblemSpec::new(m.clone(), Source::Zero, BoundaryData::dirichlet(|q| q.x)).tol(TOL);
    let sol = solve_neumann_crack(&spec).unwrap();
    for i in 0..m.n_nodes() {
        assert!((sol.u.values()[i] - m.node(i).x).abs() < 1e-8);
    }
    assert!(jump_trace(&sol.u).per_pair.iter().all(|j| j.abs() < 1e-8));
    for side in [Side::Plus, Side::Minus] {
        assert!(flux_on_crack(&sol.u, side).iter().all(|f| f.abs() < 1e-8));
    }
    assert_galerkin(&sol);
}

#[test]
fn pure_neumann_eigenfunction_converges_quadratically() {
    let exact = |q: Point| (PI * q.x).cos() * (PI * q.y).cos();
    let mut errs = Vec::new();
    let hs = [1.0 / 16.0, 1.0 / 32.0];
    for &h in &hs {
        let m = Arc::new(build_mesh(Domain::UnitSquare, None, h).unwrap());
        let f = move |q: Point| 2.0 * PI * PI * exact(q);
        let spec = ProblemSpec::new(m.clone(), Source::function(f), BoundaryData::neumann()).tol(TOL);
        let sol = solve_neumann_crack(&spec).unwrap();
        assert_eq!(sol.floating_components, 1);
        assert_eq!(sol.pinned.len(), 1);
        assert!(sol.dirichlet_nodes().is_empty());
        let e = Field::from_fn(m.clone(), exact);
        let mut d = sol.u.sub(&e).unwrap();
        let mean = d.values().iter().sum::<f64>() / d.len() as f64;
        d = d.axpy(-mean, &Field::constant(m.clone(), 1.0)).unwrap();
        errs.push(l2_norm(&d));
        assert_galerkin(&sol);
    }
    let order = (errs[0] / errs[1]).ln() / 2f64.ln();
    assert!(order > 1.8, "order {order} from {errs:?}");
}

#[test]
fn incompatible_neumann_data_is_projected() {
    let m = Arc::new(build_mesh(Domain::UnitSquare, None, 0.1).unwrap());
    let spec = ProblemSpec::new(m.clone(), Source::function(|_| 1.0), BoundaryData::neumann()).tol(TOL);
    let sol = solve_neumann_crack(&spec).unwrap();
    assert!(sol.projected);
    assert!(!sol.warnings.is_empty());
    assert!(sol.u.max_abs() < 1e-8);
}

#[test]
fn transmission_one_dimensional_reduction() {
    let m = slab(1.0 / 16.0, vec![]);
    for beta in [0.0, 1.0, 10.0] {
        let sol = transmission(&m, beta);
        let jump = 1.0 / (1.0 + beta);
        let grad = beta / (1.0 + beta);
        let jt = jump_trace(&sol.u);
        assert!(jt.per_pair.iter().all(|j| (j - jump).abs() < 1e-8), "beta {beta}");
        for t in 0..m.triangles().len() {
            let g = sol.u.gradient(t);
            assert!((g.x - grad).abs() < 1e-8 && g.y.abs() < 1e-8);
        }
        // flux equals β[u] edgewise
        for (e, f) in mean_flux(&sol.u).iter().enumerate() {
            assert!((f - beta * jt.midpoint(e)).abs() < 1e-8);
        }
        assert_galerkin(&sol);
    }
    let hard_spec = ProblemSpec {
        // a 1e8 penalty puts the attainable relative residual near 1e-8
        options: SolveOptions { max_iter: Some(20_000), ..SolveOptions::with_tol(1e-7) },
        ..ProblemSpec::new(m.clone(), Source::Zero, slab_boundary()).transmission(CrackMeasure::constant(&m, BETA_INF))
    };
    let hard = solve_transmission(&hard_spec).unwrap();
    assert!(jump_trace(&hard.u).per_pair.iter().all(|j| j.abs() <= 1e-6));
    for i in 0..m.n_nodes() {
        assert!((hard.u.values()[i] - m.node(i).x).abs() < 1e-6);
    }
    let free = transmission(&m, 0.0);
    assert!(mean_flux(&free.u).iter().all(|f| f.abs() < 1e-8));
}

#[test]
fn transmission_flux_law_under_refinement() {
    // a varying density makes the discrete flux law inexact
    let mut errs = Vec::new();
    let hs = [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0];
    for &h in &hs {
        let m = slab(h, vec![]);
        let mu = CrackMeasure::from_fn(&m, |q, _| 1.0 + q.y);
        let spec = ProblemSpec::new(m.clone(), Source::Zero, slab_boundary()).transmission(mu.clone()).tol(TOL);
        let sol = solve_transmission(&spec).unwrap();
        let jt = jump_trace(&sol.u);
        let flux = mean_flux(&sol.u);
        let err2: f64 = m
            .crack_edges()
            .iter()
            .enumerate()
            .map(|(e, ce)| ce.length * (flux[e] - mu.beta[e] * jt.midpoint(e)).powi(2))
            .sum();
        errs.push(err2.sqrt());
        assert_galerkin(&sol);
    }
    let order = (errs[0] / errs[2]).ln() / 4f64.ln();
    assert!(order >= 0.95, "order {order} from {errs:?}");
    assert!(errs[0] > errs[1] && errs[1] > errs[2]);
}

#[test]
fn penalized_examples() {
    let m = slit(0.06);
    let spec = ProblemSpec::new(m.clone(), Source::function(bump), BoundaryData::dirichlet(|_| 0.0)).tol(TOL);
    let u = solve_neumann_crack(&spec).unwrap().u;
    for eps in [0.1, 0.01, 0.001] {
        let pspec = ProblemSpec::new(m.clone(), Source::function(bump), BoundaryData::dirichlet(|_| 0.0))
            .penalty(u.clone(), eps)
            .tol(TOL);
        let w = solve_penalized(&pspec).unwrap();
        let d = h1_norm(&w.u.sub(&u).unwrap());
        assert!(d <= 10.0 * TOL, "eps {eps}: {d}");
    }
    let z = Field::zeros(m.clone());
    let zspec = ProblemSpec::new(m.clone(), Source::Zero, BoundaryData::dirichlet(|_| 0.0)).penalty(z, 0.1);
    assert_eq!(solve_penalized(&zspec).unwrap().u.max_abs(), 0.0);

    let bent = u.axpy(1.0, &Field::from_fn(m.clone(), |q| 0.1 * (PI * q.x).sin() * (PI * q.y).sin())).unwrap();
    let mut last = f64::INFINITY;
    for eps in [0.1, 0.01, 0.001] {
        let pspec = ProblemSpec::new(m.clone(), Source::function(bump), BoundaryData::dirichlet(|_| 0.0))
            .penalty(bent.clone(), eps)
            .tol(TOL);
        let w = solve_penalized(&pspec).unwrap();
        let d = h1_norm(&w.u.sub(&bent).unwrap());
        assert!(d < last, "eps {eps}: {d} !< {last}");
        last = d;
        for &i in &m.boundary_nodes() {
            assert_eq!(w.u.values()[i], bent.values()[i]);
        }
    }
}

#[test]
fn problem_validation() {
    let m = slit(0.1);
    let base = || ProblemSpec::new(m.clone(), Source::Zero, BoundaryData::dirichlet(|_| 0.0));
    assert!(matches!(solve_penalized(&base().penalty(Field::zeros(m.clone()), 0.0)), Err(Error::InvalidProblem(_))));
    assert!(solve_neumann_crack(&base().extra_mass(-1.0)).is_err());
    let other = slit(0.2);
    assert!(matches!(solve_penalized(&base().penalty(Field::zeros(other), 0.1)), Err(Error::MeshMismatch)));
    assert!(solve_transmission(&base()).is_err());
    assert!(solve_penalized(&base()).is_err());
    assert!(solve_sieve(&base()).is_err());
    assert!(solve_neumann_crack(&base().transmission(CrackMeasure::constant(&m, 1.0))).is_err());
    let gap = BoundaryData::empty().with(|q| q.x < 0.5, BoundaryCondition::NeumannZero);
    assert!(solve_neumann_crack(&ProblemSpec::new(m.clone(), Source::Zero, gap)).is_err());
    let twice = BoundaryData::neumann().with(|_| true, BoundaryCondition::NeumannZero);
    assert!(solve_neumann_crack(&ProblemSpec::new(m.clone(), Source::Zero, twice)).is_err());
}

struct Sieves {
    full: Arc<Mesh>,
    none: Arc<Mesh>,
    cut: Vec<(f64, Arc<Mesh>)>,
}

fn sieves(h: f64, n: usize, gaps: &[f64]) -> Sieves {
    let base = vertical();
    let mut guides = Vec::new();
    for &g in gaps {
        guides.extend(build_sieve(&base, n, g).teeth);
    }
    let tri = MeshBuilder::new(Domain::UnitSquare, Sizing::uniform(h))
        .guide(base.clone())
        .guides(guides)
        .spanning(true)
        .anchor(p(0.5, 0.0), p(0.0, 1.0))
        .triangulate()
        .unwrap();
    let cut_with = |c: &[CrackPath]| Arc::new(Mesh::cut(tri.clone(), c, true).unwrap());
    Sieves {
        full: cut_with(std::slice::from_ref(&base)),
        none: cut_with(&[]),
        cut: gaps.iter().map(|&g| (g, cut_with(&build_sieve(&base, n, g).teeth))).collect(),
    }
}

fn sieve_solve(mesh: &Arc<Mesh>, load: &Field) -> Solution {
    let spec = ProblemSpec::new(mesh.clone(), Source::Nodal(load.clone()), slab_boundary()).extra_mass(1.0).tol(TOL);
    solve_sieve(&spec).unwrap()
}

#[test]
fn sieve_endpoints_and_nesting() {
    let s = sieves(1.0 / 24.0, 4, &[0.0, 0.5, 1.0]);
    let load = transfer(&transmission(&s.full, 1.0).u, &s.none).unwrap();
    let on = |m: &Arc<Mesh>| transfer(&load, m).unwrap();
    let full = sieve_solve(&s.full, &on(&s.full));
    let none = sieve_solve(&s.none, &on(&s.none));
    let mut energies = Vec::new();
    for (g, m) in &s.cut {
        let sol = sieve_solve(m, &on(m));
        assert_galerkin(&sol);
        let reference = if *g == 0.0 { Some(&full) } else if *g == 1.0 { Some(&none) } else { None };
        if let Some(r) = reference {
            let (l2, _) = crackslope_core::fem::matched_distance(&sol.u, &r.u).unwrap();
            assert!(l2 <= 1e-8 * l2_norm(&r.u), "gap {g}: {l2}");
            assert!((sol.objective() - r.objective()).abs() <= 1e-8 * r.objective().abs());
        }
        energies.push(sol.objective());
    }
    for w in energies.windows(2) {
        assert!(w[0] <= w[1] + 1e-12, "{energies:?}");
    }
}

fn kappa_family(kappa: f64, h: f64) -> CrackFamily {
    let crack = CrackPath::segment(p(0.5, 0.5), p(0.1, 0.5));
    let field = SlitField::new(&crack, kappa, 1.0).unwrap();
    let sizing = Sizing::Graded {
        h_min: h,
        h_max: 0.04,
        growth: 0.2,
        plateau: 12.0 * h,
        focus: vec![(p(0.5, 0.5), p(0.5 + 8.0 * h, 0.5))],
    };
    CrackFamily {
        domain: Domain::UnitSquare,
        crack,
        sizing,
        source: Source::Zero,
        boundary: BoundaryData::dirichlet(move |q| field.value(q)),
        options: SolveOptions::with_tol(TOL),
    }
}

#[test]
fn crack_family_examples() {
    let h = 1.0 / 200.0;
    let fam = kappa_family(1.5, h);
    let members = solve_crack_family(&fam, &[0.0, 4.0 * h, 8.0 * h]).unwrap();
    assert_eq!(members.len(), 3);
    let base_mesh = Arc::new(
        MeshBuilder::new(Domain::UnitSquare, fam.sizing.clone())
            .crack(fam.crack.clone())
            .guides(members.iter().map(|m| m.crack.clone()))
            .anchor(p(0.5, 0.5), p(0.1, 0.5) - p(0.5, 0.5))
            .build()
            .unwrap(),
    );
    let direct = solve_neumann_crack(&ProblemSpec::new(base_mesh, fam.source.clone(), fam.boundary.clone()).tol(TOL)).unwrap();
    assert!((gradient_energy(&direct.u) - gradient_energy(members[0].field())).abs() < 1e-9);
    let elastic: Vec<f64> = members.iter().map(|m| gradient_energy(m.field())).collect();
    for (m, e) in members.iter().zip(&elastic) {
        assert!(e.is_finite());
        assert!((m.crack.length() - (0.4 + m.s)).abs() < 1e-12);
        assert!((m.field().mesh().crack_length() - m.crack.length()).abs() < 1e-12);
        assert_galerkin(&m.solution);
    }
    assert!(elastic[0] > elastic[1] && elastic[1] > elastic[2], "{elastic:?}");
    assert!(solve_crack_family(&fam, &[0.0, 0.5]).is_err());
    let closed = CrackFamily { crack: CrackPath::circle(p(0.5, 0.5), 0.2, 0.05), ..fam };
    assert!(solve_crack_family(&closed, &[0.0]).is_err());
}

fn perturbations(sol: &Solution, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fixed: std::collections::HashSet<usize> = sol.constrained_nodes().into_iter().collect();
    (0..20)
        .map(|k| {
            let amp = 10f64.powi(-(k % 5) - 1);
            sol.u
                .values()
                .iter()
                .enumerate()
                .map(|(i, v)| if fixed.contains(&i) { *v } else { v + amp * rng.gen_range(-1.0..1.0) })
                .collect()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn penalized_solution_is_minimal(seed in any::<u64>(), eps in 0.001f64..0.5) {
        let m = slit(0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u_ref = Field::new(m.clone(), (0..m.n_nodes()).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let spec = ProblemSpec::new(m.clone(), Source::function(bump), BoundaryData::dirichlet(|_| 0.0))
            .penalty(u_ref, eps)
            .tol(TOL);
        let sol = solve_penalized(&spec).unwrap();
        let best = sol.objective();
        for v in perturbations(&sol, seed) {
            prop_assert!(best <= sol.objective_at(&v) + 1e-12 * best.abs().max(1.0));
        }
        prop_assert!(sol.weak_residual() <= 10.0 * TOL);
    }

    #[test]
    fn sieve_solution_is_minimal(seed in any::<u64>(), gap in 0.1f64..0.9) {
        let s = sieves(0.1, 2, &[gap]);
        let mesh = &s.cut[0].1;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let load = Field::new(mesh.clone(), (0..mesh.n_nodes()).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let sol = sieve_solve(mesh, &load);
        let best = sol.objective();
        for v in perturbations(&sol, seed) {
            prop_assert!(best <= sol.objective_at(&v) + 1e-12 * best.abs().max(1.0));
        }
        prop_assert!(sol.weak_residual() <= 10.0 * TOL);
    }
}
