//! Perforated cracks: endpoint consistency, energy nesting and effective transmission density.

use std::sync::Arc;

use rayon::prelude::*;

use super::common::{mesh_stats, rel, slab_boundary, vertical_crack, Stopwatch};
use super::config::SieveConfig;
use super::result::{ExperimentResult, Gate, Row};
use super::svg::{Plot, Series};
use crate::error::Result;
use crate::fem::{jump_trace, l2_norm, mean_flux, CrackMeasure, Field, SolveOptions, BETA_INF};
use crate::mesh::{build_sieve, CrackPath, Domain, Mesh, MeshBuilder, Point, Sizing, Triangulation};
use crate::slope::{lumped_distance, MuFloors};
use crate::solvers::{solve_sieve, solve_transmission, transfer, ProblemSpec, Solution, Source};

/// Base crack broken at every tooth endpoint of every sieve in the sweep.
pub fn sieve_guide(cfg: &SieveConfig) -> CrackPath {
    let base = vertical_crack();
    let mut s: Vec<f64> = vec![0.0, base.length()];
    for &n in &cfg.n_teeth {
        for &g in &cfg.gap_fractions {
            for t in build_sieve(&base, n, g).teeth {
                let (p, q) = (t.points()[0], *t.points().last().expect("segment"));
                s.push(base.points()[0].dist(p));
                s.push(base.points()[0].dist(q));
            }
        }
    }
    s.sort_by(f64::total_cmp);
    s.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    CrackPath::Polyline { points: s.iter().map(|&t| base.point_at(t)).collect() }
}

pub fn sieve_triangulation(cfg: &SieveConfig) -> Result<Arc<Triangulation>> {
    MeshBuilder::new(Domain::UnitSquare, Sizing::uniform(cfg.h))
        .guide(sieve_guide(cfg))
        .spanning(true)
        .anchor(Point::new(0.5, 0.0), Point::new(0.0, 1.0))
        .triangulate()
}

/// Period-averaged `⟨flux⟩/⟨[u]⟩` across the whole base line, with the density floors.
pub fn effective_beta(v_on_base: &Field) -> f64 {
    let mesh = v_on_base.mesh();
    let jt = jump_trace(v_on_base);
    let flux = mean_flux(v_on_base);
    let (mut j, mut q, mut l) = (0.0, 0.0, 0.0);
    for (e, ce) in mesh.crack_edges().iter().enumerate() {
        j += ce.length * jt.midpoint(e);
        q += ce.length * flux[e];
        l += ce.length;
    }
    let (j, q) = (j / l, q / l);
    let floors = MuFloors::for_field(v_on_base);
    if j.abs() > floors.jump {
        (q / j).clamp(0.0, BETA_INF)
    } else if q.abs() > floors.flux {
        BETA_INF
    } else {
        0.0
    }
}

struct Sweep {
    n: usize,
    g: f64,
    energy: f64,
    beta_eff: f64,
    solution: Solution,
    row: Row,
}

fn sieve_spec(mesh: Arc<Mesh>, load: &Field, tol: f64) -> Result<ProblemSpec> {
    let load = transfer(load, &mesh)?;
    let mut spec = ProblemSpec::new(mesh, Source::Nodal(load), slab_boundary()).extra_mass(1.0);
    spec.options = SolveOptions::with_tol(tol);
    Ok(spec)
}

pub fn run_sieve_gamma(cfg: &SieveConfig, config_hash: &str) -> Result<ExperimentResult> {
    let mut res = ExperimentResult::new("sieve_gamma", config_hash);
    let clock = Stopwatch::start();
    let base = sieve_triangulation(cfg)?;
    let cut = Arc::new(Mesh::cut(base.clone(), &[vertical_crack()], true)?);
    let uncut = Arc::new(Mesh::cut(base.clone(), &[], true)?);

    // transmission solution entering the load f + u (f = 0)
    let mut tspec = ProblemSpec::new(cut.clone(), Source::Zero, slab_boundary()).transmission(CrackMeasure::constant(&cut, cfg.load_beta));
    tspec.options = SolveOptions::with_tol(cfg.solver_tol);
    let u = solve_transmission(&tspec)?.u;

    let neumann_ref = solve_sieve(&sieve_spec(cut.clone(), &u, cfg.solver_tol)?)?;
    let uncut_ref = solve_sieve(&sieve_spec(uncut.clone(), &u, cfg.solver_tol)?)?;

    let jobs: Vec<(usize, f64)> = cfg.n_teeth.iter().flat_map(|&n| cfg.gap_fractions.iter().map(move |&g| (n, g))).collect();
    let sweeps: Vec<Sweep> = jobs
        .par_iter()
        .map(|&(n, g)| {
            let pattern = build_sieve(&vertical_crack(), n, g);
            let mesh = Arc::new(Mesh::cut(base.clone(), &pattern.teeth, true)?);
            let sol = solve_sieve(&sieve_spec(mesh.clone(), &u, cfg.solver_tol)?)?;
            let on_base = transfer(&sol.u, &cut)?;
            let beta_eff = effective_beta(&on_base);
            let energy = sol.objective();
            let dist_u = lumped_distance(&on_base, &u)? / l2_norm(&u);
            let row = mesh_stats(
                Row::new()
                    .with("n_teeth", n)
                    .with("gap_fraction", g)
                    .with("teeth_length", pattern.teeth_length())
                    .with("energy", energy)
                    .with("beta_eff", beta_eff)
                    .with("distance_to_transmission", dist_u)
                    .with("cg_iterations", sol.report.iterations),
                &mesh,
            );
            Ok(Sweep { n, g, energy, beta_eff, solution: sol, row })
        })
        .collect::<Result<_>>()?;
    res.timings.push(("sweep".into(), clock.seconds()));

    for s in &sweeps {
        res.cases.push(s.row.clone());
    }
    res.cases.push(Row::new().with("n_teeth", 0usize).with("gap_fraction", 0.0).with("case", "neumann_reference").with("energy", neumann_ref.objective()));
    res.cases.push(Row::new().with("n_teeth", 0usize).with("gap_fraction", 1.0).with("case", "uncracked_reference").with("energy", uncut_ref.objective()));

    let endpoint = |s: &Sweep, r: &Solution| -> Result<f64> {
        let d = lumped_distance(&s.solution.u, &transfer(&r.u, s.solution.u.mesh())?)? / l2_norm(&r.u);
        Ok(d.max(rel(s.energy, r.objective())))
    };
    let mut energy_plot = Plot::new("energy", "Sieve energy against gap fraction", "gap fraction", "G-energy");
    let mut beta_plot = Plot::new("beta", "Effective transmission density (interior gaps)", "gap fraction", "β_eff");
    for &n in &cfg.n_teeth {
        let row: Vec<&Sweep> = sweeps.iter().filter(|s| s.n == n).collect();
        if let Some(s0) = row.iter().find(|s| s.g == 0.0) {
            res.gates.push(Gate::at_most(
                &format!("gap0_n{n}"),
                "gap 0 against the Neumann-crack solve (relative L² and energy)",
                endpoint(s0, &neumann_ref)?,
                cfg.endpoint_tolerance,
            ));
        }
        if let Some(s1) = row.iter().find(|s| s.g == 1.0) {
            res.gates.push(Gate::at_most(
                &format!("gap1_n{n}"),
                "gap 1 against the uncracked solve (relative L² and energy)",
                endpoint(s1, &uncut_ref)?,
                cfg.endpoint_tolerance,
            ));
        }
        let scale = row.iter().map(|s| s.energy.abs()).fold(0.0, f64::max);
        let worst_drop = row.windows(2).map(|w| w[0].energy - w[1].energy).fold(f64::NEG_INFINITY, f64::max);
        res.gates.push(Gate::at_most(
            &format!("energy_monotone_n{n}"),
            "largest decrease of the G-energy between consecutive gap fractions",
            worst_drop.max(0.0) / scale.max(1e-300),
            1e-9,
        ));
        let interior: Vec<&&Sweep> = row.iter().filter(|s| s.g > 0.0 && s.g < 1.0).collect();
        let finite_pos = interior.iter().all(|s| s.beta_eff > 0.0 && s.beta_eff < BETA_INF);
        res.gates.push(Gate::holds(&format!("beta_finite_positive_n{n}"), "effective β finite and positive for interior gaps", finite_pos));
        let monotone = row.windows(2).all(|w| w[1].beta_eff >= w[0].beta_eff);
        res.gates.push(Gate::holds(&format!("beta_monotone_n{n}"), "effective β nondecreasing in gap fraction", monotone));
        energy_plot = energy_plot.with(Series::line(format!("{n} teeth"), row.iter().map(|s| (s.g, s.energy)).collect()));
        beta_plot = beta_plot.with(Series::line(format!("{n} teeth"), interior.iter().map(|s| (s.g, s.beta_eff)).collect()));
    }
    res.plots.push(energy_plot);
    res.plots.push(beta_plot);
    res.notes.push("illustration of the perforated-crack limit: gap geometry is swept, no capacity scaling law is asserted".into());
    res.notes.push(format!("load is f + u with u the transmission solution for β = {}", cfg.load_beta));
    Ok(res)
}
