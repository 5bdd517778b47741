//! Penalized minimizers with the Neumann-crack solution as reference.

use std::sync::Arc;

use rayon::prelude::*;

use super::common::{mesh_stats, Stopwatch};
use super::config::PenalizedConfig;
use super::result::{ExperimentResult, Gate, Row};
use super::svg::{Plot, Series};
use crate::error::Result;
use crate::fem::{h1_norm, Field, SolveOptions};
use crate::mesh::{build_mesh, CrackPath, Domain, Point};
use crate::solvers::{solve_neumann_crack, solve_penalized, BoundaryData, ProblemSpec, Source};

/// `‖w − u‖_{H¹}` for fields on one mesh.
pub fn h1_distance(w: &Field, u: &Field) -> Result<f64> {
    Ok(h1_norm(&w.sub(u)?))
}

pub fn run_penalized_fixedpoint(cfg: &PenalizedConfig, config_hash: &str) -> Result<ExperimentResult> {
    let mut res = ExperimentResult::new("penalized_fixedpoint", config_hash);
    let clock = Stopwatch::start();
    let crack = CrackPath::segment(Point::new(cfg.crack[0][0], cfg.crack[0][1]), Point::new(cfg.crack[1][0], cfg.crack[1][1]));
    let mesh = Arc::new(build_mesh(Domain::UnitSquare, Some(crack), cfg.h)?);
    let bump = cfg.source;
    let source = Source::function(move |p| bump.eval(p));
    let boundary = BoundaryData::dirichlet(|_| 0.0);
    let mut spec = ProblemSpec::new(mesh.clone(), source.clone(), boundary.clone());
    spec.options = SolveOptions::with_tol(cfg.solver_tol);
    let u = solve_neumann_crack(&spec)?.u;

    // reference that is not Euler-consistent: smooth perturbation vanishing on the boundary
    let amp = cfg.perturbation * u.max_abs();
    let bumpy = Field::from_fn(mesh.clone(), |p| {
        amp * (std::f64::consts::PI * p.x).sin() * (2.0 * std::f64::consts::PI * p.y).sin()
    });
    let perturbed = u.add(&bumpy)?;

    let solve_with = |src: &Source, reference: &Field, eps: f64| -> Result<(Field, usize)> {
        let mut s = ProblemSpec::new(mesh.clone(), src.clone(), boundary.clone()).penalty(reference.clone(), eps);
        s.options = SolveOptions::with_tol(cfg.solver_tol);
        let sol = solve_penalized(&s)?;
        Ok((sol.u, sol.report.iterations))
    };
    let rows: Vec<(f64, f64, f64, usize)> = cfg
        .eps
        .par_iter()
        .map(|&eps| {
            let (w, it) = solve_with(&source, &u, eps)?;
            let (wp, _) = solve_with(&source, &perturbed, eps)?;
            Ok((eps, h1_distance(&w, &u)?, h1_distance(&wp, &perturbed)?, it))
        })
        .collect::<Result<_>>()?;
    let zero = Field::zeros(mesh.clone());
    let (wz, _) = solve_with(&Source::Zero, &zero, cfg.eps[0])?;
    res.timings.push(("solves".into(), clock.seconds()));

    for &(eps, d, dp, it) in &rows {
        res.cases.push(mesh_stats(
            Row::new()
                .with("eps", eps)
                .with("distance", d)
                .with("perturbed_distance", dp)
                .with("cg_iterations", it)
                .with("reference_h1_norm", h1_norm(&u)),
            &mesh,
        ));
    }
    res.cases.push(Row::new().with("eps", cfg.eps[0]).with("case", "zero_data").with("distance", wz.max_abs()));

    let bound = cfg.distance_factor * cfg.solver_tol;
    for &(eps, d, _, _) in &rows {
        res.gates.push(Gate::at_most(&format!("fixed_point_eps_{eps}"), format!("‖w_ε − u‖_H¹ for ε = {eps}"), d, bound));
    }
    res.gates.push(Gate::at_most("zero_data", "f = 0 with zero reference gives the zero minimizer", wz.max_abs(), 0.0));
    let shrinking = rows.windows(2).all(|w| w[1].2 < w[0].2);
    res.gates.push(Gate::holds("perturbed_shrinks", "distance to a perturbed reference decreases with ε", shrinking));
    res.plots.push(
        Plot::new("distance", "Penalized minimizer against its reference", "ε", "‖w_ε − u_ref‖_H¹")
            .log_log()
            .with(Series::line("Euler-consistent reference", rows.iter().map(|r| (r.0, r.1.max(1e-300))).collect()))
            .with(Series::line("perturbed reference", rows.iter().map(|r| (r.0, r.2)).collect())),
    );
    Ok(res)
}
