//! Transmission problems: jump oracle, density round trip and the relaxed slope.

use rayon::prelude::*;

use super::common::{edge_mean, mesh_stats, rel, slab_mesh, slab_transmission, Stopwatch};
use super::config::RelaxedSlopeConfig;
use super::result::{ExperimentResult, Gate, Row};
use super::svg::{Plot, Series};
use crate::error::Result;
use crate::fem::{jump_trace, mean_flux};
use crate::slope::{check_divu_inequality, crack_profile, measure_mu_from_flux, recover_f, relaxed_slope, TestSpace};
use crate::solvers::Source;

/// `[u] = 1/(1+β)` on the slab geometry.
pub fn slab_jump(beta: f64) -> f64 {
    1.0 / (1.0 + beta)
}

struct Case {
    beta: f64,
    h: f64,
    jump: f64,
    beta_rec: f64,
    divu_min: f64,
    row: Row,
}

fn oracle_case(cfg: &RelaxedSlopeConfig, beta: f64, h: f64) -> Result<Case> {
    let mesh = slab_mesh(h, Vec::new())?;
    let sol = slab_transmission(&mesh, Source::Zero, beta, cfg.solver_tol)?;
    let jt = jump_trace(&sol.u);
    let jumps: Vec<f64> = (0..mesh.crack_edges().len()).map(|e| jt.midpoint(e)).collect();
    let flux = mean_flux(&sol.u);
    let jump = edge_mean(&mesh, &jumps);
    let mu = measure_mu_from_flux(&sol.u);
    let beta_rec = edge_mean(&mesh, &mu.beta);
    let d = check_divu_inequality(&sol.u);
    let flux_law = flux.iter().zip(&jumps).map(|(q, j)| (q - beta * j).abs()).fold(0.0, f64::max);
    let rep = relaxed_slope(&sol.u, &sol.dirichlet_nodes())?;
    let row = mesh_stats(
        Row::new()
            .with("case", "oracle")
            .with("beta", beta)
            .with("h", h)
            .with("jump", jump)
            .with("jump_reference", slab_jump(beta))
            .with("jump_rel_error", rel(jump, slab_jump(beta)))
            .with("flux", edge_mean(&mesh, &flux))
            .with("beta_recovered", beta_rec)
            .with("beta_error", (beta_rec - beta).abs())
            .with("divu_min", d.divu_min)
            .with("flux_law_residual", flux_law)
            .with("relaxed_slope", rep.two_norm_f)
            .with("cg_iterations", sol.report.iterations),
        &mesh,
    );
    Ok(Case { beta, h, jump, beta_rec, divu_min: d.divu_min, row })
}

/// Round-trip tolerance: relative to β, absolute for β < 1.
pub fn beta_tolerance(cfg: &RelaxedSlopeConfig, beta: f64) -> f64 {
    cfg.beta_tolerance * beta.max(1.0)
}

pub fn run_relaxed_slope(cfg: &RelaxedSlopeConfig, config_hash: &str) -> Result<ExperimentResult> {
    let mut res = ExperimentResult::new("relaxed_slope", config_hash);
    let clock = Stopwatch::start();
    let jobs: Vec<(f64, f64)> = cfg.betas.iter().flat_map(|&b| cfg.h.iter().map(move |&h| (b, h))).collect();
    let cases: Vec<Case> = jobs.par_iter().map(|&(b, h)| oracle_case(cfg, b, h)).collect::<Result<_>>()?;
    res.timings.push(("oracle".into(), clock.seconds()));

    let clock = Stopwatch::start();
    let bump = cfg.source;
    let sourced: Vec<(f64, f64, f64, f64, Vec<(f64, f64, f64)>, Row)> = cfg
        .h
        .par_iter()
        .map(|&h| {
            let mesh = slab_mesh(h, Vec::new())?;
            let sol = slab_transmission(&mesh, Source::function(move |p| bump.eval(p)), cfg.source_beta, cfg.solver_tol)?;
            let dn = sol.dirichlet_nodes();
            let rep = relaxed_slope(&sol.u, &dn)?;
            let jumps_norm = recover_f(&sol.u, TestSpace::JumpsOnS, &dn)?.norm;
            let reference = 2.0 * bump.l2_norm();
            let row = mesh_stats(
                Row::new()
                    .with("case", "sourced")
                    .with("beta", cfg.source_beta)
                    .with("h", h)
                    .with("relaxed_slope", rep.two_norm_f)
                    .with("slope_reference", reference)
                    .with("slope_rel_error", rel(rep.two_norm_f, reference))
                    .with("jumps_space_slope", 2.0 * jumps_norm)
                    .with("divu_min", rep.divu_min),
                &mesh,
            );
            Ok((rep.two_norm_f, 2.0 * jumps_norm, rep.divu_min, reference, crack_profile(&sol.u), row))
        })
        .collect::<Result<_>>()?;
    res.timings.push(("sourced".into(), clock.seconds()));

    for c in &cases {
        res.cases.push(c.row.clone());
    }
    for s in &sourced {
        res.cases.push(s.5.clone());
    }

    let finest = cfg.h[cfg.h.len() - 1];
    let coarsest = cfg.h[0];
    let mut jump_plot = Plot::new("jumps", "Jump against the 1D oracle", "β", "[u]");
    let mut oracle_pts = Vec::new();
    let mut computed_pts = Vec::new();
    for &beta in &cfg.betas {
        let fin = cases.iter().find(|c| c.beta == beta && c.h == finest).expect("case present");
        let coarse = cases.iter().find(|c| c.beta == beta && c.h == coarsest).expect("case present");
        oracle_pts.push((beta, slab_jump(beta)));
        computed_pts.push((beta, fin.jump));
        res.gates.push(Gate::at_most(
            &format!("jump_beta_{beta}"),
            format!("[u] against 1/(1+β) at h = {finest}"),
            rel(fin.jump, slab_jump(beta)),
            cfg.jump_tolerance,
        ));
        res.gates.push(Gate::at_most(
            &format!("beta_roundtrip_{beta}"),
            "recovered density against input at the finest mesh",
            (fin.beta_rec - beta).abs(),
            beta_tolerance(cfg, beta),
        ));
        res.gates.push(Gate::at_most(
            &format!("beta_refinement_{beta}"),
            "density error at the finest mesh minus that at the coarsest",
            (fin.beta_rec - beta).abs() - (coarse.beta_rec - beta).abs(),
            1e-9,
        ));
    }
    jump_plot = jump_plot.with(Series::line("1/(1+β)", oracle_pts)).with(Series::scatter("computed", computed_pts));
    let divu = cases.iter().map(|c| c.divu_min).chain(sourced.iter().map(|s| s.2)).fold(f64::INFINITY, f64::min);
    res.gates.push(Gate::at_least("divu", "minimum edgewise [u]·flux over all transmission solutions", divu, -cfg.divu_tolerance));
    let last = sourced.last().expect("nonempty mesh list");
    res.gates.push(Gate::at_most(
        "relaxed_slope",
        "relaxed slope 2‖f_h‖ against 2‖f‖ at the finest mesh",
        rel(last.0, last.3),
        cfg.slope_tolerance,
    ));
    res.gates.push(Gate::at_most(
        "test_space_inequality",
        "continuous-space norm minus jump-space norm",
        sourced.iter().map(|s| s.0 - s.1).fold(f64::NEG_INFINITY, f64::max),
        1e-12,
    ));
    res.plots.push(jump_plot);
    res.plots.push(
        Plot::new("profile", "Jump and flux along the crack (sourced case, finest mesh)", "arc length", "value")
            .with(Series::line("[u]", last.4.iter().map(|p| (p.0, p.1)).collect()))
            .with(Series::line("flux", last.4.iter().map(|p| (p.0, p.2)).collect())),
    );
    Ok(res)
}
