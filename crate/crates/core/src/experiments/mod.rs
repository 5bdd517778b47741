//! Declarative experiments, their tolerance gates and output artifacts.

mod common;
pub mod config;
mod example1;
mod example2;
mod penalized;
mod relaxed;
pub mod result;
mod sieve;
pub mod svg;
mod thm_smooth;

use std::sync::Arc;

pub use common::{fitted_order, rng_for};
pub use config::{Bump, Config, Example1Config, Example2Config, PenalizedConfig, RelaxedSlopeConfig, SieveConfig, ThmSmoothConfig, EXPERIMENTS};
pub use example1::{run_example1, CalibratedFamily, CalibratedOutcome};
pub use example2::{boundary_energy, fattened_case, limit_family, run_example2_nonlsc, FattenedCase};
pub use penalized::{h1_distance, run_penalized_fixedpoint};
pub use relaxed::{run_relaxed_slope, slab_jump};
pub use result::{emit_outputs, ExperimentResult, Gate, Row, Value};
pub use sieve::{effective_beta, run_sieve_gamma, sieve_guide, sieve_triangulation};
pub use thm_smooth::{compatible_slope, run_thm_smooth, EIGEN_SLOPE};

use crate::error::{Error, Result};
use crate::mesh::{build_mesh, CrackPath, Domain, Mesh, Point};

/// One-line descriptions for `list`.
pub fn describe(name: &str) -> &'static str {
    match name {
        "thm_smooth" => "slope 2‖f‖ for cracks without tips: eigenfunction convergence and circle-crack probes",
        "example1" => "calibrated tip fields: dF/ds against 1 − κ², SIF fit, tip slope bound",
        "example2_nonlsc" => "fattened cracks ∂A_k: gradient convergence against a positive limit tip bound",
        "relaxed_slope" => "transmission problems: jump oracle, density round trip, relaxed slope",
        "sieve_gamma" => "perforated cracks: endpoints, energy nesting, effective density",
        "penalized_fixedpoint" => "penalized minimizers reproduce the Neumann-crack solution",
        _ => "unknown experiment",
    }
}

/// Runs one experiment section of `cfg`.
pub fn run_experiment(cfg: &Config, name: &str) -> Result<ExperimentResult> {
    let hash = cfg.hash(name)?;
    let missing = || Error::Config(format!("no section for experiment {name}"));
    match name {
        "thm_smooth" => run_thm_smooth(cfg.thm_smooth.as_ref().ok_or_else(missing)?, cfg.seed, &hash),
        "example1" => run_example1(cfg.example1.as_ref().ok_or_else(missing)?, &hash),
        "example2_nonlsc" => run_example2_nonlsc(cfg.example2_nonlsc.as_ref().ok_or_else(missing)?, &hash),
        "relaxed_slope" => run_relaxed_slope(cfg.relaxed_slope.as_ref().ok_or_else(missing)?, &hash),
        "sieve_gamma" => run_sieve_gamma(cfg.sieve_gamma.as_ref().ok_or_else(missing)?, &hash),
        "penalized_fixedpoint" => run_penalized_fixedpoint(cfg.penalized_fixedpoint.as_ref().ok_or_else(missing)?, &hash),
        _ => Err(Error::Config(format!("unknown experiment {name}"))),
    }
}

/// The finest mesh of each experiment section, for inspection.
pub fn preview_meshes(cfg: &Config) -> Result<Vec<(String, Mesh)>> {
    let mut out = Vec::new();
    if let Some(c) = &cfg.thm_smooth {
        let h = *c.h.last().expect("validated");
        let crack = CrackPath::circle(c.circle_center(), c.circle_radius, h);
        out.push(("thm_smooth".into(), build_mesh(Domain::UnitSquare, Some(crack), h)?));
    }
    if let Some(c) = &cfg.example1 {
        let fam = CalibratedFamily {
            domain: Domain::UnitSquare,
            tip: Point::new(c.tip[0], c.tip[1]),
            tail: Point::new(c.tail[0], c.tail[1]),
            kappa: c.kappas[0],
            h: *c.h.last().expect("validated"),
            h_max: c.h_max,
            growth: c.growth,
            plateau_cells: c.plateau_cells,
            step_cells: c.step_cells,
            window_cells: c.window_cells,
            tol: c.solver_tol,
        };
        let m = crate::mesh::MeshBuilder::new(fam.domain, fam.sizing()).crack(fam.crack()).anchor(fam.tip, fam.tail - fam.tip).build()?;
        out.push(("example1".into(), m));
    }
    if let Some(c) = &cfg.example2_nonlsc {
        let k = *c.ks.last().expect("validated");
        out.push(("example2_nonlsc".into(), Arc::try_unwrap(fattened_case(c, k)?.mesh).unwrap_or_else(|a| (*a).clone())));
    }
    if let Some(c) = &cfg.relaxed_slope {
        let m = common::slab_mesh(*c.h.last().expect("validated"), Vec::new())?;
        out.push(("relaxed_slope".into(), (*m).clone()));
    }
    if let Some(c) = &cfg.sieve_gamma {
        let g = c.gap_fractions[c.gap_fractions.len() / 2];
        let teeth = crate::mesh::build_sieve(&common::vertical_crack(), c.n_teeth[0], g).teeth;
        out.push(("sieve_gamma".into(), Mesh::cut(sieve_triangulation(c)?, &teeth, true)?));
    }
    if let Some(c) = &cfg.penalized_fixedpoint {
        let crack = CrackPath::segment(Point::new(c.crack[0][0], c.crack[0][1]), Point::new(c.crack[1][0], c.crack[1][1]));
        out.push(("penalized_fixedpoint".into(), build_mesh(Domain::UnitSquare, Some(crack), c.h)?));
    }
    Ok(out)
}
