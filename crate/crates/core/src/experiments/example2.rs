//! Fattened cracks `∂A_k` whose harmonic solutions converge to a tip field with positive slope bound.

use std::sync::Arc;

use rayon::prelude::*;

use super::common::{mesh_stats, Stopwatch};
use super::config::Example2Config;
use super::example1::CalibratedFamily;
use super::result::{ExperimentResult, Gate, Row};
use super::svg::{Plot, Series};
use crate::error::{Error, Result};
use crate::fem::{gradient_energy, integrate_segment, integrate_triangle, SolveOptions};
use crate::fracture::SlitField;
use crate::mesh::{CrackPath, Domain, Mesh, MeshBuilder, Point, Sizing};
use crate::slope::{recover_f, TestSpace};
use crate::solvers::{solve_neumann_crack, BoundaryData, ProblemSpec, Source};

#[derive(Debug, Clone)]
pub struct FattenedCase {
    pub k: f64,
    pub mesh: Arc<Mesh>,
    /// `‖∇u‖²` of the limit field over the discrete domain.
    pub limit_energy: f64,
    pub energy: f64,
    pub grad_error: f64,
    /// Limit energy carried by `A_k`.
    pub inside_energy: f64,
    pub slope: f64,
    pub pinned: usize,
}

/// Triangles inside the closed crack: the component containing the slit midpoint.
fn inside_triangles(mesh: &Mesh, probe: Point) -> Result<Vec<bool>> {
    let (_, label) = mesh.components();
    let t = (0..mesh.triangles().len())
        .min_by(|&i, &j| {
            let c = |t: usize| {
                let p = mesh.triangle_points(t);
                ((p[0] + p[1] + p[2]) * (1.0 / 3.0)).dist(probe)
            };
            c(i).total_cmp(&c(j))
        })
        .ok_or_else(|| Error::InvalidProblem("empty mesh".into()))?;
    Ok(label.iter().map(|&l| l == label[t]).collect())
}

/// `∫_∂Ω u ∂u/∂n`, equal to `‖∇u‖²` for the harmonic limit with free faces.
pub fn boundary_energy(mesh: &Mesh, sf: &SlitField) -> f64 {
    mesh.boundary_edges()
        .iter()
        .map(|&[i, j]| {
            let (p, q) = (mesh.node(i), mesh.node(j));
            let t = (q - p).normalized();
            let n_out = Point::new(t.y, -t.x);
            integrate_segment(p, q, |x| sf.value(x) * sf.gradient(x).dot(n_out))
        })
        .sum()
}

pub fn fattened_case(cfg: &Example2Config, k: f64) -> Result<FattenedCase> {
    let c = cfg.half_length;
    let (a, b) = (Point::new(c, 0.0), Point::new(-c, 0.0));
    let sf = SlitField::new(&CrackPath::segment(a, b), cfg.kappa, 1.0)?;
    let r = 1.0 / k;
    let stadium = CrackPath::stadium(a, b, r, cfg.h_min);
    let sizing = Sizing::Graded {
        h_min: cfg.h_min,
        h_max: cfg.h_max,
        growth: cfg.growth,
        plateau: r + 2.0 * cfg.h_min,
        focus: vec![(a, b)],
    };
    let domain = Domain::disk(Point::new(0.0, 0.0), cfg.domain_radius);
    let mesh = Arc::new(MeshBuilder::new(domain, sizing).crack(stadium).build()?);
    let inside = inside_triangles(&mesh, Point::new(0.0, 0.0))?;
    let mut fixed_flag = vec![false; mesh.n_nodes()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        if inside[t] {
            for &n in tri {
                fixed_flag[n] = true;
            }
        }
    }
    let fixed: Vec<(usize, f64)> = (0..mesh.n_nodes()).filter(|&i| fixed_flag[i]).map(|i| (i, 0.0)).collect();
    let pinned = fixed.len();
    let mut spec = ProblemSpec::new(mesh.clone(), Source::Zero, BoundaryData::dirichlet(move |p| sf.value(p))).fixed(fixed);
    spec.options = SolveOptions::with_tol(cfg.solver_tol);
    let sol = solve_neumann_crack(&spec)?;
    let g = sol.u.gradients();
    let (mut outside_limit, mut outside_err) = (0.0, 0.0);
    for t in 0..mesh.triangles().len() {
        if inside[t] {
            continue;
        }
        let (p, area) = (mesh.triangle_points(t), mesh.area(t));
        outside_limit += integrate_triangle(p, area, |q| {
            let d = sf.gradient(q);
            d.dot(d)
        });
        outside_err += integrate_triangle(p, area, |q| {
            let d = sf.gradient(q) - g[t];
            d.dot(d)
        });
    }
    let limit_energy = boundary_energy(&mesh, &sf);
    let inside_energy = limit_energy - outside_limit;
    let slope = 2.0 * recover_f(&sol.u, TestSpace::JumpsOnS, &sol.dirichlet_nodes())?.norm;
    Ok(FattenedCase {
        k,
        energy: gradient_energy(&sol.u),
        grad_error: (inside_energy + outside_err).max(0.0).sqrt(),
        limit_energy,
        inside_energy,
        slope,
        pinned,
        mesh,
    })
}

pub fn limit_family(cfg: &Example2Config) -> CalibratedFamily {
    CalibratedFamily {
        domain: Domain::disk(Point::new(0.0, 0.0), cfg.domain_radius),
        tip: Point::new(cfg.half_length, 0.0),
        tail: Point::new(-cfg.half_length, 0.0),
        kappa: cfg.kappa,
        h: cfg.tip_h,
        h_max: cfg.h_max,
        growth: cfg.growth,
        plateau_cells: 12.0,
        step_cells: cfg.step_cells,
        window_cells: [3.0, 10.0],
        tol: cfg.solver_tol,
    }
}

pub fn run_example2_nonlsc(cfg: &Example2Config, config_hash: &str) -> Result<ExperimentResult> {
    let mut res = ExperimentResult::new("example2_nonlsc", config_hash);
    let clock = Stopwatch::start();
    let cases: Vec<FattenedCase> = cfg.ks.par_iter().map(|&k| fattened_case(cfg, k)).collect::<Result<_>>()?;
    res.timings.push(("fattened".into(), clock.seconds()));
    let clock = Stopwatch::start();
    let limit = limit_family(cfg).solve()?;
    res.timings.push(("limit_family".into(), clock.seconds()));

    for c in &cases {
        res.cases.push(mesh_stats(
            Row::new()
                .with("case", "fattened")
                .with("k", c.k)
                .with("energy", c.energy)
                .with("limit_energy", c.limit_energy)
                .with("grad_error", c.grad_error)
                .with("rel_grad_error", c.grad_error / c.limit_energy.sqrt())
                .with("inside_energy", c.inside_energy)
                .with("slope", c.slope)
                .with("pinned_nodes", c.pinned),
            &c.mesh,
        ));
    }
    let m0 = limit.members[0].field();
    res.cases.push(mesh_stats(
        Row::new()
            .with("case", "limit")
            .with("k", f64::INFINITY)
            .with("energy", gradient_energy(m0))
            .with("kappa_fit", limit.kappa_fit)
            .with("df_ds", limit.df_ds)
            .with("velocity_norm", limit.velocity_norm)
            .with("tip_bound", limit.tip_bound)
            .with("probe_quotient", limit.probe_quotient)
            .with("slope", 0.0),
        m0.mesh(),
    ));

    let errs: Vec<f64> = cases.iter().map(|c| c.grad_error).collect();
    let decreasing = errs.windows(2).all(|w| w[1] < w[0]);
    res.gates.push(Gate::holds("grad_error_decreasing", "‖∇u_k − ∇u‖ strictly decreasing in k", decreasing));
    let last = cases.last().expect("nonempty k range");
    res.gates.push(Gate::at_most(
        "grad_error_final",
        format!("‖∇u_k − ∇u‖ / ‖∇u‖ at k = {}", last.k),
        last.grad_error / last.limit_energy.sqrt(),
        cfg.rel_tolerance,
    ));
    let max_slope_ratio = cases.iter().map(|c| c.slope / c.limit_energy.sqrt()).fold(0.0, f64::max);
    res.gates.push(Gate::at_most(
        "fattened_slopes_vanish",
        "2‖f_k‖ / ‖∇u‖ of every harmonic u_k",
        max_slope_ratio,
        1e-6,
    ));
    res.gates.push(Gate::at_least(
        "limit_tip_bound",
        format!("(κ²−1)⁺/‖u̇(0)‖ of the limit with κ = {}", cfg.kappa),
        limit.tip_bound,
        cfg.tip_bound_min,
    ));
    res.plots.push(
        Plot::new("convergence", "Gradient distance to the limit", "k", "‖∇u_k − ∇u‖")
            .log_log()
            .with(Series::line("‖∇u_k − ∇u‖", cases.iter().map(|c| (c.k, c.grad_error)).collect())),
    );
    res.notes.push(
        "boundary data of every u_k is the trace of the limit field; the distance uses ‖∇u‖² = ∫∂Ω u ∂u/∂n".into(),
    );
    Ok(res)
}
