//! Piecewise-linear finite-element kernels.

mod assembly;
mod crack;
mod field;
mod norms;
mod quadrature;
mod solver;
mod sparse;
mod trace;

pub use assembly::{
    assemble_crack_robin, assemble_mass, assemble_stiffness, assemble_weighted_mass, load_vector, lumped_mass,
    CrackMeasure, BETA_INF,
};
pub use crack::{flux_on_crack, jump_trace, mean_flux, CrackJump};
pub use field::{barycentric_gradients, Field};
pub use norms::{gradient_energy, h1_norm, h1_seminorm, l2_norm, l2_norm_lumped, matched_distance};
pub use quadrature::{integrate_segment, integrate_triangle};
pub use solver::{solve_spd, Preconditioner, SolveOptions, SolveReport, DEFAULT_TOL};
pub use sparse::{dot, norm2, SparseSymMatrix, Triplets};
pub use trace::trace_sup_estimate;
