//! Finite-element tools for slopes of the crack energy `‖∇u‖² + H¹(S)` on cracked planar domains.

pub mod error;
pub mod experiments;
pub mod fem;
pub mod fracture;
pub mod mesh;
pub mod slope;
pub mod solvers;

pub use error::{Error, GeometryError, Result};
