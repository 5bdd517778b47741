use thiserror::Error;

/// Geometry problems detected while building or cutting a mesh.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum GeometryError {
    #[error("crack touches or leaves the domain boundary near ({x:.6}, {y:.6})")]
    TouchesBoundary { x: f64, y: f64 },
    #[error("crack path intersects itself")]
    SelfIntersecting,
    #[error("crack paths {0} and {1} intersect")]
    CracksIntersect(usize, usize),
    #[error("crack extension of length {0} leaves the domain")]
    ExtensionExitsDomain(f64),
    #[error("degenerate crack path: {0}")]
    Degenerate(String),
    #[error("crack is not resolved by the mesh edges (found length {found}, expected {expected})")]
    NotResolved { found: f64, expected: f64 },
    #[error("unsupported crack topology at node {0}: more than two faces meet")]
    Junction(usize),
    #[error("invalid mesh size {0}")]
    InvalidSize(f64),
    #[error("triangulation failed: {0}")]
    Triangulation(String),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("degenerate triangle {index} (signed area {area:e})")]
    DegenerateTriangle { index: usize, area: f64 },
    #[error("conjugate gradient did not converge after {iterations} iterations (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("fields live on different meshes")]
    MeshMismatch,
    #[error("fit failed: {0}")]
    Fit(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
