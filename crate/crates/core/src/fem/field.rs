//! Nodal P1 fields on a cracked mesh.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point};

/// One scalar per mesh node; seam copies carry independent face values.
#[derive(Debug, Clone)]
pub struct Field {
    mesh: Arc<Mesh>,
    values: Vec<f64>,
    label: Option<String>,
}

impl Field {
    pub fn new(mesh: Arc<Mesh>, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.n_nodes() {
            return Err(Error::InvalidProblem(format!(
                "field has {} values for {} nodes",
                values.len(),
                mesh.n_nodes()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidProblem(format!("non-finite value at node {i}")));
        }
        Ok(Self { mesh, values, label: None })
    }

    pub fn zeros(mesh: Arc<Mesh>) -> Self {
        let n = mesh.n_nodes();
        Self { mesh, values: vec![0.0; n], label: None }
    }

    pub fn constant(mesh: Arc<Mesh>, c: f64) -> Self {
        let n = mesh.n_nodes();
        Self { mesh, values: vec![c; n], label: None }
    }

    /// Nodal interpolant; seam copies are evaluated just inside their own face.
    pub fn from_fn(mesh: Arc<Mesh>, f: impl Fn(Point) -> f64) -> Self {
        let values = (0..mesh.n_nodes()).map(|i| f(mesh.sample_point(i))).collect();
        Self { mesh, values, label: None }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn same_mesh(&self, other: &Field) -> bool {
        Arc::ptr_eq(&self.mesh, &other.mesh)
    }

    fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        if !self.same_mesh(other) {
            return Err(Error::MeshMismatch);
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| f(*a, *b)).collect();
        Ok(Field { mesh: self.mesh.clone(), values, label: None })
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a - b)
    }

    /// `self + s · other`.
    pub fn axpy(&self, s: f64, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a + s * b)
    }

    pub fn scale(&self, s: f64) -> Field {
        Field { mesh: self.mesh.clone(), values: self.values.iter().map(|v| v * s).collect(), label: None }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Constant gradient on triangle `t`.
    pub fn gradient(&self, t: usize) -> Point {
        let tri = self.mesh.triangles()[t];
        let g = barycentric_gradients(self.mesh.triangle_points(t));
        g.iter().zip(tri).fold(Point::default(), |acc, (gi, n)| acc + *gi * self.values[n])
    }

    pub fn gradients(&self) -> Vec<Point> {
        (0..self.mesh.triangles().len()).map(|t| self.gradient(t)).collect()
    }
}

/// Gradients of the three barycentric coordinates of a triangle.
pub fn barycentric_gradients(p: [Point; 3]) -> [Point; 3] {
    let two_a = (p[1] - p[0]).cross(p[2] - p[0]);
    let g = |i: usize| {
        let e = p[(i + 2) % 3] - p[(i + 1) % 3];
        Point::new(-e.y / two_a, e.x / two_a)
    };
    [g(0), g(1), g(2)]
}
