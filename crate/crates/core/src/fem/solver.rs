//! Preconditioned conjugate gradients with prescribed nodal values.

use super::sparse::{dot, SparseSymMatrix};
use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum Preconditioner {
    Jacobi,
    /// Jacobi with 2×2 blocks on the given node pairs (seam plus/minus copies).
    BlockJacobi(Vec<(usize, usize)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub tol: f64,
    /// Defaults to `50·√dofs`.
    pub max_iter: Option<usize>,
    pub preconditioner: Preconditioner,
    /// Starting values on free rows; the residual is still measured against the zero start.
    pub initial_guess: Option<Vec<f64>>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { tol: DEFAULT_TOL, max_iter: None, preconditioner: Preconditioner::Jacobi, initial_guess: None }
    }
}

impl SolveOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// `‖b − Ax‖ / ‖b − A x₀‖` on free rows, `x₀` carrying only the prescribed values.
    pub relative_residual: f64,
    pub reference_norm: f64,
}

enum Block {
    Scalar(usize, f64),
    Pair(usize, usize, [f64; 3]),
}

fn build_preconditioner(a: &SparseSymMatrix, free: &[bool], p: &Preconditioner) -> Vec<Block> {
    let n = a.dim();
    let d = a.diagonal();
    let mut used = vec![false; n];
    let mut blocks = Vec::new();
    if let Preconditioner::BlockJacobi(pairs) = p {
        for &(i, j) in pairs {
            if i == j || !free[i] || !free[j] || used[i] || used[j] {
                continue;
            }
            let (aii, ajj, aij) = (d[i], d[j], a.get(i, j));
            let det = aii * ajj - aij * aij;
            if det > 1e-14 * aii * ajj {
                blocks.push(Block::Pair(i, j, [ajj / det, -aij / det, aii / det]));
                used[i] = true;
                used[j] = true;
            }
        }
    }
    for i in 0..n {
        if free[i] && !used[i] {
            let inv = if d[i] > 0.0 { 1.0 / d[i] } else { 1.0 };
            blocks.push(Block::Scalar(i, inv));
        }
    }
    blocks
}

fn apply(blocks: &[Block], r: &[f64], z: &mut [f64]) {
    for b in blocks {
        match *b {
            Block::Scalar(i, inv) => z[i] = inv * r[i],
            Block::Pair(i, j, [m00, m01, m11]) => {
                let (ri, rj) = (r[i], r[j]);
                z[i] = m00 * ri + m01 * rj;
                z[j] = m01 * ri + m11 * rj;
            }
        }
    }
}

/// Solves `A x = b` on the free rows with `x[i] = v` for every `(i, v)` in `constraints`.
pub fn solve_spd(
    a: &SparseSymMatrix,
    b: &[f64],
    constraints: &[(usize, f64)],
    opts: &SolveOptions,
) -> Result<(Vec<f64>, SolveReport)> {
    let n = a.dim();
    if b.len() != n {
        return Err(Error::InvalidProblem(format!("rhs length {} for dimension {n}", b.len())));
    }
    let mut free = vec![true; n];
    let mut x = vec![0.0; n];
    for &(i, v) in constraints {
        if i >= n {
            return Err(Error::InvalidProblem(format!("constraint on node {i} out of range")));
        }
        free[i] = false;
        x[i] = v;
    }
    let ndof = free.iter().filter(|f| **f).count();
    let max_iter = opts.max_iter.unwrap_or_else(|| ((50.0 * (ndof as f64).sqrt()).ceil() as usize).max(50));

    let mut r = a.matvec(&x);
    for i in 0..n {
        r[i] = if free[i] { b[i] - r[i] } else { 0.0 };
    }
    let r0 = dot(&r, &r).sqrt();
    if r0 == 0.0 || ndof == 0 {
        return Ok((x, SolveReport { iterations: 0, relative_residual: 0.0, reference_norm: r0 }));
    }
    if let Some(x0) = &opts.initial_guess {
        if x0.len() != n {
            return Err(Error::InvalidProblem(format!("initial guess length {} for dimension {n}", x0.len())));
        }
        for i in 0..n {
            if free[i] {
                x[i] = x0[i];
            }
        }
        r = a.matvec(&x);
        for i in 0..n {
            r[i] = if free[i] { b[i] - r[i] } else { 0.0 };
        }
        let rel0 = dot(&r, &r).sqrt() / r0;
        if rel0 <= opts.tol {
            return Ok((x, SolveReport { iterations: 0, relative_residual: rel0, reference_norm: r0 }));
        }
    }
    let blocks = build_preconditioner(a, &free, &opts.preconditioner);
    let mut z = vec![0.0; n];
    apply(&blocks, &r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut rel = 1.0;
    for it in 1..=max_iter {
        a.matvec_into(&p, &mut ap);
        for i in 0..n {
            if !free[i] {
                ap[i] = 0.0;
            }
        }
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::NoConvergence { iterations: it, residual: rel });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        rel = dot(&r, &r).sqrt() / r0;
        if rel <= opts.tol {
            // confirm with the true residual
            let mut tr = a.matvec(&x);
            for i in 0..n {
                tr[i] = if free[i] { b[i] - tr[i] } else { 0.0 };
            }
            let true_rel = dot(&tr, &tr).sqrt() / r0;
            if true_rel <= opts.tol {
                return Ok((x, SolveReport { iterations: it, relative_residual: true_rel, reference_norm: r0 }));
            }
            r = tr;
        }
        apply(&blocks, &r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NoConvergence { iterations: max_iter, residual: rel })
}
