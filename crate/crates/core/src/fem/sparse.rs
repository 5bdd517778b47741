//! Symmetric sparse matrices stored as the lower triangle in CSR form.

use std::fmt::Write as _;

/// Accumulates `(i, j, v)` contributions; duplicates are summed on compression.
#[derive(Debug, Clone, Default)]
pub struct Triplets {
    n: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl Triplets {
    pub fn new(n: usize) -> Self {
        Self { n, entries: Vec::new() }
    }

    /// Adds `v` at `(i, j)` of the symmetric matrix (and implicitly at `(j, i)`).
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.n && j < self.n);
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        self.entries.push((r, c, v));
    }

    pub fn build(mut self) -> SparseSymMatrix {
        // stable sort keeps summation order deterministic
        self.entries.sort_by_key(|e| (e.0, e.1));
        let mut row_ptr = vec![0usize; self.n + 1];
        let mut cols = Vec::with_capacity(self.entries.len());
        let mut vals: Vec<f64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in self.entries {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..self.n {
            row_ptr[i + 1] += row_ptr[i];
        }
        SparseSymMatrix { n: self.n, row_ptr, cols, vals }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseSymMatrix {
    pub fn zeros(n: usize) -> Self {
        Triplets::new(n).build()
    }

    pub fn identity(n: usize) -> Self {
        let mut t = Triplets::new(n);
        for i in 0..n {
            t.add(i, i, 1.0);
        }
        t.build()
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let mut t = Triplets::new(d.len());
        for (i, &v) in d.iter().enumerate() {
            t.add(i, i, v);
        }
        t.build()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz_lower(&self) -> usize {
        self.vals.len()
    }

    /// Stored entries `(i, j, v)` with `i ≥ j`.
    pub fn lower_entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (i, self.cols[k], self.vals[k]))
        })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        let row = &self.cols[self.row_ptr[r]..self.row_ptr[r + 1]];
        match row.binary_search(&c) {
            Ok(k) => self.vals[self.row_ptr[r] + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        y.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.n {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.cols[k];
                let v = self.vals[k];
                acc += v * x[j];
                if j != i {
                    y[j] += v * x[i];
                }
            }
            y[i] += acc;
        }
    }

    /// `xᵀ A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(x, &self.matvec(y))
    }

    /// `xᵀ A x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        self.bilinear(x, x)
    }

    /// `Σ cᵢ Aᵢ` over matrices of equal dimension.
    pub fn linear_combination(terms: &[(f64, &SparseSymMatrix)]) -> SparseSymMatrix {
        let n = terms.first().map(|t| t.1.n).unwrap_or(0);
        let mut t = Triplets::new(n);
        for (c, m) in terms {
            assert_eq!(m.n, n, "dimension mismatch");
            for (i, j, v) in m.lower_entries() {
                t.add(i, j, c * v);
            }
        }
        t.build()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, j, v) in self.lower_entries() {
            d[i][j] = v;
            d[j][i] = v;
        }
        d
    }

    /// Coordinate-format dump (`i j v`, lower triangle, 0-based).
    pub fn to_coo_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} {} {}", self.n, self.n, self.vals.len());
        for (i, j, v) in self.lower_entries() {
            let _ = writeln!(s, "{i} {j} {v:e}");
        }
        s
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed_and_symmetric() {
        let mut t = Triplets::new(3);
        t.add(0, 1, 1.0);
        t.add(1, 0, 2.0);
        t.add(2, 2, 5.0);
        let m = t.build();
        assert_eq!(m.get(0, 1), 3.0);
        assert_eq!(m.get(1, 0), 3.0);
        assert_eq!(m.matvec(&[1.0, 1.0, 1.0]), vec![3.0, 3.0, 5.0]);
        let d = m.to_dense();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(d[i][j], d[j][i]);
            }
        }
    }
}
