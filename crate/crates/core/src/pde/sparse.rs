use rayon::prelude::*;

use crate::numeric::DotAccumulator;

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseMatrix {
    /// Square matrix of size `n` from per-row `(column, value)` lists.
    pub fn from_rows(n: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for row in rows {
            for (c, v) in row {
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        Self { n, row_ptr, cols, vals }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).into_par_iter().map(|i| self.row(i).map(|(c, v)| v * x[c]).sum()).collect()
    }

    /// `b − A x` with each row accumulated in doubled precision.
    pub fn residual(&self, x: &[f64], b: &[f64]) -> Vec<f64> {
        (0..self.n)
            .into_par_iter()
            .map(|i| {
                let mut acc = DotAccumulator::new();
                acc.add(b[i]);
                for (c, v) in self.row(i) {
                    acc.add_product(-v, x[c]);
                }
                acc.value()
            })
            .collect()
    }

    /// `Σⱼ |Aᵢⱼ xⱼ|` per row.
    pub fn abs_apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).into_par_iter().map(|i| self.row(i).map(|(c, v)| (v * x[c]).abs()).sum()).collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// Lower and upper bandwidth.
    pub fn bandwidth(&self) -> (usize, usize) {
        let mut kl = 0;
        let mut ku = 0;
        for i in 0..self.n {
            for (c, _) in self.row(i) {
                if c < i {
                    kl = kl.max(i - c);
                } else {
                    ku = ku.max(c - i);
                }
            }
        }
        (kl, ku)
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Whether `|Aᵢⱼ − Aⱼᵢ| ≤ tol · max|A|` for all entries.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        let bound = tol * self.max_abs();
        (0..self.n).all(|i| self.row(i).all(|(j, v)| (v - self.get(j, i)).abs() <= bound))
    }

    /// The submatrix on `keep` (rows and columns), renumbered in order.
    pub fn principal_submatrix(&self, keep: &[usize]) -> Self {
        let mut map = vec![usize::MAX; self.n];
        for (k, &i) in keep.iter().enumerate() {
            map[i] = k;
        }
        let rows = keep
            .iter()
            .map(|&i| self.row(i).filter(|&(c, _)| map[c] != usize::MAX).map(|(c, v)| (map[c], v)).collect())
            .collect();
        Self::from_rows(keep.len(), rows)
    }

    /// `P A Pᵀ` for the ordering `order[new] = old`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        let mut inv = vec![0; self.n];
        for (new, &old) in order.iter().enumerate() {
            inv[old] = new;
        }
        let rows = order
            .iter()
            .map(|&old| {
                let mut r: Vec<(usize, f64)> = self.row(old).map(|(c, v)| (inv[c], v)).collect();
                r.sort_by_key(|e| e.0);
                r
            })
            .collect();
        Self::from_rows(self.n, rows)
    }

    /// Symmetrised adjacency lists (without the diagonal).
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for i in 0..self.n {
            for (c, _) in self.row(i) {
                if c != i {
                    adj[i].push(c);
                    adj[c].push(i);
                }
            }
        }
        for a in &mut adj {
            a.sort_unstable();
            a.dedup();
        }
        adj
    }
}
