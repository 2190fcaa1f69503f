use std::collections::VecDeque;

use crate::error::{Error, Result};

use super::SparseMatrix;

/// LU factorisation with partial pivoting of a band matrix, stored in the
/// LAPACK `gbtrf` layout: column-major with leading dimension
/// `2·kl + ku + 1`, entry `A(i, j)` at row `kl + ku + i − j` of column `j`.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    ab: Vec<f64>,
    pivots: Vec<usize>,
}

impl BandedLu {
    pub fn factor(matrix: &SparseMatrix) -> Result<Self> {
        let n = matrix.size();
        let (kl, ku) = matrix.bandwidth();
        let ld = 2 * kl + ku + 1;
        let kv = kl + ku;
        let mut ab = vec![0.0; ld * n];
        for i in 0..n {
            for (j, v) in matrix.row(i) {
                ab[j * ld + kv + i - j] += v;
            }
        }
        let mut pivots = vec![0; n];
        let mut ju = 0usize;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let mut jp = 0;
            let mut best = ab[j * ld + kv].abs();
            for r in 1..=km {
                let v = ab[j * ld + kv + r].abs();
                if v > best {
                    best = v;
                    jp = r;
                }
            }
            pivots[j] = j + jp;
            if best == 0.0 || !best.is_finite() {
                return Err(Error::Singular { column: j });
            }
            ju = ju.max((j + ku + jp).min(n - 1));
            if jp != 0 {
                for c in j..=ju {
                    ab.swap(c * ld + kv + j - c, c * ld + kv + j + jp - c);
                }
            }
            let pivot = ab[j * ld + kv];
            for r in 1..=km {
                ab[j * ld + kv + r] /= pivot;
            }
            for c in j + 1..=ju {
                let t = ab[c * ld + kv + j - c];
                if t != 0.0 {
                    for r in 1..=km {
                        ab[c * ld + kv + j + r - c] -= ab[j * ld + kv + r] * t;
                    }
                }
            }
        }
        Ok(Self { n, kl, ku, ab, pivots })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let (n, kl, kv) = (self.n, self.kl, self.kl + self.ku);
        let ld = 2 * kl + self.ku + 1;
        for j in 0..n {
            let p = self.pivots[j];
            if p != j {
                b.swap(j, p);
            }
            let km = kl.min(n - 1 - j);
            let bj = b[j];
            if bj != 0.0 {
                for r in 1..=km {
                    b[j + r] -= self.ab[j * ld + kv + r] * bj;
                }
            }
        }
        for j in (0..n).rev() {
            b[j] /= self.ab[j * ld + kv];
            let bj = b[j];
            if bj != 0.0 {
                for i in j.saturating_sub(kv)..j {
                    b[i] -= self.ab[j * ld + kv + i - j] * bj;
                }
            }
        }
    }
}

/// Reverse Cuthill–McKee ordering (`order[new] = old`) of a symmetric pattern.
pub fn reverse_cuthill_mckee(adjacency: &[Vec<usize>]) -> Vec<usize> {
    let n = adjacency.len();
    let degree = |i: usize| adjacency[i].len();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let seed = (0..n).filter(|&i| !visited[i]).min_by_key(|&i| (degree(i), i)).expect("unvisited node");
        let start = peripheral(adjacency, seed);
        visited[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adjacency[v].iter().copied().filter(|&u| !visited[u]).collect();
            next.sort_by_key(|&u| (degree(u), u));
            for u in next {
                visited[u] = true;
                queue.push_back(u);
            }
        }
    }
    order.reverse();
    order
}

/// A node of minimal degree on the last level of a breadth-first search.
fn peripheral(adjacency: &[Vec<usize>], seed: usize) -> usize {
    let mut dist = vec![usize::MAX; adjacency.len()];
    dist[seed] = 0;
    let mut queue = VecDeque::from([seed]);
    let mut last = seed;
    while let Some(v) = queue.pop_front() {
        last = v;
        for &u in &adjacency[v] {
            if dist[u] == usize::MAX {
                dist[u] = dist[v] + 1;
                queue.push_back(u);
            }
        }
    }
    let far = dist[last];
    (0..adjacency.len()).filter(|&i| dist[i] == far).min_by_key(|&i| (adjacency[i].len(), i)).unwrap_or(seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut m: Vec<Vec<f64>> = a
            .iter()
            .zip(b)
            .map(|(r, &v)| {
                let mut r = r.clone();
                r.push(v);
                r
            })
            .collect();
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| m[i][k].abs().total_cmp(&m[j][k].abs())).unwrap();
            m.swap(k, p);
            for i in k + 1..n {
                let f = m[i][k] / m[k][k];
                for j in k..=n {
                    m[i][j] -= f * m[k][j];
                }
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| m[i][j] * x[j]).sum();
            x[i] = (m[i][n] - s) / m[i][i];
        }
        x
    }

    #[test]
    fn matches_dense_elimination_with_pivoting() {
        let n = 9;
        let a: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let d = i as i64 - j as i64;
                        if d == 0 {
                            0.1 * (i as f64 + 1.0)
                        } else if (-2..=1).contains(&d) {
                            1.0 + 0.3 * (i * j) as f64 % 1.7
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        let rows = a
            .iter()
            .map(|r| r.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(j, v)| (j, *v)).collect())
            .collect();
        let m = SparseMatrix::from_rows(n, rows);
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let lu = BandedLu::factor(&m).unwrap();
        let mut x = b.clone();
        lu.solve_in_place(&mut x);
        let expected = dense_solve(&a, &b);
        for (u, v) in x.iter().zip(&expected) {
            assert!((u - v).abs() < 1e-10 * v.abs().max(1.0));
        }
    }

    #[test]
    fn singular_matrix_is_reported() {
        let m = SparseMatrix::from_rows(2, vec![vec![(0, 1.0), (1, 1.0)], vec![(0, 1.0), (1, 1.0)]]);
        assert!(matches!(BandedLu::factor(&m), Err(Error::Singular { column: 1 })));
    }

    #[test]
    fn rcm_shrinks_cycle_bandwidth() {
        let n = 50;
        let rows = (0..n)
            .map(|i| vec![((i + n - 1) % n, -1.0), (i, 2.0), ((i + 1) % n, -1.0)])
            .map(|mut r: Vec<(usize, f64)>| {
                r.sort_by_key(|e| e.0);
                r
            })
            .collect();
        let m = SparseMatrix::from_rows(n, rows);
        assert_eq!(m.bandwidth(), (n - 1, n - 1));
        let order = reverse_cuthill_mckee(&m.adjacency());
        let p = m.permuted(&order);
        let (kl, ku) = p.bandwidth();
        assert!(kl <= 2 && ku <= 2, "{kl} {ku}");
    }
}
