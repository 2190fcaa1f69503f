use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridFunction;

use super::banded::{reverse_cuthill_mckee, BandedLu};
use super::cg::{conjugate_gradient, dot, norm};
use super::{AssembledSystem, SparseMatrix};

const REFINEMENT_STEPS: usize = 2;

/// Largest system solved directly by [`SolveMethod::Auto`], per dimension.
pub const DIRECT_LIMITS: [usize; 3] = [1 << 16, 129 * 129, 17 * 17 * 17];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveMethod {
    /// Banded LU with partial pivoting.
    Direct,
    /// Jacobi-preconditioned conjugate gradients on the interior block.
    Cg,
    /// Direct up to [`DIRECT_LIMITS`], conjugate gradients beyond.
    #[default]
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveOptions {
    pub method: SolveMethod,
    /// Relative residual target `‖L u − b‖₂ ≤ tol·‖b‖₂`.
    pub tol: f64,
    /// Iteration cap for conjugate gradients; `None` means `10·n`.
    pub max_iterations: Option<usize>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { method: SolveMethod::Auto, tol: 1e-10, max_iterations: None }
    }
}

impl SolveOptions {
    pub fn direct() -> Self {
        Self { method: SolveMethod::Direct, ..Self::default() }
    }

    pub fn cg() -> Self {
        Self { method: SolveMethod::Cg, ..Self::default() }
    }
}

/// A solution together with how it was obtained.
#[derive(Debug, Clone)]
pub struct Solution {
    pub value: GridFunction,
    pub method: SolveMethod,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Reusable LU factorisation of a sparse matrix, with reverse Cuthill–McKee
/// reordering when it narrows the band.
#[derive(Debug, Clone)]
pub struct LuSolver {
    matrix: SparseMatrix,
    lu: BandedLu,
    order: Option<Vec<usize>>,
}

impl LuSolver {
    pub fn new(matrix: SparseMatrix) -> Result<Self> {
        let (kl, ku) = matrix.bandwidth();
        let order = reverse_cuthill_mckee(&matrix.adjacency());
        let permuted = matrix.permuted(&order);
        let (pl, pu) = permuted.bandwidth();
        let (lu, order) = if pl + pu < kl + ku {
            (BandedLu::factor(&permuted)?, Some(order))
        } else {
            (BandedLu::factor(&matrix)?, None)
        };
        Ok(Self { matrix, lu, order })
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    fn solve_once(&self, rhs: &[f64]) -> Vec<f64> {
        match &self.order {
            None => {
                let mut x = rhs.to_vec();
                self.lu.solve_in_place(&mut x);
                x
            }
            Some(order) => {
                let mut y: Vec<f64> = order.iter().map(|&o| rhs[o]).collect();
                self.lu.solve_in_place(&mut y);
                let mut x = vec![0.0; rhs.len()];
                for (new, &old) in order.iter().enumerate() {
                    x[old] = y[new];
                }
                x
            }
        }
    }

    /// Solves `A x = b`, refined with residuals accumulated in doubled
    /// precision.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = self.solve_once(rhs);
        for _ in 0..REFINEMENT_STEPS {
            let r = self.matrix.residual(&x, rhs);
            let dx = self.solve_once(&r);
            for (xi, d) in x.iter_mut().zip(dx) {
                *xi += d;
            }
        }
        x
    }
}

/// `‖A x − b‖₂ / ‖b‖₂`, or `‖A x‖₂` when `b = 0`.
pub fn relative_residual(matrix: &SparseMatrix, x: &[f64], rhs: &[f64]) -> f64 {
    let r = matrix.residual(x, rhs);
    let b = norm(rhs);
    if b == 0.0 {
        norm(&r)
    } else {
        norm(&r) / b
    }
}

impl AssembledSystem {
    /// The right-hand side as a vector over the rows, with boundary rows set
    /// to zero.
    pub fn rhs_vector(&self, rhs: &GridFunction) -> Result<Vec<f64>> {
        if rhs.domain().dim() != self.domain().dim() || rhs.level() != self.domain().level() {
            return Err(Error::DomainMismatch);
        }
        let b = if Arc::ptr_eq(rhs.domain(), self.domain()) {
            rhs.values().to_vec()
        } else {
            rhs.restrict(Arc::clone(self.domain()))?.into_values()
        };
        Ok(b.into_iter().enumerate().map(|(i, v)| if self.is_boundary_row(i) { 0.0 } else { v }).collect())
    }

    pub fn resolved_method(&self, method: SolveMethod) -> SolveMethod {
        match method {
            SolveMethod::Auto => {
                if self.domain().len() <= DIRECT_LIMITS[self.domain().dim() - 1] {
                    SolveMethod::Direct
                } else {
                    SolveMethod::Cg
                }
            }
            m => m,
        }
    }

    /// Rows that are not boundary rows.
    pub fn interior_rows(&self) -> Vec<usize> {
        (0..self.domain().len()).filter(|&i| !self.is_boundary_row(i)).collect()
    }

    /// Whether every boundary row reads `u(x) = 0`.
    fn boundary_rows_are_identity(&self) -> bool {
        (0..self.domain().len()).filter(|&i| self.is_boundary_row(i)).all(|i| {
            let mut row = self.matrix().row(i);
            matches!((row.next(), row.next()), (Some((c, v)), None) if c == i && v == 1.0)
        })
    }
}

/// Solves `L_Λ u = rhs` (boundary rows homogeneous).
pub fn solve(system: &AssembledSystem, rhs: &GridFunction, options: SolveOptions) -> Result<GridFunction> {
    solve_detailed(system, rhs, options).map(|s| s.value)
}

pub fn solve_detailed(system: &AssembledSystem, rhs: &GridFunction, options: SolveOptions) -> Result<Solution> {
    let b = system.rhs_vector(rhs)?;
    let domain = Arc::clone(system.domain());
    let method = system.resolved_method(options.method);
    let (x, iterations) = match method {
        SolveMethod::Direct | SolveMethod::Auto => {
            if system.boundary_rows_are_identity() {
                let keep = system.interior_rows();
                let block = system.matrix().principal_submatrix(&keep);
                let bi: Vec<f64> = keep.iter().map(|&i| b[i]).collect();
                let xi = if keep.is_empty() { Vec::new() } else { LuSolver::new(block)?.solve(&bi) };
                (scatter(&keep, &xi, b.len()), 1)
            } else {
                let lu = LuSolver::new(system.matrix().clone())?;
                (lu.solve(&b), 1)
            }
        }
        SolveMethod::Cg => {
            if !system.boundary_rows_are_identity() {
                return Err(Error::NotSymmetric);
            }
            let keep = system.interior_rows();
            let block = system.matrix().principal_submatrix(&keep);
            if !block.is_symmetric(1e-12) {
                return Err(Error::NotSymmetric);
            }
            let bi: Vec<f64> = keep.iter().map(|&i| b[i]).collect();
            let max_iterations = options.max_iterations.unwrap_or(10 * keep.len().max(1));
            let outcome = conjugate_gradient(&block, &bi, options.tol, max_iterations)?;
            (scatter(&keep, &outcome.solution, b.len()), outcome.iterations)
        }
    };
    let relative_residual = relative_residual(system.matrix(), &x, &b);
    if !(relative_residual <= options.tol) {
        return Err(Error::ResidualAboveTolerance { residual: relative_residual, tol: options.tol });
    }
    Ok(Solution { value: GridFunction::new(domain, x)?, method, iterations, relative_residual })
}

fn scatter(rows: &[usize], values: &[f64], n: usize) -> Vec<f64> {
    let mut x = vec![0.0; n];
    for (&i, &v) in rows.iter().zip(values) {
        x[i] = v;
    }
    x
}

/// Smallest eigenvalue of the interior block, by inverse iteration.
pub fn smallest_eigenvalue(system: &AssembledSystem, tol: f64, max_iterations: usize) -> Result<f64> {
    let keep = system.interior_rows();
    if keep.is_empty() {
        return Err(Error::EmptyDomain);
    }
    let block = system.matrix().principal_submatrix(&keep);
    let lu = LuSolver::new(block.clone())?;
    let n = keep.len();
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.01 * ((i * 7919) % 101) as f64 / 101.0).collect();
    let scale = norm(&v);
    v.iter_mut().for_each(|x| *x /= scale);
    let mut lambda = f64::NAN;
    for it in 1..=max_iterations {
        let mut w = lu.solve(&v);
        let s = norm(&w);
        w.iter_mut().for_each(|x| *x /= s);
        let aw = block.apply(&w);
        let next = dot(&w, &aw);
        v = w;
        if it > 1 && (next - lambda).abs() <= tol * next.abs() {
            return Ok(next);
        }
        lambda = next;
    }
    Err(Error::NotConverged { iterations: max_iterations, residual: lambda })
}
