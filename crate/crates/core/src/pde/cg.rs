use crate::error::{Error, Result};

use super::SparseMatrix;

/// Result of an iterative solve.
#[derive(Debug, Clone, PartialEq)]
pub struct CgOutcome {
    pub solution: Vec<f64>,
    pub iterations: usize,
    /// Final `‖b − Ax‖₂ / ‖b‖₂`.
    pub relative_residual: f64,
}

/// Jacobi-preconditioned conjugate gradients for a symmetric positive
/// definite matrix.
pub fn conjugate_gradient(matrix: &SparseMatrix, rhs: &[f64], tol: f64, max_iterations: usize) -> Result<CgOutcome> {
    let n = matrix.size();
    let inv_diag: Vec<f64> = matrix.diagonal().into_iter().map(|d| if d > 0.0 { 1.0 / d } else { f64::NAN }).collect();
    if inv_diag.iter().any(|d| d.is_nan()) {
        return Err(Error::NotSymmetric);
    }
    let bnorm = norm(rhs);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(CgOutcome { solution: x, iterations: 0, relative_residual: 0.0 });
    }
    let mut r = rhs.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, b)| a * b).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for it in 1..=max_iterations {
        let ap = matrix.apply(&p);
        let pap = dot(&p, &ap);
        if pap <= 0.0 || !pap.is_finite() {
            return Err(Error::NotSymmetric);
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rel = norm(&r) / bnorm;
        if rel <= tol {
            return Ok(CgOutcome { solution: x, iterations: it, relative_residual: rel });
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NotConverged { iterations: max_iterations, residual: norm(&r) / bnorm })
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    crate::numeric::sum(a.iter().zip(b).map(|(x, y)| x * y))
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
