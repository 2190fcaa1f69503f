use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{alpha_diff, Direction, GridDomain, GridFunction, MultiIndex, PointwiseResidual, MAX_DIM};

use super::SparseMatrix;

/// Coefficient function `a_{αβ}(x)`.
pub type Coefficient = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct Term {
    pub alpha: MultiIndex,
    pub beta: MultiIndex,
    pub coefficient: Coefficient,
    /// Set when the coefficient is known to be constant.
    pub constant: Option<f64>,
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Term")
            .field("alpha", &self.alpha)
            .field("beta", &self.beta)
            .field("constant", &self.constant)
            .finish_non_exhaustive()
    }
}

/// Divergence-form operator `L u = Σ (−1)^{|α|} D^α(a_{αβ} D^β u)` of order `2h`.
#[derive(Debug, Clone)]
pub struct OperatorSpec {
    dim: usize,
    order: u32,
    terms: Vec<Term>,
}

impl OperatorSpec {
    pub fn new(dim: usize, order: u32) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::DimensionMismatch { expected: MAX_DIM, got: dim });
        }
        if order == 0 {
            return Err(Error::InvalidArgument("operator order h must be at least 1".into()));
        }
        Ok(Self { dim, order, terms: Vec::new() })
    }

    fn check(&self, alpha: &MultiIndex, beta: &MultiIndex) -> Result<()> {
        for m in [alpha, beta] {
            if m.dim() != self.dim {
                return Err(Error::DimensionMismatch { expected: self.dim, got: m.dim() });
            }
            if m.order() > self.order {
                return Err(Error::InvalidArgument(format!(
                    "multi-index {:?} exceeds operator order {}",
                    m.components(),
                    self.order
                )));
            }
        }
        Ok(())
    }

    pub fn with_term(
        mut self,
        alpha: MultiIndex,
        beta: MultiIndex,
        coefficient: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        self.check(&alpha, &beta)?;
        self.terms.push(Term { alpha, beta, coefficient: Arc::new(coefficient), constant: None });
        Ok(self)
    }

    pub fn with_constant_term(mut self, alpha: MultiIndex, beta: MultiIndex, value: f64) -> Result<Self> {
        self.check(&alpha, &beta)?;
        self.terms.push(Term { alpha, beta, coefficient: Arc::new(move |_| value), constant: Some(value) });
        Ok(self)
    }

    /// `−Σᵢ Δ⁺ᵢΔ⁻ᵢ`, the negative grid Laplacian.
    pub fn negative_laplacian(dim: usize) -> Result<Self> {
        let mut spec = Self::new(dim, 1)?;
        for i in 0..dim {
            spec = spec.with_constant_term(MultiIndex::unit(dim, i), MultiIndex::unit(dim, i), 1.0)?;
        }
        Ok(spec)
    }

    /// Adds the zeroth-order term `c·u`.
    pub fn with_mass(self, c: f64) -> Result<Self> {
        let dim = self.dim;
        self.with_constant_term(MultiIndex::zero(dim), MultiIndex::zero(dim), c)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_constant_coefficient(&self) -> bool {
        self.terms.iter().all(|t| t.constant.is_some())
    }
}

/// How the operator treats the edge of the domain.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    /// Rows `Δ⁺^α u = 0` on `∂^α_Λ` for `|α| ≤ h − 1`.
    #[default]
    Dirichlet,
    /// Indices wrap around the domain box; no boundary rows.
    Periodic,
}

/// Sparse realisation of `L_Λ` on a domain, one row per point.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    domain: Arc<GridDomain>,
    matrix: SparseMatrix,
    boundary_rows: Vec<Option<MultiIndex>>,
    spec: OperatorSpec,
    boundary: Boundary,
}

struct Indexer<'a> {
    domain: &'a GridDomain,
    periodic: bool,
}

impl Indexer<'_> {
    fn column(&self, index: &[i64], offset: &[i64]) -> Option<usize> {
        let dim = index.len();
        let mut y = [0i64; MAX_DIM];
        for a in 0..dim {
            y[a] = index[a] + offset[a];
            if self.periodic {
                let lo = self.domain.lower_corner()[a];
                let p = self.domain.shape()[a] as i64;
                y[a] = (y[a] - lo).rem_euclid(p) + lo;
            }
        }
        self.domain.id_of(&y[..dim])
    }
}

fn push(row: &mut Vec<(usize, f64)>, col: usize, v: f64) {
    row.push((col, v));
}

fn finish_row(mut row: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    row.sort_by_key(|e| e.0);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(row.len());
    for (c, v) in row {
        match out.last_mut() {
            Some((lc, lv)) if *lc == c => *lv += v,
            _ => out.push((c, v)),
        }
    }
    out
}

/// Assemble `L_Λ` on `domain`. Outer differences are forward, inner ones
/// backward, and the coefficient of each outer offset `δ` is evaluated at
/// `x + δε`. Reads outside the domain are 0 (or wrap, when periodic).
pub fn assemble(spec: &OperatorSpec, domain: Arc<GridDomain>, boundary: Boundary) -> Result<AssembledSystem> {
    if spec.dim() != domain.dim() {
        return Err(Error::DimensionMismatch { expected: domain.dim(), got: spec.dim() });
    }
    let periodic = boundary == Boundary::Periodic;
    if periodic && !domain.is_full_box() {
        return Err(Error::InvalidArgument("periodic assembly needs a full index box".into()));
    }
    let dim = domain.dim();
    let level = domain.level();
    let n = level.n();
    let indexer = Indexer { domain: &domain, periodic };
    let boundary_alphas = if periodic { Vec::new() } else { MultiIndex::all_up_to(dim, spec.order() - 1) };
    let expansions: Vec<(Vec<(Vec<i64>, f64)>, Vec<(Vec<i64>, f64)>, &Term)> = spec
        .terms()
        .iter()
        .map(|t| {
            let outer = t
                .alpha
                .sub_indices()
                .into_iter()
                .map(|(d, c, ord)| (d, c * if ord % 2 == 0 { 1.0 } else { -1.0 } * n.powi(t.alpha.order() as i32)))
                .collect();
            let inner = t
                .beta
                .sub_indices()
                .into_iter()
                .map(|(g, c, ord)| {
                    let neg: Vec<i64> = g.iter().map(|v| -v).collect();
                    (neg, c * if ord % 2 == 0 { 1.0 } else { -1.0 } * n.powi(t.beta.order() as i32))
                })
                .collect();
            (outer, inner, t)
        })
        .collect();
    let boundary_expansions: Vec<(MultiIndex, Vec<(Vec<i64>, f64)>)> = boundary_alphas
        .iter()
        .map(|a| {
            let e = a
                .sub_indices()
                .into_iter()
                .map(|(d, c, ord)| {
                    let sign = if (a.order() - ord) % 2 == 0 { 1.0 } else { -1.0 };
                    (d, c * sign * n.powi(a.order() as i32))
                })
                .collect();
            (a.clone(), e)
        })
        .collect();

    let rows: Vec<Result<(Vec<(usize, f64)>, Option<MultiIndex>)>> = (0..domain.len())
        .into_par_iter()
        .map(|id| {
            let x = domain.index(id);
            let mut row = Vec::new();
            let mut y = [0i64; MAX_DIM];
            for (alpha, stencil) in &boundary_expansions {
                for a in 0..dim {
                    y[a] = x[a] + i64::from(alpha.components()[a]);
                }
                let ya = &y[..dim];
                if domain.contains_index(ya) && domain.on_lambda_boundary(ya) {
                    for (off, w) in stencil {
                        if let Some(c) = indexer.column(x, off) {
                            push(&mut row, c, *w);
                        }
                    }
                    return Ok((finish_row(row), Some(alpha.clone())));
                }
            }
            let mut coords = [0.0; MAX_DIM];
            let mut shift = [0i64; MAX_DIM];
            for (outer, inner, term) in &expansions {
                for (delta, wo) in outer {
                    for a in 0..dim {
                        coords[a] = level.coordinate(x[a] + delta[a]);
                    }
                    let coeff = match term.constant {
                        Some(c) => c,
                        None => (term.coefficient)(&coords[..dim]),
                    };
                    if !coeff.is_finite() {
                        return Err(Error::NonFiniteCoefficient { point: coords[..dim].to_vec() });
                    }
                    if coeff == 0.0 {
                        continue;
                    }
                    for (gamma, wi) in inner {
                        for a in 0..dim {
                            shift[a] = delta[a] + gamma[a];
                        }
                        if let Some(c) = indexer.column(x, &shift[..dim]) {
                            push(&mut row, c, wo * coeff * wi);
                        }
                    }
                }
            }
            Ok((finish_row(row), None))
        })
        .collect();
    let mut matrix_rows = Vec::with_capacity(rows.len());
    let mut boundary_rows = Vec::with_capacity(rows.len());
    for r in rows {
        let (row, b) = r?;
        matrix_rows.push(row);
        boundary_rows.push(b);
    }
    Ok(AssembledSystem {
        matrix: SparseMatrix::from_rows(domain.len(), matrix_rows),
        domain,
        boundary_rows,
        spec: spec.clone(),
        boundary,
    })
}

impl AssembledSystem {
    pub fn domain(&self) -> &Arc<GridDomain> {
        &self.domain
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    pub fn spec(&self) -> &OperatorSpec {
        &self.spec
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// The boundary multi-index `α` of a row, if it is a boundary row.
    pub fn boundary_row(&self, row: usize) -> Option<&MultiIndex> {
        self.boundary_rows[row].as_ref()
    }

    pub fn is_boundary_row(&self, row: usize) -> bool {
        self.boundary_rows[row].is_some()
    }

    pub fn boundary_count(&self) -> usize {
        self.boundary_rows.iter().filter(|b| b.is_some()).count()
    }

    /// `L_Λ u` by sparse multiplication.
    pub fn apply(&self, u: &GridFunction) -> Result<GridFunction> {
        let v = u.restrict(Arc::clone(&self.domain))?;
        GridFunction::new(Arc::clone(&self.domain), self.matrix.apply(v.values()))
    }

    /// `L_Λ u` evaluated independently by composing grid difference operators
    /// on a padded copy of the domain (boundary rows give `Δ⁺^α u`).
    pub fn apply_formula(&self, u: &GridFunction) -> Result<GridFunction> {
        let h = i64::from(self.spec.order());
        let padded = Arc::new(self.domain.padded(h));
        let indexer = Indexer { domain: &self.domain, periodic: self.boundary == Boundary::Periodic };
        let zero = [0i64; MAX_DIM];
        let dim = self.domain.dim();
        let up = GridFunction::from_index_fn(Arc::clone(&padded), |p| {
            indexer.column(p, &zero[..dim]).map_or(0.0, |c| u.at(self.domain.index(c)))
        });
        let mut parts = Vec::new();
        for term in self.spec.terms() {
            let inner = alpha_diff(&up, &term.beta, Direction::Backward)?;
            let weighted = GridFunction::from_index_fn(Arc::clone(inner.domain()), |p| {
                let mut x = [0.0; MAX_DIM];
                for a in 0..dim {
                    x[a] = self.domain.level().coordinate(p[a]);
                }
                (term.coefficient)(&x[..dim]) * inner.at(p)
            });
            let outer = alpha_diff(&weighted, &term.alpha, Direction::Forward)?;
            let sign = if term.alpha.order() % 2 == 0 { 1.0 } else { -1.0 };
            parts.push((sign, outer));
        }
        let mut boundary_cache: Vec<(MultiIndex, GridFunction)> = Vec::new();
        let mut values = Vec::with_capacity(self.domain.len());
        for (id, b) in self.boundary_rows.iter().enumerate() {
            let x = self.domain.index(id);
            match b {
                Some(alpha) => {
                    if !boundary_cache.iter().any(|(a, _)| a == alpha) {
                        boundary_cache.push((alpha.clone(), alpha_diff(&up, alpha, Direction::Forward)?));
                    }
                    let (_, g) = boundary_cache.iter().find(|(a, _)| a == alpha).expect("cached");
                    values.push(g.at(x));
                }
                None => values.push(parts.iter().map(|(s, g)| s * g.at(x)).sum()),
            }
        }
        GridFunction::new(Arc::clone(&self.domain), values)
    }

    /// Matrix product minus the composed formula, with per-row scale
    /// `Σⱼ |Aᵢⱼ uⱼ|`.
    pub fn stencil_residual(&self, u: &GridFunction) -> Result<PointwiseResidual> {
        let v = u.restrict(Arc::clone(&self.domain))?;
        let a = self.matrix.apply(v.values());
        let f = self.apply_formula(&v)?;
        let scale = self.matrix.abs_apply(v.values());
        let residual: Vec<f64> = a.iter().zip(f.values()).map(|(x, y)| x - y).collect();
        Ok(PointwiseResidual { residual: GridFunction::new(Arc::clone(&self.domain), residual)?, scale })
    }
}
