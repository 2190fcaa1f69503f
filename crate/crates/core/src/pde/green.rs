use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridFunction, MAX_DIM};
use crate::numeric::DotAccumulator;

use super::{solve, AssembledSystem, SolveOptions};

/// Solution of `L_Λ u = Nᵏ χ_source`, the grid fundamental solution.
pub fn fundamental_solution(system: &AssembledSystem, source: &[f64], options: SolveOptions) -> Result<GridFunction> {
    let domain = system.domain();
    let level = domain.level();
    if source.len() != domain.dim() {
        return Err(Error::DimensionMismatch { expected: domain.dim(), got: source.len() });
    }
    let mut index = [0i64; MAX_DIM];
    for (a, &x) in source.iter().enumerate() {
        index[a] = level.exact_index(x).ok_or_else(|| {
            Error::InvalidArgument(format!("source {source:?} is not a grid point at N = {}", level.n_cells()))
        })?;
    }
    let id = domain
        .id_of(&index[..source.len()])
        .ok_or_else(|| Error::InvalidArgument(format!("source {source:?} is outside the domain")))?;
    let weight = level.n().powi(domain.dim() as i32);
    let mut values = vec![0.0; domain.len()];
    values[id] = weight;
    solve(system, &GridFunction::new(Arc::clone(domain), values)?, options)
}

/// How `u₀(x − y)` is read when the displacement leaves the domain of `u₀`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConvolutionMode {
    /// Displacements wrap around the box of `u₀`.
    #[default]
    Periodic,
    /// `u₀` is zero outside its domain.
    ZeroExtended,
}

/// `u_g(x) = εᵏ Σ_y g(y) u₀(x − y)` on the domain of `g`. With `u₀` the
/// fundamental solution at the origin this solves `L_Λ u_g = g`.
pub fn convolve(g: &GridFunction, u0: &GridFunction, mode: ConvolutionMode) -> Result<GridFunction> {
    if g.dim() != u0.dim() {
        return Err(Error::DimensionMismatch { expected: g.dim(), got: u0.dim() });
    }
    if g.level() != u0.level() {
        return Err(Error::LevelMismatch { left: g.level().n_cells(), right: u0.level().n_cells() });
    }
    let dim = g.dim();
    let base = u0.domain();
    if mode == ConvolutionMode::Periodic && !base.is_full_box() {
        return Err(Error::InvalidArgument("periodic convolution needs u0 on a full index box".into()));
    }
    let weight = g.level().n().powi(dim as i32);
    let domain = Arc::clone(g.domain());
    let support: Vec<(usize, f64)> = g.values().iter().copied().enumerate().filter(|&(_, v)| v != 0.0).collect();
    let values = (0..domain.len())
        .into_par_iter()
        .map(|id| {
            let x = domain.index(id);
            let mut d = [0i64; MAX_DIM];
            let mut acc = DotAccumulator::new();
            for &(j, gy) in &support {
                let y = domain.index(j);
                for a in 0..dim {
                    d[a] = x[a] - y[a];
                    if mode == ConvolutionMode::Periodic {
                        let lo = base.lower_corner()[a];
                        d[a] = (d[a] - lo).rem_euclid(base.shape()[a] as i64) + lo;
                    }
                }
                acc.add_product(gy, u0.at(&d[..dim]));
            }
            acc.quotient(weight)
        })
        .collect();
    GridFunction::new(domain, values)
}
