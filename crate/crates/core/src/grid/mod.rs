//! Uniform grids, discretised domains, grid functions and their calculus.
//!
//! A [`GridLevel`] fixes the resolution `N` (step `ε = 1/N`) and a finite
//! window `[-L, L]ᵏ`. A [`GridDomain`] is the set of window points that lie in
//! an open set Ω, and a [`GridFunction`] is a table of values on a domain.
//! Reads outside the domain return 0.

mod domain;
mod function;
mod level;
mod multi_index;
mod ops;
mod region;

pub use domain::GridDomain;
pub use function::GridFunction;
pub use level::{make_level, GridLevel, DEFAULT_BASE};
pub use multi_index::MultiIndex;
pub use ops::{
    alpha_diff, diff, ftc_residual, grid_integral, inner_product, lp_norm, product_rule_residual, shift,
    step_extension_eval, summation_by_parts_residual, Direction, PointwiseResidual, ProductForm,
};
pub use region::{Ball, BoxRegion, FnRegion, Region, Whole};

/// Largest supported spatial dimension.
pub const MAX_DIM: usize = 3;

/// Visit every index tuple in the box `bounds[a].0 ..= bounds[a].1`, last
/// axis fastest.
pub fn for_each_index(bounds: &[(i64, i64)], mut visit: impl FnMut(&[i64])) {
    let dim = bounds.len();
    if bounds.iter().any(|(lo, hi)| lo > hi) {
        return;
    }
    let mut idx = [0i64; MAX_DIM];
    for a in 0..dim {
        idx[a] = bounds[a].0;
    }
    loop {
        visit(&idx[..dim]);
        let mut a = dim;
        loop {
            if a == 0 {
                return;
            }
            a -= 1;
            idx[a] += 1;
            if idx[a] <= bounds[a].1 {
                break;
            }
            idx[a] = bounds[a].0;
        }
    }
}
