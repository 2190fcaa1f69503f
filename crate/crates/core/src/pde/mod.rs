//! Grid Dirichlet problems.
//!
//! An [`OperatorSpec`] describes a divergence-form operator
//! `Σ (−1)^{|α|} D^α(a_{αβ} D^β u)`; [`assemble`] realises it on a
//! [`GridDomain`](crate::grid::GridDomain) as a sparse table with one row per
//! grid point. Points on `∂^α_Λ` get the rows `Δ⁺^α u = 0` for `|α| < h`
//! instead. The system is solved by banded LU or preconditioned conjugate
//! gradients, convolved with fundamental solutions, or integrated in time as a
//! stiff system of ordinary differential equations.

mod banded;
mod cg;
mod green;
mod operator;
mod solve;
mod sparse;
mod time;

pub use banded::{reverse_cuthill_mckee, BandedLu};
pub use cg::{conjugate_gradient, CgOutcome};
pub use green::{convolve, fundamental_solution, ConvolutionMode};
pub use operator::{assemble, AssembledSystem, Boundary, Coefficient, OperatorSpec, Term};
pub use solve::{
    relative_residual, smallest_eigenvalue, solve, solve_detailed, LuSolver, Solution, SolveMethod, SolveOptions,
    DIRECT_LIMITS,
};
pub use sparse::SparseMatrix;
pub use time::{time_integrate, Reaction, Scheme, TimeOptions, Trajectory};

#[cfg(test)]
mod tests;
