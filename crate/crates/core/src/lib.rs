//! Grid-function calculus on a ladder of uniform grids.
//!
//! A grid function is a finite table of values on the points `n·ε` of a
//! uniform lattice with step `ε = 1/N`. Quantities that would be
//! infinitesimal, finite or infinite for an unlimited `N` are evaluated on a
//! ladder of increasing resolutions and classified by their fitted power-law
//! behaviour; standard parts are recovered by Richardson extrapolation.
//!
//! The crate is organised by subsystem:
//!
//! * [`grid`]: levels, discretised domains and their Λ-boundary, grid
//!   functions, finite differences, grid integrals, norms and the exact
//!   discrete identities.
//! * [`asymptotics`]: ladders, power-law fits, classification and standard
//!   parts.
//! * [`pairing`]: bump test functions, pairings with grid functions, the
//!   projection to distributions, equivalence and the L² cell projection.
//! * [`measures`]: windowed empirical value distributions approximating
//!   Young and parametrized measures.
//! * [`pde`]: assembly and solution of grid Dirichlet problems, fundamental
//!   solutions, discrete convolution and implicit time integration.
//! * [`experiments`]: scripted reproductions producing structured reports.

pub mod asymptotics;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod measures;
pub mod numeric;
pub mod pairing;
pub mod pde;
pub mod quadrature;

pub use error::{Error, Result};
