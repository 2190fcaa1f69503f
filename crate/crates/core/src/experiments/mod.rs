//! Scripted reproductions of the worked examples.
//!
//! Each experiment evaluates its quantities on a ladder, extrapolates them and
//! compares the limits against expected values, each tagged with a
//! [`Provenance`]. [`run`] dispatches by name and [`catalog`] lists what is
//! available.

mod config;
mod distributions;
mod measures;
mod pde;
mod report;

use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;

use crate::asymptotics::{richardson_table, Ladder, Sample};
use crate::error::{Error, Result};
use crate::grid::{GridDomain, GridFunction, GridLevel};

pub use config::{Config, Ramp, MAX_LEVELS};
pub use report::{format_number, Check, NamedEstimate, Provenance, Report, Row, Table};

/// Catalog entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ExperimentInfo {
    pub name: &'static str,
    pub description: &'static str,
    /// What the experiment reproduces.
    pub reproduces: &'static str,
    pub tags: &'static [&'static str],
}

type Runner = fn(&Config) -> Result<Report>;

const EXPERIMENTS: &[(ExperimentInfo, Runner)] = &[
    (
        ExperimentInfo {
            name: "heaviside-product",
            description: "Pairings of powers of a steep ramp with its difference quotient",
            reproduces: "⟨h^m − h^n, Δh⟩ → 1/(m+1) − 1/(n+1) and [hΔh] = ½H′",
            tags: &["distribution", "product"],
        },
        distributions::heaviside_product,
    ),
    (
        ExperimentInfo {
            name: "rademacher",
            description: "Young measure of the alternating sign function",
            reproduces: "ν_x = ½δ₁ + ½δ₋₁ and [(−1)ⁿ] = 0",
            tags: &["measure", "oscillation"],
        },
        measures::rademacher,
    ),
    (
        ExperimentInfo {
            name: "concentration",
            description: "Mass concentrating at a point: distribution versus parametrized measure",
            reproduces: "[Nχ₁] = δ₁, ν_x = δ₀ and ‖Nχ₁‖₁ = 1",
            tags: &["measure", "distribution", "concentration"],
        },
        measures::concentration,
    ),
    (
        ExperimentInfo {
            name: "sign-derivative",
            description: "Difference quotient of the sign function and of its cube",
            reproduces: "Δf(−ε) = 2N, Δf³ = Δf and [Δf] = 2δ₀",
            tags: &["distribution", "derivative"],
        },
        distributions::sign_derivative,
    ),
    (
        ExperimentInfo {
            name: "variational",
            description: "Non-attained minimum of a double-well functional over square waves",
            reproduces: "the minimizer is (−1)ⁿ with measure ½δ₁ + ½δ₋₁",
            tags: &["measure", "variational"],
        },
        measures::variational,
    ),
    (
        ExperimentInfo {
            name: "shift-coherence",
            description: "Shifted point masses and infinitesimal shifts",
            reproduces: "[f(x + nε)] = [f](x + °(nε))",
            tags: &["distribution", "shift"],
        },
        distributions::shift_coherence,
    ),
    (
        ExperimentInfo {
            name: "norm-inequality",
            description: "Lp norms of grid functions against norms of their projections",
            reproduces: "°‖f‖_p ≥ ‖[f]‖_p",
            tags: &["distribution", "norm"],
        },
        distributions::norm_inequality,
    ),
    (
        ExperimentInfo {
            name: "poisson-1d",
            description: "Grid Dirichlet problem for −u″ = π² sin πx on [0, 1]",
            reproduces: "second-order convergence of the grid solution",
            tags: &["pde", "elliptic"],
        },
        pde::poisson_1d,
    ),
    (
        ExperimentInfo {
            name: "poisson-2d",
            description: "Grid Dirichlet problem for −Δu = 5π² sin πx sin 2πy on the unit square",
            reproduces: "second-order convergence of the grid solution",
            tags: &["pde", "elliptic"],
        },
        pde::poisson_2d,
    ),
    (
        ExperimentInfo {
            name: "heat-1d",
            description: "Heat equation with a sine initial state, trapezoidal in time",
            reproduces: "u(t) = e^{−π²t} sin πx",
            tags: &["pde", "parabolic", "time"],
        },
        pde::heat_1d,
    ),
    (
        ExperimentInfo {
            name: "green-convolution",
            description: "Periodic fundamental solution and discrete convolution",
            reproduces: "u_g = Σ g(y) u₀(x − y) solves L u = g",
            tags: &["pde", "green"],
        },
        pde::green_convolution,
    ),
    (
        ExperimentInfo {
            name: "l2-projection-defect",
            description: "Distance between a function and the step extension of its cell averages",
            reproduces: "‖g − (Pg)~‖₂ is infinitesimal",
            tags: &["distribution", "projection"],
        },
        distributions::l2_projection_defect,
    ),
];

/// All experiments in catalog order.
pub fn catalog() -> Vec<ExperimentInfo> {
    EXPERIMENTS.iter().map(|(info, _)| *info).collect()
}

/// Catalog entries whose name, description or tags contain `needle`.
pub fn filter_catalog(needle: &str) -> Vec<ExperimentInfo> {
    let needle = needle.to_lowercase();
    catalog()
        .into_iter()
        .filter(|e| {
            e.name.contains(&needle)
                || e.description.to_lowercase().contains(&needle)
                || e.tags.iter().any(|t| t.contains(&needle))
        })
        .collect()
}

/// Run the named experiment.
pub fn run(name: &str, config: &Config) -> Result<Report> {
    config.validate()?;
    let (_, runner) = EXPERIMENTS
        .iter()
        .find(|(info, _)| info.name == name)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown experiment `{name}`")))?;
    let start = Instant::now();
    let mut report = runner(config)?;
    report.runtime_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

fn level_ns(ladder: &Ladder) -> Vec<u64> {
    ladder.levels().iter().map(|l| l.n_cells()).collect()
}

/// The smallest divisor of `N` that is at least `⌈√N⌉`.
pub fn ramp_width(n_cells: u64) -> u64 {
    let root = (n_cells as f64).sqrt().ceil() as u64;
    (root.max(1)..=n_cells).find(|&m| n_cells.is_multiple_of(m)).unwrap_or(n_cells)
}

/// Last entry of the Romberg table eliminating the orders `1, 2, …` in turn.
fn romberg(samples: &[Sample]) -> Result<f64> {
    let orders: Vec<f64> = (1..samples.len()).map(|k| k as f64).collect();
    let table = richardson_table(samples, &orders)?;
    Ok(*table.last().and_then(|r| r.last()).expect("non-empty table"))
}

/// A 1D function on the whole window from its values by lattice index.
fn on_window(level: GridLevel, f: impl Fn(i64) -> f64 + Sync) -> Result<GridFunction> {
    let domain = Arc::new(GridDomain::window_box(level, 1)?);
    Ok(GridFunction::from_index_fn(domain, |i| f(i[0])))
}

fn pairs(samples: &[Sample]) -> Vec<(u64, f64)> {
    samples.iter().map(|s| (s.scale as u64, s.value)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ramp_width_doubles_on_the_factor_four_ladder() {
        let m: Vec<u64> = [720, 2880, 11520, 46080].iter().map(|&n| ramp_width(n)).collect();
        assert_eq!(m, vec![30, 60, 120, 240]);
    }

    #[test]
    fn catalog_names_are_unique() {
        let names: Vec<&str> = catalog().iter().map(|e| e.name).collect();
        let mut sorted = names.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), names.len());
        assert_eq!(names.len(), 12);
    }

    #[test]
    fn filter_finds_measure_experiments() {
        let names: Vec<&str> = filter_catalog("measure").iter().map(|e| e.name).collect();
        assert!(names.contains(&"rademacher") && names.contains(&"concentration") && names.contains(&"variational"));
        assert!(!names.contains(&"poisson-1d"));
    }

    #[test]
    fn unknown_experiment_is_rejected() {
        assert!(matches!(run("nope", &Config::default()), Err(Error::InvalidArgument(_))));
    }
}
