use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;

use crate::asymptotics::{fit_power_law, Sample};
use crate::error::Result;
use crate::grid::{GridDomain, GridFunction, GridLevel};
use crate::pairing::{l2_project, CellAlignment};
use crate::pde::{
    assemble, convolve, fundamental_solution, relative_residual, solve, time_integrate, AssembledSystem, Boundary,
    ConvolutionMode, OperatorSpec, Scheme, SolveOptions, TimeOptions,
};

use super::{level_ns, pairs, Check, Config, Provenance, Report, Table};

/// Default relative residual for the Poisson ladders; the floor of a double
/// precision solve grows like `N²ε`, about `3·10⁻¹⁰` at `N = 5760`.
const POISSON_TOL: f64 = 1e-9;
/// Default relative residual for the time stepping and convolution runs.
const SOLVER_TOL: f64 = 1e-10;

fn solve_options(tol: f64, cfg: &Config) -> SolveOptions {
    SolveOptions { method: cfg.method, tol, max_iterations: None }
}

/// The closed box `[0, 1]ᵏ` as a full index box.
fn closure(level: GridLevel, dim: usize) -> Result<Arc<GridDomain>> {
    let n = level.n_cells() as i64;
    Ok(Arc::new(GridDomain::lattice_box(level, &vec![0; dim], &vec![n; dim])?))
}

fn laplacian(domain: &Arc<GridDomain>) -> Result<AssembledSystem> {
    assemble(&OperatorSpec::negative_laplacian(domain.dim())?, Arc::clone(domain), Boundary::Dirichlet)
}

fn max_error(u: &GridFunction, exact: impl Fn(&[f64]) -> f64) -> f64 {
    let d = u.domain();
    let dim = d.dim();
    (0..d.len()).map(|i| (u.values()[i] - exact(&d.coords(i)[..dim])).abs()).fold(0.0, f64::max)
}

/// Whether every boundary row of the solution holds exactly.
fn boundary_exact(system: &AssembledSystem, u: &GridFunction) -> bool {
    let r = system.matrix().apply(u.values());
    (0..r.len()).filter(|&i| system.is_boundary_row(i)).all(|i| r[i] == 0.0)
}

fn poisson(cfg: &Config, dim: usize, name: &str, base: u64, levels: usize) -> Result<Report> {
    let ladder = cfg.ladder(base, 2, levels, 1.0)?;
    // Axis j carries sin((j+1)πx); the diagonal mode would be reproduced exactly.
    let exact = |x: &[f64]| x.iter().enumerate().map(|(j, &t)| ((j + 1) as f64 * PI * t).sin()).product::<f64>();
    let k2 = (1..=dim).map(|j| (j * j) as f64).sum::<f64>();
    let rhs = move |x: &[f64]| k2 * PI * PI * exact(x);
    let per_level: Vec<(f64, bool)> = ladder
        .levels()
        .par_iter()
        .map(|&level| {
            let domain = closure(level, dim)?;
            let system = laplacian(&domain)?;
            let f = l2_project(rhs, Arc::clone(&domain), CellAlignment::Centered)?;
            let u = solve(&system, &f, solve_options(cfg.tol_or(POISSON_TOL), cfg))?;
            Ok((max_error(&u, exact), boundary_exact(&system, &u)))
        })
        .collect::<Result<_>>()?;
    let ns = level_ns(&ladder);
    let errors: Vec<Sample> = ns.iter().zip(&per_level).map(|(&n, e)| Sample::new(n as f64, e.0)).collect();
    let est = fit_power_law(&errors, cfg.thresholds)?;
    let order = -est.exponent;
    let mut report = Report::new(name, ns.clone());
    report.table(Table::from_values("max-error", pairs(&errors)));
    report.check(Check::within("fitted convergence order", 1.85, 2.15, order, Provenance::Oracle));
    if dim == 1 {
        if let Some(e) = ns.iter().position(|&n| n == 2880).map(|i| errors[i].value) {
            report.check(Check::at_most("max error at N = 2880", 1e-4, e, Provenance::Oracle));
        }
    }
    report.check(Check::holds("boundary rows hold exactly", per_level.iter().all(|e| e.1), Provenance::Direct));
    report.estimate("max error", est);
    report.note("right-hand side is the cell-centred L² projection of the source");
    Ok(report)
}

pub(super) fn poisson_1d(cfg: &Config) -> Result<Report> {
    poisson(cfg, 1, "poisson-1d", 720, 4)
}

pub(super) fn poisson_2d(cfg: &Config) -> Result<Report> {
    poisson(cfg, 2, "poisson-2d", 24, 3)
}

pub(super) fn heat_1d(cfg: &Config) -> Result<Report> {
    let t_final = cfg.final_time.unwrap_or(0.1);
    let dt0 = cfg.dt.unwrap_or(1e-3);
    let ladder = cfg.ladder(720, 2, 3, 1.0)?;
    let base_n = ladder.levels()[0].n();
    let decay = (-PI * PI * t_final).exp();
    let run = |level: GridLevel, dt: f64| -> Result<(f64, f64)> {
        let domain = closure(level, 1)?;
        let system = laplacian(&domain)?;
        let u0 = GridFunction::sample(Arc::clone(&domain), |x| (PI * x[0]).sin())?;
        let zero = GridFunction::zeros(Arc::clone(&domain));
        let opts =
            TimeOptions { scheme: Scheme::Trapezoidal, dt, tol: cfg.tol_or(SOLVER_TOL), ..TimeOptions::default() };
        let traj = time_integrate(&system, None, &zero, &u0, t_final, opts)?;
        Ok((max_error(traj.last(), |x| decay * (PI * x[0]).sin()), traj.max_step_residual))
    };
    let per_level: Vec<(f64, f64)> =
        ladder.levels().par_iter().map(|&level| run(level, dt0 * base_n / level.n())).collect::<Result<_>>()?;
    let ns = level_ns(&ladder);
    let mut report = Report::new("heat-1d", ns.clone());
    let errors: Vec<Sample> = ns.iter().zip(&per_level).map(|(&n, e)| Sample::new(n as f64, e.0)).collect();
    report.table(Table::from_values("max-error (dt ∝ ε)", pairs(&errors)));
    let coarse = per_level[0].0;
    report.check(Check::at_most(format!("max error at N = {}, dt = {dt0}", ns[0]), 1e-3, coarse, Provenance::Oracle));
    let est = fit_power_law(&errors, cfg.thresholds)?;
    report.check(Check::at_least("fitted order with dt ∝ ε", 1.9, -est.exponent, Provenance::Oracle));
    let worst_step = per_level.iter().fold(0.0f64, |m, e| m.max(e.1));
    report.check(Check::at_most("largest one-step residual", cfg.tol_or(SOLVER_TOL), worst_step, Provenance::Direct));
    report.estimate("max error", est);
    report.note("time step refined with the grid so that both error terms scale like ε²");
    Ok(report)
}

pub(super) fn green_convolution(cfg: &Config) -> Result<Report> {
    let n = cfg.base.unwrap_or(720);
    let level = GridLevel::new(n, cfg.window.unwrap_or(1.0))?;
    let domain = Arc::new(GridDomain::lattice_box(level, &[0], &[n as i64 - 1])?);
    let spec = OperatorSpec::negative_laplacian(1)?.with_mass(1.0)?;
    let system = assemble(&spec, Arc::clone(&domain), Boundary::Periodic)?;
    let opts = solve_options(cfg.tol_or(SOLVER_TOL), cfg);
    let u0 = fundamental_solution(&system, &[0.0], opts)?;
    let mut report = Report::new("green-convolution", vec![n]);

    let mut source = vec![0.0; domain.len()];
    source[0] = level.n();
    let residual = relative_residual(system.matrix(), u0.values(), &source);
    report.check(Check::at_most(
        "L u₀ = Nχ₀ (relative residual)",
        cfg.tol_or(SOLVER_TOL),
        residual,
        Provenance::Direct,
    ));

    let g = l2_project(|x| (2.0 * PI * x[0]).sin().exp() - 1.0, Arc::clone(&domain), CellAlignment::Forward)?;
    let conv = convolve(&g, &u0, ConvolutionMode::Periodic)?;
    let direct = solve(&system, &g, opts)?;
    let diff: Vec<f64> = conv.values().iter().zip(direct.values()).map(|(a, b)| a - b).collect();
    let l2 = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let rel = l2(&diff) / l2(direct.values());
    report.check(Check::at_most(
        "convolution against direct solve (relative L²)",
        10.0 * cfg.tol_or(SOLVER_TOL),
        rel,
        Provenance::Oracle,
    ));

    let spike = |k: usize, w: f64| {
        let mut v = vec![0.0; domain.len()];
        v[k] = w * level.n();
        GridFunction::new(Arc::clone(&domain), v)
    };
    let z = (n / 3) as usize;
    let shifted = convolve(&spike(z, 1.0)?, &u0, ConvolutionMode::Periodic)?;
    let exact_shift = (0..n as i64).all(|i| shifted.at(&[i]) == u0.at(&[(i - z as i64).rem_euclid(n as i64)]));
    report.check(Check::holds("spike at z gives u₀ shifted to z", exact_shift, Provenance::Direct));

    let a = convolve(&spike(z, 0.75)?, &u0, ConvolutionMode::Periodic)?;
    let b = convolve(&spike(n as usize / 7, -1.25)?, &u0, ConvolutionMode::Periodic)?;
    let both = convolve(
        &spike(z, 0.75)?.zip_with(&spike(n as usize / 7, -1.25)?, |x, y| x + y)?,
        &u0,
        ConvolutionMode::Periodic,
    )?;
    let lin = (0..domain.len())
        .map(|i| (both.values()[i] - a.values()[i] - b.values()[i]).abs() / u0.max_abs())
        .fold(0.0f64, f64::max);
    report.check(Check::at_most(
        "superposition of two spikes (relative to max u₀)",
        4.0 * f64::EPSILON,
        lin,
        Provenance::Direct,
    ));

    let shifted_source = fundamental_solution(&system, &[level.coordinate(z as i64)], opts)?;
    let translation = (0..n as i64)
        .map(|i| (shifted_source.at(&[i]) - u0.at(&[(i - z as i64).rem_euclid(n as i64)])).abs())
        .fold(0.0f64, f64::max)
        / u0.max_abs();
    report.check(Check::at_most(
        "fundamental solutions are translates (relative)",
        1e-9,
        translation,
        Provenance::Oracle,
    ));
    report.table(Table::from_values(
        "fundamental-solution",
        (0..n as i64).step_by((n / 24).max(1) as usize).map(|i| (i as u64, u0.at(&[i]))),
    ));
    report.note("the table lists u₀ by lattice index instead of by level");
    Ok(report)
}
