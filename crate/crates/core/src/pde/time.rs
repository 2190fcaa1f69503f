use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridFunction;

use super::cg::norm;
use super::solve::LuSolver;
use super::{AssembledSystem, SparseMatrix};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    ImplicitEuler,
    #[default]
    Trapezoidal,
}

impl Scheme {
    /// Weight of the new time level.
    pub fn theta(self) -> f64 {
        match self {
            Scheme::ImplicitEuler => 1.0,
            Scheme::Trapezoidal => 0.5,
        }
    }

    pub fn order(self) -> u32 {
        match self {
            Scheme::ImplicitEuler => 1,
            Scheme::Trapezoidal => 2,
        }
    }
}

/// Pointwise reaction term `R(u)(x) = r(u(x))` with its derivative.
#[derive(Clone)]
pub struct Reaction {
    pub value: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub derivative: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for Reaction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Reaction").finish_non_exhaustive()
    }
}

impl Reaction {
    pub fn new(
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        derivative: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self { value: Arc::new(value), derivative: Arc::new(derivative) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TimeOptions {
    pub scheme: Scheme,
    pub dt: f64,
    /// Tolerance on the scaled one-step residual.
    pub tol: f64,
    pub max_newton_iterations: usize,
    /// Keep every state (otherwise only the first and last).
    pub keep_states: bool,
}

impl Default for TimeOptions {
    fn default() -> Self {
        Self { scheme: Scheme::Trapezoidal, dt: 1e-3, tol: 1e-10, max_newton_iterations: 20, keep_states: false }
    }
}

/// Computed solution of `u_t = −L_Λ u + R(u) + f` with the boundary rows of
/// `L_Λ` imposed at every time.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<GridFunction>,
    pub scheme: Scheme,
    /// Step actually used, `T / ⌈T / dt⌉`.
    pub dt: f64,
    pub tol: f64,
    /// Largest scaled one-step residual over all steps.
    pub max_step_residual: f64,
}

impl Trajectory {
    pub fn last(&self) -> &GridFunction {
        self.states.last().expect("trajectory holds at least one state")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory holds at least one time")
    }
}

/// The θ-scheme for `M u' = −A u + R(u) + f` with `M = 1` on interior rows and
/// `0` on boundary rows; linear problems factor the step matrix once, and a
/// reaction term is handled by Newton iteration.
pub fn time_integrate(
    system: &AssembledSystem,
    reaction: Option<&Reaction>,
    f_rhs: &GridFunction,
    u_init: &GridFunction,
    t_final: f64,
    options: TimeOptions,
) -> Result<Trajectory> {
    if !(options.dt > 0.0) || !options.dt.is_finite() {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {}", options.dt)));
    }
    if !(t_final >= 0.0) || !t_final.is_finite() {
        return Err(Error::InvalidArgument(format!("final time must be non-negative, got {t_final}")));
    }
    let domain = Arc::clone(system.domain());
    let f = system.rhs_vector(f_rhs)?;
    let u0 = u_init.restrict(Arc::clone(&domain))?;
    let steps = (t_final / options.dt).ceil().max(0.0) as usize;
    let mut trajectory = Trajectory {
        times: vec![0.0],
        states: vec![u0.clone()],
        scheme: options.scheme,
        dt: if steps == 0 { 0.0 } else { t_final / steps as f64 },
        tol: options.tol,
        max_step_residual: 0.0,
    };
    if steps == 0 {
        return Ok(trajectory);
    }
    let dt = trajectory.dt;
    let theta = options.scheme.theta();
    let a = system.matrix();
    let n = domain.len();
    let interior: Vec<bool> = (0..n).map(|i| !system.is_boundary_row(i)).collect();
    let step_matrix = |diag_extra: &[f64]| -> SparseMatrix {
        let rows = (0..n)
            .map(|i| {
                let mut row: Vec<(usize, f64)> = Vec::new();
                let mut has_diag = false;
                for (c, v) in a.row(i) {
                    if interior[i] {
                        let extra = if c == i { 1.0 / dt - diag_extra[i] } else { 0.0 };
                        has_diag |= c == i;
                        row.push((c, theta * v + extra));
                    } else {
                        row.push((c, v));
                    }
                }
                if interior[i] && !has_diag {
                    row.push((i, 1.0 / dt - diag_extra[i]));
                    row.sort_by_key(|e| e.0);
                }
                row
            })
            .collect();
        SparseMatrix::from_rows(n, rows)
    };
    let zero = vec![0.0; n];
    let linear_lu = if reaction.is_none() { Some(LuSolver::new(step_matrix(&zero))?) } else { None };

    let mut u = u0.into_values();
    for k in 1..=steps {
        let t_new = if k == steps { t_final } else { k as f64 * dt };
        let t_old = (k - 1) as f64 * dt;
        let au = a.apply(&u);
        let r_old: Vec<f64> = match reaction {
            Some(r) => u.iter().map(|&v| (r.value)(v)).collect(),
            None => zero.clone(),
        };
        // Explicit part of the θ-scheme, independent of the new state.
        let explicit: Vec<f64> = (0..n)
            .map(|i| if interior[i] { u[i] / dt - (1.0 - theta) * (au[i] - r_old[i]) + f[i] } else { 0.0 })
            .collect();
        let step_residual = |x: &[f64]| -> (Vec<f64>, f64) {
            let ax = a.apply(x);
            let mut scale = 0.0f64;
            let res: Vec<f64> = (0..n)
                .map(|i| {
                    if interior[i] {
                        let rx = reaction.map_or(0.0, |r| (r.value)(x[i]));
                        let lhs = x[i] / dt + theta * (ax[i] - rx);
                        scale = scale.max(lhs.abs()).max(explicit[i].abs());
                        lhs - explicit[i]
                    } else {
                        ax[i]
                    }
                })
                .collect();
            let size = norm(&res);
            (res, size / scale.max(f64::MIN_POSITIVE) / (n as f64).sqrt())
        };
        let fail = |source: Error| Error::StepFailed { time: t_old, source: Box::new(source) };
        let next = match (&linear_lu, reaction) {
            (Some(lu), _) => lu.solve(&explicit),
            (None, Some(r)) => {
                let mut x = u.clone();
                let mut converged = false;
                for _ in 0..options.max_newton_iterations {
                    let (res, size) = step_residual(&x);
                    if size <= options.tol {
                        converged = true;
                        break;
                    }
                    let jac_diag: Vec<f64> = x.iter().map(|&v| theta * (r.derivative)(v)).collect();
                    let lu = LuSolver::new(step_matrix(&jac_diag)).map_err(fail)?;
                    let dx = lu.solve(&res);
                    for (xi, d) in x.iter_mut().zip(dx) {
                        *xi -= d;
                    }
                }
                if !converged {
                    let (_, size) = step_residual(&x);
                    if !(size <= options.tol) {
                        return Err(fail(Error::NotConverged {
                            iterations: options.max_newton_iterations,
                            residual: size,
                        }));
                    }
                }
                x
            }
            (None, None) => unreachable!("linear problems are factored up front"),
        };
        let (_, size) = step_residual(&next);
        if !(size <= options.tol) || next.iter().any(|v| !v.is_finite()) {
            return Err(fail(Error::ResidualAboveTolerance { residual: size, tol: options.tol }));
        }
        trajectory.max_step_residual = trajectory.max_step_residual.max(size);
        u = next;
        if options.keep_states || k == steps {
            trajectory.times.push(t_new);
            trajectory.states.push(GridFunction::new(Arc::clone(&domain), u.clone())?);
        }
    }
    Ok(trajectory)
}
