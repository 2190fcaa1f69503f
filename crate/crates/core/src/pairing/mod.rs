//! Test functions and the pairing of grid functions with them.
//!
//! A grid function `f` acts on a standard test function `φ` through
//! `⟨f, φ_Λ⟩ = εᵏ Σ f(x) φ(x)`. Evaluating the action on a ladder and taking
//! standard parts projects `f` to a distribution; two grid functions are
//! equivalent when all their actions agree up to an infinitesimal. A finite
//! battery of bumps can only refute equivalence, so verdicts read
//! "not refuted" rather than "proved".

mod projection;
mod test_function;

use rayon::prelude::*;
use serde::Serialize;

use crate::asymptotics::{fit_power_law, AsymptoticEstimate, Classification, Ladder, Sample, Thresholds};
use crate::error::{Error, Result};
use crate::grid::{
    diff, for_each_index, inner_product, summation_by_parts_residual, Direction, GridFunction, GridLevel, MultiIndex,
    MAX_DIM,
};
use crate::numeric::{DotAccumulator, Residual};

pub use projection::{
    l2_project, l2_project_with_breaks, l2_projection_defect, standard_function, CellAlignment, DefectEstimate,
    ProbeEstimate,
};
pub use test_function::{bump_derivative, bump_integral, TestBattery, TestFunction, MAX_DERIVATIVE_ORDER};

/// Default tolerance on extrapolated limits when deciding equivalence.
pub const DEFAULT_EQUIVALENCE_TOL: f64 = 1e-6;

/// `⟨f, φ_Λ⟩`, summed over the support of `φ` only.
pub fn pair(f: &GridFunction, phi: &TestFunction) -> Result<f64> {
    if phi.dim() != f.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), got: phi.dim() });
    }
    let level = f.level();
    phi.check_window(level)?;
    let vol = level.n().powi(f.dim() as i32);
    let mut acc = DotAccumulator::new();
    let mut x = [0.0; MAX_DIM];
    for_each_index(&phi.index_bounds(level), |idx| {
        if let Some(id) = f.domain().id_of(idx) {
            for (a, &i) in idx.iter().enumerate() {
                x[a] = level.coordinate(i);
            }
            acc.add_product(f.values()[id], phi.eval(&x[..idx.len()]));
        }
    });
    Ok(acc.quotient(vol))
}

/// Actions of a family of grid functions on each battery member across a ladder.
#[derive(Debug, Clone, Serialize)]
pub struct DistributionEstimate {
    pub battery: TestBattery,
    pub samples: Vec<Vec<Sample>>,
    pub actions: Vec<AsymptoticEstimate>,
}

impl DistributionEstimate {
    /// Standard part of each action (`None` where unresolved).
    pub fn limits(&self) -> Vec<Option<f64>> {
        self.actions.iter().map(|a| a.limit).collect()
    }
}

fn action_samples<F>(family: &F, battery: &TestBattery, ladder: &Ladder) -> Result<Vec<Vec<Sample>>>
where
    F: Fn(GridLevel) -> Result<GridFunction> + Sync,
{
    let per_level: Vec<Vec<f64>> = ladder
        .levels()
        .par_iter()
        .map(|&level| {
            let at_level = |e| Error::AtLevel { n_cells: level.n_cells(), source: Box::new(e) };
            let f = family(level).map_err(at_level)?;
            battery.functions().par_iter().map(|phi| pair(&f, phi)).collect::<Result<Vec<f64>>>().map_err(at_level)
        })
        .collect::<Result<_>>()?;
    Ok((0..battery.len())
        .map(|j| ladder.levels().iter().zip(&per_level).map(|(l, vals)| Sample::new(l.n(), vals[j])).collect())
        .collect())
}

/// Project a family `N ↦ f_N` to its distribution: the standard part of every
/// battery action. Fails when an action is infinite.
pub fn project_distribution<F>(
    family: F,
    battery: &TestBattery,
    ladder: &Ladder,
    thresholds: Thresholds,
) -> Result<DistributionEstimate>
where
    F: Fn(GridLevel) -> Result<GridFunction> + Sync,
{
    let samples = action_samples(&family, battery, ladder)?;
    let actions = samples.iter().map(|s| fit_power_law(s, thresholds)).collect::<Result<Vec<_>>>()?;
    if let Some(index) = actions.iter().position(|a| a.classification == Classification::Infinite) {
        return Err(Error::NotADistribution { index, estimate: Box::new(actions[index].clone()) });
    }
    Ok(DistributionEstimate { battery: battery.clone(), samples, actions })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// Every action of `f − g` is infinitesimal or within tolerance of 0.
    NotRefuted,
    /// Some action of `f − g` has a limit away from 0 or is infinite.
    Refuted,
    /// No action refutes, but at least one could not be classified.
    Indeterminate,
}

#[derive(Debug, Clone, Serialize)]
pub struct Equivalence {
    pub verdict: Verdict,
    pub tol: f64,
    pub samples: Vec<Vec<Sample>>,
    pub actions: Vec<AsymptoticEstimate>,
}

impl Equivalence {
    pub fn holds(&self) -> bool {
        self.verdict == Verdict::NotRefuted
    }
}

/// Test `f ≡ g` on the battery: every action of `f − g` must be infinitesimal.
pub fn equivalent<F, G>(
    f_family: F,
    g_family: G,
    battery: &TestBattery,
    ladder: &Ladder,
    tol: f64,
    thresholds: Thresholds,
) -> Result<Equivalence>
where
    F: Fn(GridLevel) -> Result<GridFunction> + Sync,
    G: Fn(GridLevel) -> Result<GridFunction> + Sync,
{
    let diff_family = |level| f_family(level)?.zip_with(&g_family(level)?, |a, b| a - b);
    let samples = action_samples(&diff_family, battery, ladder)?;
    let actions = samples.iter().map(|s| fit_power_law(s, thresholds)).collect::<Result<Vec<_>>>()?;
    let mut verdict = Verdict::NotRefuted;
    for a in &actions {
        match a.classification {
            Classification::Infinitesimal => {}
            Classification::Finite(l) if l.abs() <= tol => {}
            Classification::Finite(_) | Classification::Infinite => {
                verdict = Verdict::Refuted;
                break;
            }
            Classification::Unresolved => verdict = Verdict::Indeterminate,
        }
    }
    Ok(Equivalence { verdict, tol, samples, actions })
}

/// Residuals tying `Δ⁺ᵢf` to the distributional derivative of `f`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DerivativeResidual {
    /// `⟨Δf, φ_Λ⟩ + ⟨f(·+ε), Δφ_Λ⟩`, zero up to rounding.
    pub adjoint: Residual,
    /// `⟨Δf, φ_Λ⟩ + ⟨f, (∂ᵢφ)_Λ⟩`, infinitesimal.
    pub distributional: f64,
    /// `⟨Δf, φ_Λ⟩`.
    pub pairing: f64,
}

pub fn derivative_pairing_residual(f: &GridFunction, phi: &TestFunction, axis: usize) -> Result<DerivativeResidual> {
    if phi.dim() != f.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), got: phi.dim() });
    }
    let domain = std::sync::Arc::clone(f.domain());
    let phi_l = phi.sample(std::sync::Arc::clone(&domain))?;
    let adjoint = summation_by_parts_residual(f, &phi_l, axis)?;
    let df = diff(f, axis, Direction::Forward)?;
    let pairing = inner_product(&df, &phi_l)?;
    let dphi = phi.sample_derivative(&MultiIndex::unit(f.dim(), axis), domain)?;
    let distributional = pairing + inner_product(f, &dphi)?;
    Ok(DerivativeResidual { adjoint, distributional, pairing })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::grid::GridDomain;

    fn window(n: u64) -> Arc<GridDomain> {
        Arc::new(GridDomain::window_box(GridLevel::new(n, 1.0).unwrap(), 1).unwrap())
    }

    fn spike(level: GridLevel) -> Result<GridFunction> {
        let d = Arc::new(GridDomain::window_box(level, 1)?);
        let n = level.n();
        Ok(GridFunction::from_index_fn(d, move |p| if p[0] == 0 { n } else { 0.0 }))
    }

    #[test]
    fn spike_pairs_to_point_value() {
        let f = spike(GridLevel::new(720, 1.0).unwrap()).unwrap();
        let battery = TestBattery::for_box(&[-1.0], &[1.0], 12, 1).unwrap();
        for phi in battery.functions() {
            assert_eq!(pair(&f, phi).unwrap(), phi.eval(&[0.0]));
        }
    }

    #[test]
    fn zero_pairs_to_zero() {
        let f = GridFunction::zeros(window(64));
        let phi = TestFunction::new(vec![0.1], 0.3).unwrap();
        assert_eq!(pair(&f, &phi).unwrap(), 0.0);
    }

    #[test]
    fn support_outside_window_is_an_error() {
        let f = GridFunction::zeros(window(64));
        let phi = TestFunction::new(vec![0.9], 0.3).unwrap();
        assert!(matches!(pair(&f, &phi), Err(Error::SupportOutsideWindow { .. })));
    }

    #[test]
    fn jump_derivative_projects_to_twice_delta() {
        let ladder = Ladder::geometric(720, 2, 3, 1.0).unwrap();
        let battery = TestBattery::centered(&[0.0], &[0.2, 0.5]).unwrap();
        let family = |level: GridLevel| -> Result<GridFunction> {
            let d = Arc::new(GridDomain::window_box(level, 1)?);
            let s = GridFunction::from_index_fn(d, |p| if p[0] < 0 { -1.0 } else { 1.0 });
            diff(&s, 0, Direction::Forward)
        };
        let est = project_distribution(family, &battery, &ladder, Thresholds::default()).unwrap();
        for (phi, lim) in battery.functions().iter().zip(est.limits()) {
            assert!((lim.unwrap() - 2.0 * phi.eval(&[0.0])).abs() < 1e-9);
        }
    }

    #[test]
    fn squared_spike_is_not_a_distribution() {
        let ladder = Ladder::geometric(720, 2, 3, 1.0).unwrap();
        let battery = TestBattery::centered(&[0.0], &[0.3]).unwrap();
        let family = |level: GridLevel| Ok(spike(level)?.map(|v| v * v));
        assert!(matches!(
            project_distribution(family, &battery, &ladder, Thresholds::default()),
            Err(Error::NotADistribution { index: 0, .. })
        ));
    }

    #[test]
    fn spike_is_not_equivalent_to_zero() {
        let ladder = Ladder::geometric(720, 2, 3, 1.0).unwrap();
        let battery = TestBattery::centered(&[0.0], &[0.3]).unwrap();
        let zero = |level: GridLevel| Ok(GridFunction::zeros(Arc::new(GridDomain::window_box(level, 1)?)));
        let e = equivalent(spike, zero, &battery, &ladder, DEFAULT_EQUIVALENCE_TOL, Thresholds::default()).unwrap();
        assert_eq!(e.verdict, Verdict::Refuted);
        let same = equivalent(spike, spike, &battery, &ladder, DEFAULT_EQUIVALENCE_TOL, Thresholds::default()).unwrap();
        assert!(same.holds());
    }

    #[test]
    fn derivative_residuals_for_constant() {
        let f = GridFunction::constant(window(64), 2.0);
        let phi = TestFunction::new(vec![0.0], 0.5).unwrap();
        let r = derivative_pairing_residual(&f, &phi, 0).unwrap();
        assert_eq!(r.pairing, 0.0);
        assert!(r.adjoint.within_ulps(8.0));
        assert!(r.distributional.abs() < 1e-12);
    }
}
