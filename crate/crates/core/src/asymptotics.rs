//! Ladders of grid levels and the asymptotic classification of quantities
//! evaluated on them.
//!
//! A quantity `q(N)` is sampled on a few nested levels, its magnitude is fitted
//! to `c·N^p`, and it is called infinite (`p > τ`), infinitesimal (`p < −τ`) or
//! finite. Finite quantities get a limit from Richardson extrapolation on the
//! two finest levels, with the convergence order fitted from the successive
//! differences. When neither fit is clean the outcome is `Unresolved`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridLevel;
use crate::numeric::linear_fit;

/// One evaluation: the resolution parameter and the value there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub scale: f64,
    pub value: f64,
}

impl Sample {
    pub fn new(scale: f64, value: f64) -> Self {
        Self { scale, value }
    }
}

/// Nested levels with strictly increasing `N`, each dividing the next.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ladder {
    levels: Vec<GridLevel>,
}

impl Ladder {
    pub const MIN_LEVELS: usize = 3;

    pub fn new(levels: Vec<GridLevel>) -> Result<Self> {
        if levels.len() < Self::MIN_LEVELS {
            return Err(Error::InvalidLadder(format!(
                "need at least {} levels, got {}",
                Self::MIN_LEVELS,
                levels.len()
            )));
        }
        for w in levels.windows(2) {
            let (a, b) = (w[0].n_cells(), w[1].n_cells());
            if b <= a || b % a != 0 {
                return Err(Error::InvalidLadder(format!("N = {a} does not properly divide N = {b}")));
            }
            if w[0].window() != w[1].window() {
                return Err(Error::InvalidLadder("levels use different windows".into()));
            }
        }
        Ok(Self { levels })
    }

    /// Levels `N = base·factorⁱ` for `i = 0, …, count − 1`.
    pub fn geometric(base: u64, factor: u64, count: usize, window: f64) -> Result<Self> {
        if factor < 2 {
            return Err(Error::InvalidLadder("refinement factor must be at least 2".into()));
        }
        let mut levels = Vec::with_capacity(count);
        let mut n = base;
        for _ in 0..count {
            levels.push(GridLevel::new(n, window)?);
            n = n.checked_mul(factor).ok_or_else(|| Error::InvalidLadder("resolution overflows".into()))?;
        }
        Self::new(levels)
    }

    /// Levels `N = base·2^e` for the given exponents.
    pub fn dyadic(base: u64, exponents: &[u32], window: f64) -> Result<Self> {
        let levels = exponents.iter().map(|&e| crate::grid::make_level(e, base, window)).collect::<Result<Vec<_>>>()?;
        Self::new(levels)
    }

    pub fn levels(&self) -> &[GridLevel] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Evaluate `quantity` on every level (concurrently), returning `(N, q(N))`.
    pub fn evaluate<F>(&self, quantity: F) -> Result<Vec<Sample>>
    where
        F: Fn(GridLevel) -> Result<f64> + Sync,
    {
        self.levels
            .par_iter()
            .map(|&level| {
                quantity(level)
                    .map(|v| Sample::new(level.n(), v))
                    .map_err(|e| Error::AtLevel { n_cells: level.n_cells(), source: Box::new(e) })
            })
            .collect()
    }
}

/// Classification cut-offs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    /// `τ`: exponents above `τ` are infinite, below `−τ` infinitesimal.
    pub exponent: f64,
    /// Largest admissible RMS residual of a log-log fit.
    pub residual: f64,
    /// Magnitudes at or below this are treated as zero in log fits.
    pub zero_floor: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { exponent: 0.2, residual: 1e-2, zero_floor: 1e-13 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum Classification {
    Infinitesimal,
    Finite(f64),
    Infinite,
    Unresolved,
}

impl Classification {
    pub fn is_finite(&self) -> bool {
        matches!(self, Classification::Finite(_))
    }

    pub fn label(&self) -> &'static str {
        match self {
            Classification::Infinitesimal => "infinitesimal",
            Classification::Finite(_) => "finite",
            Classification::Infinite => "infinite",
            Classification::Unresolved => "unresolved",
        }
    }
}

/// Result of fitting `|q| ≈ c·N^p` and, for finite quantities, the limit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticEstimate {
    pub exponent: f64,
    pub coefficient: f64,
    pub limit: Option<f64>,
    /// Order of convergence to the limit, when one was fitted.
    pub order: Option<f64>,
    pub fit_residual: f64,
    pub classification: Classification,
    pub thresholds: Thresholds,
}

fn sorted(samples: &[Sample]) -> Result<Vec<Sample>> {
    if samples.len() < 3 {
        return Err(Error::TooFewSamples { needed: 3, got: samples.len() });
    }
    let mut s = samples.to_vec();
    if let Some(bad) = s.iter().find(|s| !s.value.is_finite() || !(s.scale > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "sample ({}, {}) is not finite with a positive scale",
            bad.scale, bad.value
        )));
    }
    s.sort_by(|a, b| a.scale.total_cmp(&b.scale));
    if s.windows(2).any(|w| w[0].scale == w[1].scale) {
        return Err(Error::InvalidArgument("duplicate sample scales".into()));
    }
    Ok(s)
}

/// Whether `|v|` decays at least like `N^(−τ)` between every pair of
/// consecutive levels, dropping to the zero floor for good once it gets
/// there. Covers decay faster than any power, which a single power law fits
/// poorly.
fn dominated_decay(s: &[Sample], thresholds: Thresholds) -> bool {
    let floor = thresholds.zero_floor;
    s.windows(2).all(|w| {
        let (a, b) = (w[0].value.abs(), w[1].value.abs());
        if b <= floor {
            return true;
        }
        if a <= floor {
            return false;
        }
        (b / a).ln() / (w[1].scale / w[0].scale).ln() < -thresholds.exponent
    })
}

/// Fit the power law, classify, and extrapolate finite quantities.
pub fn fit_power_law(samples: &[Sample], thresholds: Thresholds) -> Result<AsymptoticEstimate> {
    let s = sorted(samples)?;
    let first = s[0].value;
    if s.iter().all(|x| x.value == first) {
        let classification = if first == 0.0 { Classification::Infinitesimal } else { Classification::Finite(first) };
        return Ok(AsymptoticEstimate {
            exponent: 0.0,
            coefficient: first,
            limit: Some(first),
            order: None,
            fit_residual: 0.0,
            classification,
            thresholds,
        });
    }
    let xs: Vec<f64> = s.iter().map(|x| x.scale.ln()).collect();
    let mags: Vec<f64> = s.iter().map(|x| x.value.abs().max(thresholds.zero_floor).ln()).collect();
    let (p, lnc, rms) = linear_fit(&xs, &mags);
    let mut est = AsymptoticEstimate {
        exponent: p,
        coefficient: lnc.exp(),
        limit: None,
        order: None,
        fit_residual: rms,
        classification: Classification::Unresolved,
        thresholds,
    };

    if s.iter().all(|x| x.value.abs() <= thresholds.zero_floor) {
        est.limit = Some(0.0);
        est.classification = Classification::Infinitesimal;
        return Ok(est);
    }
    if p > thresholds.exponent {
        if rms <= thresholds.residual {
            est.classification = Classification::Infinite;
        }
        return Ok(est);
    }
    if p < -thresholds.exponent {
        if rms <= thresholds.residual || dominated_decay(&s, thresholds) {
            est.limit = Some(0.0);
            est.classification = Classification::Infinitesimal;
        }
        return Ok(est);
    }

    // Finite band: fit the decay of successive differences.
    let diffs: Vec<f64> = s.windows(2).map(|w| w[1].value - w[0].value).collect();
    let last = s[s.len() - 1].value;
    let negligible = thresholds.zero_floor.max(f64::EPSILON * 16.0 * last.abs());
    if diffs.iter().all(|d| d.abs() <= negligible) {
        est.limit = Some(last);
        est.fit_residual = 0.0;
        est.classification = Classification::Finite(last);
        return Ok(est);
    }
    let same_sign = diffs.iter().all(|d| *d > 0.0) || diffs.iter().all(|d| *d < 0.0);
    if !same_sign {
        return Ok(est);
    }
    let dx: Vec<f64> = s.windows(2).map(|w| (w[0].scale * w[1].scale).sqrt().ln()).collect();
    let dy: Vec<f64> = diffs.iter().map(|d| d.abs().ln()).collect();
    let (slope, _, drms) = linear_fit(&dx, &dy);
    let order = -slope;
    est.fit_residual = drms;
    est.order = Some(order);
    if order <= 0.0 || drms > thresholds.residual {
        return Ok(est);
    }
    let n = s.len();
    let limit = richardson(s[n - 2], s[n - 1], order);
    est.limit = Some(limit);
    est.classification = Classification::Finite(limit);
    Ok(est)
}

/// Limit of a finite quantity (0 for infinitesimals). With `assumed_order`, Richardson extrapolation
/// on the two finest samples uses that order instead of the fitted one.
pub fn standard_part(samples: &[Sample], assumed_order: Option<f64>, thresholds: Thresholds) -> Result<f64> {
    let est = fit_power_law(samples, thresholds)?;
    let fitted = match est.classification {
        Classification::Finite(v) => v,
        Classification::Infinitesimal => 0.0,
        _ => return Err(Error::NotFinite { estimate: Box::new(est) }),
    };
    match assumed_order {
        None => Ok(fitted),
        Some(order) => {
            let s = sorted(samples)?;
            let n = s.len();
            Ok(richardson(s[n - 2], s[n - 1], order))
        }
    }
}

/// One Richardson step eliminating an error term `∝ scale^{−order}`.
pub fn richardson(coarse: Sample, fine: Sample, order: f64) -> f64 {
    let r = (fine.scale / coarse.scale).powf(order);
    fine.value + (fine.value - coarse.value) / (r - 1.0)
}

/// Romberg table: row `j` eliminates the error orders `orders[..j]` in turn.
/// Row 0 holds the raw values; each later row is one entry shorter.
pub fn richardson_table(samples: &[Sample], orders: &[f64]) -> Result<Vec<Vec<f64>>> {
    let mut s = samples.to_vec();
    s.sort_by(|a, b| a.scale.total_cmp(&b.scale));
    if orders.len() >= s.len() {
        return Err(Error::TooFewSamples { needed: orders.len() + 1, got: s.len() });
    }
    let mut rows = vec![s.iter().map(|x| x.value).collect::<Vec<f64>>()];
    for (j, &order) in orders.iter().enumerate() {
        let prev = &rows[j];
        let next: Vec<f64> = (0..prev.len() - 1)
            .map(|i| {
                let r = (s[i + j + 1].scale / s[i + j].scale).powf(order);
                prev[i + 1] + (prev[i + 1] - prev[i]) / (r - 1.0)
            })
            .collect();
        rows.push(next);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn samples(q: impl Fn(f64) -> f64) -> Vec<Sample> {
        [720.0, 1440.0, 2880.0].iter().map(|&n| Sample::new(n, q(n))).collect()
    }

    #[test]
    fn reciprocal_is_infinitesimal() {
        let e = fit_power_law(&samples(|n| 1.0 / n), Thresholds::default()).unwrap();
        assert!((e.exponent + 1.0).abs() < 1e-12);
        assert_eq!(e.classification, Classification::Infinitesimal);
        assert_eq!(e.limit, Some(0.0));
    }

    #[test]
    fn affine_is_finite() {
        let e = fit_power_law(&samples(|n| 2.0 + 3.0 / n), Thresholds::default()).unwrap();
        let Classification::Finite(l) = e.classification else { panic!("{e:?}") };
        assert!((l - 2.0).abs() < 1e-12);
        assert!((e.order.unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn square_root_is_infinite() {
        let e = fit_power_law(&samples(f64::sqrt), Thresholds::default()).unwrap();
        assert!((e.exponent - 0.5).abs() < 1e-12);
        assert_eq!(e.classification, Classification::Infinite);
    }

    #[test]
    fn faster_than_any_power_is_infinitesimal() {
        let ns = [720.0, 1440.0, 2880.0, 5760.0];
        let s: Vec<Sample> = ns.iter().map(|&n| Sample::new(n, (-n / 100.0).exp())).collect();
        let e = fit_power_law(&s, Thresholds::default()).unwrap();
        assert!(e.fit_residual > Thresholds::default().residual);
        assert_eq!(e.classification, Classification::Infinitesimal);
        let bumpy: Vec<Sample> = ns.iter().zip([1e-3, 1e-6, 2e-6, 1e-9]).map(|(&n, v)| Sample::new(n, v)).collect();
        assert_eq!(fit_power_law(&bumpy, Thresholds::default()).unwrap().classification, Classification::Unresolved);
    }

    #[test]
    fn constant_samples() {
        let e = fit_power_law(&samples(|_| 2.0), Thresholds::default()).unwrap();
        assert_eq!(e.classification, Classification::Finite(2.0));
        assert_eq!(e.exponent, 0.0);
        assert_eq!(e.fit_residual, 0.0);
        let z = fit_power_law(&samples(|_| 0.0), Thresholds::default()).unwrap();
        assert_eq!(z.classification, Classification::Infinitesimal);
        assert_eq!(standard_part(&samples(|_| 0.0), None, Thresholds::default()).unwrap(), 0.0);
    }

    #[test]
    fn oscillation_is_unresolved() {
        let s: Vec<Sample> = [720.0, 1440.0, 2880.0, 5760.0]
            .iter()
            .enumerate()
            .map(|(i, &n)| Sample::new(n, 1.0 + if i % 2 == 0 { 0.1 } else { -0.1 }))
            .collect();
        let e = fit_power_law(&s, Thresholds::default()).unwrap();
        assert_eq!(e.classification, Classification::Unresolved);
    }

    #[test]
    fn standard_part_exact_for_affine() {
        let s = samples(|n| 2.0 + 3.0 / n);
        let l = standard_part(&s, Some(1.0), Thresholds::default()).unwrap();
        assert!((l - 2.0).abs() <= 8.0 * f64::EPSILON * 2.0);
        assert!(matches!(standard_part(&samples(|n| n), None, Thresholds::default()), Err(Error::NotFinite { .. })));
    }

    #[test]
    fn too_few_samples() {
        let s = vec![Sample::new(1.0, 1.0), Sample::new(2.0, 1.0)];
        assert!(matches!(fit_power_law(&s, Thresholds::default()), Err(Error::TooFewSamples { .. })));
    }

    #[test]
    fn romberg_removes_two_orders() {
        let s: Vec<Sample> =
            [10.0, 20.0, 40.0].iter().map(|&m| Sample::new(m, 1.0 + 2.0 / m + 5.0 / (m * m))).collect();
        let t = richardson_table(&s, &[1.0, 2.0]).unwrap();
        assert_eq!(t.len(), 3);
        assert!((t[2][0] - 1.0).abs() < 1e-12, "{t:?}");
    }

    #[test]
    fn ladder_checks_nesting() {
        let lv = |n| GridLevel::new(n, 1.0).unwrap();
        assert!(Ladder::new(vec![lv(720), lv(1440), lv(2880)]).is_ok());
        assert!(Ladder::new(vec![lv(720), lv(1000), lv(2000)]).is_err());
        assert!(Ladder::new(vec![lv(720), lv(1440)]).is_err());
        let l = Ladder::geometric(720, 2, 3, 1.0).unwrap();
        let s = l.evaluate(|lv| Ok(1.0 / lv.n())).unwrap();
        assert_eq!(s[2], Sample::new(2880.0, 1.0 / 2880.0));
    }

    #[test]
    fn ladder_errors_carry_level() {
        let l = Ladder::geometric(720, 2, 3, 1.0).unwrap();
        let err = l.evaluate(|lv| if lv.n_cells() == 1440 { Err(Error::EmptyDomain) } else { Ok(0.0) }).unwrap_err();
        assert!(matches!(err, Error::AtLevel { n_cells: 1440, .. }));
    }
}
