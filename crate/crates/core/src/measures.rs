//! Empirical value distributions of grid functions.
//!
//! Around a probe point `x` the values of `f` on a small window are collected
//! into a [`ValueMeasure`]. As the window shrinks while holding more and more
//! grid points, these measures approximate the Young measure `ν_x` generated
//! by `f`. Values beyond a cutoff are counted as escaped mass and discarded, so
//! the retained mass may be below 1.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::asymptotics::{fit_power_law, AsymptoticEstimate, Ladder, Sample, Thresholds};
use crate::error::{Error, Result};
use crate::grid::{for_each_index, GridDomain, GridFunction, GridLevel, MAX_DIM};
use crate::numeric::CompensatedSum;
use crate::pairing::{pair, TestBattery, TestFunction};
use crate::quadrature::GaussLegendre;

pub const DEFAULT_BINS: usize = 64;
pub const MIN_WINDOW_POINTS: usize = 16;
pub const ATOM_THRESHOLD: f64 = 0.25;
/// Gauss-Legendre nodes per axis when integrating a test function over a probe cell.
const PROBE_CELL_NODES: usize = 12;

/// Empirical distribution of finitely many values: distinct retained values
/// with their multiplicities, plus the count of values beyond the cutoff.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValueMeasure {
    cutoff: f64,
    values: Vec<(f64, u64)>,
    escaped: u64,
    total: u64,
}

/// One histogram bin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bin {
    pub lo: f64,
    pub hi: f64,
    pub mass: f64,
    /// Mass-weighted mean of the values in the bin.
    pub mean: Option<f64>,
}

/// A bin carrying more than the atom threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Atom {
    pub location: f64,
    pub mass: f64,
}

impl ValueMeasure {
    pub fn from_values(values: impl IntoIterator<Item = f64>, cutoff: f64) -> Self {
        let mut kept = Vec::new();
        let mut escaped = 0u64;
        let mut total = 0u64;
        for v in values {
            total += 1;
            if v.abs() > cutoff || v.is_nan() {
                escaped += 1;
            } else {
                kept.push(v);
            }
        }
        kept.sort_by(f64::total_cmp);
        let mut grouped: Vec<(f64, u64)> = Vec::new();
        for v in kept {
            match grouped.last_mut() {
                Some((last, c)) if *last == v => *c += 1,
                _ => grouped.push((v, 1)),
            }
        }
        Self { cutoff, values: grouped, escaped, total }
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    /// Distinct retained values with their counts, in increasing order.
    pub fn values(&self) -> &[(f64, u64)] {
        &self.values
    }

    pub fn total_count(&self) -> u64 {
        self.total
    }

    pub fn escaped_count(&self) -> u64 {
        self.escaped
    }

    pub fn retained_count(&self) -> u64 {
        self.values.iter().map(|(_, c)| c).sum()
    }

    pub fn escaped_mass(&self) -> f64 {
        self.escaped as f64 / self.total.max(1) as f64
    }

    pub fn retained_mass(&self) -> f64 {
        self.retained_count() as f64 / self.total.max(1) as f64
    }

    /// `∫ Ψ dν` over the retained values.
    pub fn integrate(&self, psi: impl Fn(f64) -> f64) -> f64 {
        let s: CompensatedSum = self.values.iter().map(|&(v, c)| c as f64 * psi(v)).collect();
        s.value() / self.total.max(1) as f64
    }

    pub fn mean(&self) -> f64 {
        self.integrate(|v| v)
    }

    /// Histogram with `bins` uniform bins over `[−cutoff, cutoff]`.
    pub fn histogram(&self, bins: usize) -> Vec<Bin> {
        let bins = bins.max(1);
        let width = 2.0 * self.cutoff / bins as f64;
        let mut counts = vec![0u64; bins];
        let mut sums = vec![CompensatedSum::new(); bins];
        for &(v, c) in &self.values {
            let b = (((v + self.cutoff) / width).floor().max(0.0) as usize).min(bins - 1);
            counts[b] += c;
            sums[b].add(v * c as f64);
        }
        let total = self.total.max(1) as f64;
        (0..bins)
            .map(|b| Bin {
                lo: -self.cutoff + b as f64 * width,
                hi: -self.cutoff + (b + 1) as f64 * width,
                mass: counts[b] as f64 / total,
                mean: (counts[b] > 0).then(|| sums[b].value() / counts[b] as f64),
            })
            .collect()
    }

    /// Bins holding more than `threshold` mass, located at their mean value.
    pub fn atoms(&self, bins: usize, threshold: f64) -> Vec<Atom> {
        self.histogram(bins)
            .into_iter()
            .filter(|b| b.mass > threshold)
            .map(|b| Atom { location: b.mean.unwrap_or(0.5 * (b.lo + b.hi)), mass: b.mass })
            .collect()
    }

    /// Largest bin-wise mass difference.
    pub fn bin_distance(&self, other: &ValueMeasure, bins: usize) -> f64 {
        let a = self.histogram(bins);
        let b = other.histogram(bins);
        a.iter().zip(&b).map(|(x, y)| (x.mass - y.mass).abs()).fold(0.0, f64::max)
    }
}

/// Default cutoff `8·median(|f|) + 1`.
pub fn default_cutoff(f: &GridFunction) -> f64 {
    let mut a: Vec<f64> = f.values().iter().map(|v| v.abs()).collect();
    if a.is_empty() {
        return 1.0;
    }
    let mid = a.len() / 2;
    let (_, m, _) = a.select_nth_unstable_by(mid, f64::total_cmp);
    8.0 * *m + 1.0
}

/// Default window size in grid steps: the smallest even divisor of `N` that is
/// at least `√N`.
pub fn default_window_steps(n_cells: u64) -> u64 {
    let root = (n_cells as f64).sqrt().ceil() as u64;
    (root.max(2)..=n_cells).find(|&m| m.is_multiple_of(2) && n_cells.is_multiple_of(m)).unwrap_or(n_cells.max(2))
}

/// Probe points with the quadrature weight each carries.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeGrid {
    pub points: Vec<Vec<f64>>,
    /// Side lengths of the box owned by each probe, centred on it.
    pub cell: Vec<f64>,
}

impl ProbeGrid {
    pub const DEFAULT_PER_AXIS: usize = 17;

    /// Volume of one probe cell.
    pub fn weight(&self) -> f64 {
        self.cell.iter().product()
    }

    /// Cell midpoints of a regular `per_axis`ᵏ subdivision of the box.
    pub fn regular(lo: &[f64], hi: &[f64], per_axis: usize) -> Self {
        let dim = lo.len();
        let steps: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| (b - a) / per_axis as f64).collect();
        let mut points = Vec::new();
        let bounds: Vec<(i64, i64)> = (0..dim).map(|_| (0, per_axis as i64 - 1)).collect();
        for_each_index(&bounds, |j| {
            points.push((0..dim).map(|a| lo[a] + (j[a] as f64 + 0.5) * steps[a]).collect());
        });
        Self { points, cell: steps }
    }

    /// Centres of disjoint windows of `m` steps per axis that tile the index
    /// range of `domain`, starting at its lowest index on each axis.
    pub fn tiling(domain: &GridDomain, m: u64) -> Self {
        let level = domain.level();
        let dim = domain.dim();
        let mut lo = [i64::MAX; MAX_DIM];
        let mut hi = [i64::MIN; MAX_DIM];
        for p in domain.points() {
            for a in 0..dim {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        let m = m as i64;
        let bounds: Vec<(i64, i64)> = (0..dim).map(|a| (0, (hi[a] - lo[a] + 1) / m - 1)).collect();
        let mut points = Vec::new();
        for_each_index(&bounds, |j| {
            points.push((0..dim).map(|a| level.coordinate(lo[a] + j[a] * m + m / 2)).collect());
        });
        Self { points, cell: vec![m as f64 * level.step(); dim] }
    }
}

/// Options for [`extract_measure`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeasureOptions {
    /// Window side length; `None` uses [`default_window_steps`] grid steps.
    pub window_width: Option<f64>,
    pub bins: usize,
    /// Value cutoff; `None` uses [`default_cutoff`].
    pub cutoff: Option<f64>,
    pub min_points: usize,
}

impl Default for MeasureOptions {
    fn default() -> Self {
        Self { window_width: None, bins: DEFAULT_BINS, cutoff: None, min_points: MIN_WINDOW_POINTS }
    }
}

/// Per-probe value measures of one grid function.
#[derive(Debug, Clone, Serialize)]
pub struct MeasureField {
    pub probes: ProbeGrid,
    pub measures: Vec<ValueMeasure>,
    pub window_width: f64,
    pub cutoff: f64,
    pub bins: usize,
}

impl MeasureField {
    /// Fraction of probes whose escaped mass exceeds `delta`.
    pub fn escaping_fraction(&self, delta: f64) -> f64 {
        let n = self.measures.iter().filter(|m| m.escaped_mass() > delta).count();
        n as f64 / self.measures.len().max(1) as f64
    }
}

/// Smallest lattice index `i` with `i·ε ≥ x`.
fn ceil_index(level: GridLevel, x: f64) -> i64 {
    let i = level.floor_index(x);
    if level.coordinate(i) == x {
        i
    } else {
        i + 1
    }
}

/// Index range per axis of the half-open window `Π [pₐ − w/2, pₐ + w/2)`.
/// A grid-aligned width `w = mε` always yields exactly `m` indices.
fn window_bounds(level: GridLevel, probe: &[f64], width: f64) -> Vec<(i64, i64)> {
    let steps = level.exact_index(width);
    probe
        .iter()
        .map(|&p| {
            let lo = ceil_index(level, p - 0.5 * width);
            match steps {
                Some(m) => (lo, lo + m - 1),
                None => (lo, ceil_index(level, p + 0.5 * width) - 1),
            }
        })
        .collect()
}

fn window_values(f: &GridFunction, probe: &[f64], width: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for_each_index(&window_bounds(f.level(), probe, width), |i| {
        if let Some(id) = f.domain().id_of(i) {
            out.push(f.values()[id]);
        }
    });
    out
}

/// Window measures of `f` at every probe.
pub fn extract_measure(f: &GridFunction, probes: &ProbeGrid, options: MeasureOptions) -> Result<MeasureField> {
    let level = f.level();
    let width = options.window_width.unwrap_or_else(|| default_window_steps(level.n_cells()) as f64 * level.step());
    if !(width > 0.0) {
        return Err(Error::InvalidArgument(format!("window width must be positive, got {width}")));
    }
    let cutoff = options.cutoff.unwrap_or_else(|| default_cutoff(f));
    let measures = probes
        .points
        .par_iter()
        .map(|p| {
            if p.len() != f.dim() {
                return Err(Error::DimensionMismatch { expected: f.dim(), got: p.len() });
            }
            let vals = window_values(f, p, width);
            if vals.len() < options.min_points {
                return Err(Error::WindowUnderflow { probe: p.clone(), count: vals.len(), needed: options.min_points });
            }
            Ok(ValueMeasure::from_values(vals, cutoff))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MeasureField { probes: probes.clone(), measures, window_width: width, cutoff, bins: options.bins })
}

/// Uniform measure over one period `f(0), …, f((M−1)ε)` of a 1D function,
/// after checking periodicity over the whole domain to 8 ulp of `max |f|`.
pub fn periodic_measure(f: &GridFunction, period_steps: usize, cutoff: f64) -> Result<ValueMeasure> {
    if f.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: f.dim() });
    }
    if period_steps == 0 {
        return Err(Error::InvalidArgument("period must be at least one step".into()));
    }
    let m = period_steps as i64;
    let scale = f.max_abs();
    for (p, &v) in f.domain().points().zip(f.values()) {
        let q = [p[0] + m];
        if let Some(id) = f.domain().id_of(&q) {
            let w = f.values()[id];
            if (w - v).abs() > 8.0 * f64::EPSILON * scale {
                return Err(Error::NotPeriodic { period: period_steps, index: p.to_vec(), mismatch: w - v });
            }
        }
    }
    let values = (0..m)
        .map(|i| {
            f.domain()
                .id_of(&[i])
                .map(|id| f.values()[id])
                .ok_or_else(|| Error::InvalidArgument(format!("index {i} of the first period is outside the domain")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ValueMeasure::from_values(values, cutoff))
}

/// `∫ (∫ Ψ dν_x) φ(x) dx` with `ν_x` constant on each probe cell and `φ`
/// integrated over the cell by Gauss-Legendre quadrature.
pub fn pair_measure(field: &MeasureField, psi: impl Fn(f64) -> f64 + Sync, phi: &TestFunction) -> f64 {
    let rule = GaussLegendre::new(PROBE_CELL_NODES);
    let cell = &field.probes.cell;
    let terms: Vec<f64> = field
        .probes
        .points
        .par_iter()
        .zip(&field.measures)
        .map(|(p, m)| {
            let lo: Vec<f64> = p.iter().zip(cell).map(|(x, h)| x - 0.5 * h).collect();
            let hi: Vec<f64> = p.iter().zip(cell).map(|(x, h)| x + 0.5 * h).collect();
            let outside = lo
                .iter()
                .zip(&hi)
                .zip(phi.center())
                .any(|((a, b), c)| *b <= c - phi.radius() || *a >= c + phi.radius());
            if outside {
                0.0
            } else {
                m.integrate(&psi) * rule.integrate_box(&lo, &hi, |x| phi.eval(x))
            }
        })
        .collect();
    terms.into_iter().collect::<CompensatedSum>().value()
}

/// `|⟨f, φ⟩ − ∫ (∫ τ dν_x) φ dx|` per battery member across the ladder, with
/// window measures on probes that tile the domain.
#[derive(Debug, Clone, Serialize)]
pub struct BarycentreResidual {
    pub samples: Vec<Sample>,
    pub estimate: AsymptoticEstimate,
}

pub fn barycentre_check<F>(
    family: F,
    battery: &TestBattery,
    ladder: &Ladder,
    options: MeasureOptions,
    thresholds: Thresholds,
) -> Result<Vec<BarycentreResidual>>
where
    F: Fn(GridLevel) -> Result<GridFunction> + Sync,
{
    let per_level: Vec<Vec<f64>> = ladder
        .levels()
        .par_iter()
        .map(|&level| {
            let at_level = |e| Error::AtLevel { n_cells: level.n_cells(), source: Box::new(e) };
            let f = family(level).map_err(at_level)?;
            let m = default_window_steps(level.n_cells());
            let probes = ProbeGrid::tiling(f.domain(), m);
            let opts = MeasureOptions { window_width: Some(m as f64 * level.step()), ..options };
            let field = extract_measure(&f, &probes, opts).map_err(at_level)?;
            let cutoff = field.cutoff;
            battery
                .functions()
                .iter()
                .map(|phi| {
                    let direct = pair(&f, phi)?;
                    let via = pair_measure(&field, |t| if t.abs() <= cutoff { t } else { 0.0 }, phi);
                    Ok((direct - via).abs())
                })
                .collect::<Result<Vec<f64>>>()
                .map_err(at_level)
        })
        .collect::<Result<_>>()?;
    (0..battery.len())
        .map(|j| {
            let samples: Vec<Sample> =
                ladder.levels().iter().zip(&per_level).map(|(l, v)| Sample::new(l.n(), v[j])).collect();
            let estimate = fit_power_law(&samples, thresholds)?;
            Ok(BarycentreResidual { samples, estimate })
        })
        .collect()
}

/// Truncations `max(−h, min(h, f))` for each height.
pub fn truncation_ladder(f: &GridFunction, heights: &[f64]) -> Vec<GridFunction> {
    heights.iter().map(|&h| f.map(|v| v.clamp(-h, h))).collect()
}

/// Window box around a probe on the window of `level`, for callers that need
/// the raw values.
pub fn window_domain(level: GridLevel, probe: &[f64], width: f64) -> Result<Arc<GridDomain>> {
    let mut pts = Vec::new();
    for_each_index(&window_bounds(level, probe, width), |i| pts.push(i.to_vec()));
    Ok(Arc::new(GridDomain::from_points(level, probe.len(), &pts)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn window(n: u64) -> Arc<GridDomain> {
        Arc::new(GridDomain::window_box(GridLevel::new(n, 1.0).unwrap(), 1).unwrap())
    }

    fn alternating(n: u64) -> GridFunction {
        GridFunction::from_index_fn(window(n), |p| if p[0] % 2 == 0 { 1.0 } else { -1.0 })
    }

    #[test]
    fn rademacher_window_measure() {
        let f = alternating(720);
        let probes = ProbeGrid::regular(&[-0.5], &[0.5], 5);
        let field = extract_measure(&f, &probes, MeasureOptions::default()).unwrap();
        for m in &field.measures {
            assert_eq!(m.values(), &[(-1.0, m.total_count() / 2), (1.0, m.total_count() / 2)]);
            let atoms = m.atoms(DEFAULT_BINS, ATOM_THRESHOLD);
            assert_eq!(atoms.len(), 2);
            assert!(atoms.iter().all(|a| a.mass == 0.5));
        }
    }

    #[test]
    fn constant_is_a_point_mass() {
        let f = GridFunction::constant(window(720), 0.3);
        let field = extract_measure(&f, &ProbeGrid::regular(&[-0.5], &[0.5], 3), MeasureOptions::default()).unwrap();
        for m in &field.measures {
            assert_eq!(m.values().len(), 1);
            assert_eq!(m.retained_mass(), 1.0);
        }
    }

    #[test]
    fn tall_spike_escapes() {
        let f = GridFunction::from_index_fn(window(720), |p| if p[0] == 360 { 720.0 } else { 0.0 });
        let probes = ProbeGrid { points: vec![vec![0.5]], cell: vec![1.0] };
        let field = extract_measure(&f, &probes, MeasureOptions::default()).unwrap();
        let m = &field.measures[0];
        assert_eq!(m.escaped_count(), 1);
        assert_eq!(m.retained_count() + m.escaped_count(), m.total_count());
        assert_eq!(m.total_count(), 30);
    }

    #[test]
    fn underflow_is_reported() {
        let f = GridFunction::constant(window(64), 1.0);
        let probes = ProbeGrid { points: vec![vec![0.0]], cell: vec![1.0] };
        let opts = MeasureOptions { window_width: Some(4.0 / 64.0), ..MeasureOptions::default() };
        assert!(matches!(extract_measure(&f, &probes, opts), Err(Error::WindowUnderflow { count: 4, .. })));
    }

    #[test]
    fn window_steps_default() {
        assert_eq!(default_window_steps(720), 30);
        assert_eq!(default_window_steps(1440), 40);
        assert_eq!(default_window_steps(2880), 60);
        assert_eq!(default_window_steps(46080), 240);
    }

    #[test]
    fn periodic_sine_moments() {
        let m = 64usize;
        let f =
            GridFunction::from_index_fn(window(64), |p| (2.0 * std::f64::consts::PI * p[0] as f64 / m as f64).sin());
        let err = periodic_measure(&f, 32, 2.0);
        assert!(matches!(err, Err(Error::NotPeriodic { .. })));
        let nu = periodic_measure(&f, m, 2.0).unwrap();
        for q in 1..5 {
            let direct: f64 =
                (0..m).map(|i| (2.0 * std::f64::consts::PI * i as f64 / m as f64).sin().powi(q)).sum::<f64>()
                    / m as f64;
            assert!((nu.integrate(|v| v.powi(q)) - direct).abs() < 1e-15);
        }
    }

    #[test]
    fn truncation_clamps() {
        let f = GridFunction::from_index_fn(window(16), |p| if p[0] == 0 { 16.0 } else { 0.5 });
        let t = truncation_ladder(&f, &[1.0, 100.0]);
        assert_eq!(t[0].at(&[0]), 1.0);
        assert_eq!(t[0].at(&[3]), 0.5);
        assert_eq!(t[1].values(), f.values());
    }
}
