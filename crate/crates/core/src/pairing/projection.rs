use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{fit_power_law, AsymptoticEstimate, Classification, Ladder, Sample, Thresholds};
use crate::error::{Error, Result};
use crate::grid::{for_each_index, BoxRegion, GridDomain, GridFunction, GridLevel, Region, MAX_DIM};
use crate::numeric::CompensatedSum;
use crate::quadrature::GaussLegendre;

const CELL_NODES: usize = 4;

/// Which cell a grid point owns.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellAlignment {
    /// `[y, y+ε]ᵏ`, the cell of the step extension.
    #[default]
    Forward,
    /// `[y−ε/2, y+ε/2]ᵏ`.
    Centered,
}

/// Sub-boxes of `[lo, hi]` cut at every break coordinate strictly inside.
fn split_box(lo: &[f64], hi: &[f64], breaks: &[f64], mut visit: impl FnMut(&[f64], &[f64])) {
    let dim = lo.len();
    let pieces: Vec<Vec<f64>> = (0..dim)
        .map(|a| {
            let mut cuts = vec![lo[a]];
            cuts.extend(breaks.iter().copied().filter(|&b| b > lo[a] && b < hi[a]));
            cuts.push(hi[a]);
            cuts.sort_by(f64::total_cmp);
            cuts
        })
        .collect();
    let bounds: Vec<(i64, i64)> = pieces.iter().map(|p| (0, p.len() as i64 - 2)).collect();
    let (mut sl, mut sh) = ([0.0; MAX_DIM], [0.0; MAX_DIM]);
    for_each_index(&bounds, |k| {
        for a in 0..dim {
            sl[a] = pieces[a][k[a] as usize];
            sh[a] = pieces[a][k[a] as usize + 1];
        }
        visit(&sl[..dim], &sh[..dim]);
    });
}

fn split_box_integral(
    rule: &GaussLegendre,
    lo: &[f64],
    hi: &[f64],
    breaks: &[f64],
    g: &(dyn Fn(&[f64]) -> f64 + Sync),
) -> f64 {
    let mut total = CompensatedSum::new();
    split_box(lo, hi, breaks, |a, b| total.add(rule.integrate_box(a, b, g)));
    total.value()
}

/// Mean of `g` over `[lo, hi]`; exact for constants on unsplit boxes.
fn split_box_mean(
    rule: &GaussLegendre,
    lo: &[f64],
    hi: &[f64],
    breaks: &[f64],
    g: &(dyn Fn(&[f64]) -> f64 + Sync),
) -> f64 {
    let whole: f64 = lo.iter().zip(hi).map(|(a, b)| b - a).product();
    let mut total = CompensatedSum::new();
    split_box(lo, hi, breaks, |a, b| {
        let part: f64 = a.iter().zip(b).map(|(x, y)| y - x).product();
        let mean = rule.mean_box(a, b, g);
        total.add(if part == whole { mean } else { mean * (part / whole) });
    });
    total.value()
}

fn cell_bounds(level: GridLevel, index: &[i64], alignment: CellAlignment) -> ([f64; MAX_DIM], [f64; MAX_DIM]) {
    let (mut lo, mut hi) = ([0.0; MAX_DIM], [0.0; MAX_DIM]);
    for (a, &i) in index.iter().enumerate() {
        match alignment {
            CellAlignment::Forward => {
                lo[a] = level.coordinate(i);
                hi[a] = level.coordinate(i + 1);
            }
            CellAlignment::Centered => {
                lo[a] = (2 * i - 1) as f64 / (2.0 * level.n());
                hi[a] = (2 * i + 1) as f64 / (2.0 * level.n());
            }
        }
    }
    (lo, hi)
}

/// Cell averages `ε^{−k} ∫_cell g` on every domain point, by tensor
/// Gauss–Legendre quadrature with four nodes per axis.
pub fn l2_project(
    g: impl Fn(&[f64]) -> f64 + Sync,
    domain: Arc<GridDomain>,
    alignment: CellAlignment,
) -> Result<GridFunction> {
    l2_project_with_breaks(g, domain, alignment, &[])
}

/// As [`l2_project`], splitting cells at the given coordinates (the same list
/// on every axis) so that piecewise-smooth `g` is integrated exactly.
pub fn l2_project_with_breaks(
    g: impl Fn(&[f64]) -> f64 + Sync,
    domain: Arc<GridDomain>,
    alignment: CellAlignment,
    breaks: &[f64],
) -> Result<GridFunction> {
    let level = domain.level();
    let dim = domain.dim();
    let rule = GaussLegendre::new(CELL_NODES);
    let values: Vec<f64> = (0..domain.len())
        .into_par_iter()
        .map(|id| {
            let (lo, hi) = cell_bounds(level, domain.index(id), alignment);
            split_box_mean(&rule, &lo[..dim], &hi[..dim], breaks, &g)
        })
        .collect();
    if let Some(id) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteSample { point: domain.coords(id)[..dim].to_vec(), value: values[id] });
    }
    GridFunction::new(domain, values)
}

#[derive(Debug, Clone, Serialize)]
pub struct DefectEstimate {
    pub samples: Vec<Sample>,
    pub estimate: AsymptoticEstimate,
}

/// `‖g − (Pg)~‖₂` over the box `region` on every ladder level, where `P` is the
/// forward cell average and `~` the step extension.
pub fn l2_projection_defect(
    g: impl Fn(&[f64]) -> f64 + Sync,
    region: &BoxRegion,
    ladder: &Ladder,
    breaks: &[f64],
    thresholds: Thresholds,
) -> Result<DefectEstimate> {
    let samples = ladder.evaluate(|level| projection_defect_at(&g, region, level, breaks))?;
    let estimate = fit_power_law(&samples, thresholds)?;
    Ok(DefectEstimate { samples, estimate })
}

fn projection_defect_at(
    g: &(dyn Fn(&[f64]) -> f64 + Sync),
    region: &BoxRegion,
    level: GridLevel,
    breaks: &[f64],
) -> Result<f64> {
    let dim = region.dim();
    let domain = Arc::new(GridDomain::discretize(region, level)?);
    let p = l2_project_with_breaks(g, Arc::clone(&domain), CellAlignment::Forward, breaks)?;
    let mut cuts = breaks.to_vec();
    cuts.extend(region.lo().iter().chain(region.hi()).copied());
    let bounds: Vec<(i64, i64)> = (0..dim)
        .map(|a| {
            let w = level.window_cells();
            (level.floor_index(region.lo()[a]).max(-w), level.floor_index(region.hi()[a]).min(w))
        })
        .collect();
    let mut cells = Vec::new();
    for_each_index(&bounds, |i| cells.push(i.to_vec()));
    let rule = GaussLegendre::new(CELL_NODES);
    let parts: Vec<f64> = cells
        .par_iter()
        .map(|i| {
            let (lo, hi) = cell_bounds(level, i, CellAlignment::Forward);
            let pv = p.at(i);
            let integrand = |x: &[f64]| {
                let gx = if region.contains(x) { g(x) } else { 0.0 };
                (gx - pv) * (gx - pv)
            };
            split_box_integral(&rule, &lo[..dim], &hi[..dim], &cuts, &integrand)
        })
        .collect();
    Ok(parts.into_iter().collect::<CompensatedSum>().value().max(0.0).sqrt())
}

/// Per-probe standard part and S-continuity diagnostic.
#[derive(Debug, Clone, Serialize)]
pub struct ProbeEstimate {
    pub probe: Vec<f64>,
    pub values: Vec<Sample>,
    pub value: AsymptoticEstimate,
    pub oscillations: Vec<Sample>,
    pub oscillation: AsymptoticEstimate,
    /// The oscillation over a shrinking neighbourhood is infinitesimal.
    pub s_continuous: bool,
}

/// Value of `f_N` at the grid point nearest each probe, and its oscillation
/// over the `⌈√N⌉`-step neighbourhood of that point.
pub fn standard_function<F>(
    family: F,
    probes: &[Vec<f64>],
    ladder: &Ladder,
    thresholds: Thresholds,
) -> Result<Vec<ProbeEstimate>>
where
    F: Fn(GridLevel) -> Result<GridFunction> + Sync,
{
    let per_level: Vec<Vec<(f64, f64)>> = ladder
        .levels()
        .par_iter()
        .map(|&level| {
            let f = family(level).map_err(|e| Error::AtLevel { n_cells: level.n_cells(), source: Box::new(e) })?;
            let m = (level.n().sqrt()).ceil() as i64;
            probes
                .iter()
                .map(|probe| {
                    if probe.len() != f.dim() {
                        return Err(Error::DimensionMismatch { expected: f.dim(), got: probe.len() });
                    }
                    let centre: Vec<i64> = probe.iter().map(|&x| level.nearest_index(x)).collect();
                    let value = f.at(&centre);
                    let bounds: Vec<(i64, i64)> = centre.iter().map(|&c| (c - m, c + m)).collect();
                    let mut osc = 0.0f64;
                    for_each_index(&bounds, |y| {
                        if let Some(id) = f.domain().id_of(y) {
                            osc = osc.max((f.values()[id] - value).abs());
                        }
                    });
                    Ok((value, osc))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    probes
        .iter()
        .enumerate()
        .map(|(j, probe)| {
            let values: Vec<Sample> =
                ladder.levels().iter().zip(&per_level).map(|(l, v)| Sample::new(l.n(), v[j].0)).collect();
            let oscillations: Vec<Sample> =
                ladder.levels().iter().zip(&per_level).map(|(l, v)| Sample::new(l.n(), v[j].1)).collect();
            let value = fit_power_law(&values, thresholds)?;
            let oscillation = fit_power_law(&oscillations, thresholds)?;
            let s_continuous = oscillation.classification == Classification::Infinitesimal;
            Ok(ProbeEstimate { probe: probe.clone(), values, value, oscillations, oscillation, s_continuous })
        })
        .collect()
}
