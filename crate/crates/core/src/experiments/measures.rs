use std::sync::Arc;

use rayon::prelude::*;

use crate::asymptotics::{fit_power_law, Classification, Sample};
use crate::error::Result;
use crate::grid::{lp_norm, GridDomain, GridFunction, GridLevel};
use crate::measures::{
    default_window_steps, extract_measure, pair_measure, MeasureField, MeasureOptions, ProbeGrid, ATOM_THRESHOLD,
};
use crate::numeric::CompensatedSum;
use crate::pairing::{pair, project_distribution, TestBattery};

use super::{level_ns, on_window, pairs, Check, Config, Provenance, Report, Table};

fn window_steps(cfg: &Config, level: GridLevel) -> u64 {
    cfg.window_steps.unwrap_or_else(|| default_window_steps(level.n_cells()))
}

fn measure_options(cfg: &Config, level: GridLevel) -> MeasureOptions {
    MeasureOptions {
        window_width: Some(window_steps(cfg, level) as f64 * level.step()),
        bins: cfg.bins,
        cutoff: cfg.cutoff,
        ..MeasureOptions::default()
    }
}

/// Worst deviation of every probe's atoms from `expected`: location error,
/// mass error, and whether the atom count matched everywhere.
fn atom_deviation(field: &MeasureField, expected: &[(f64, f64)]) -> (f64, f64, bool) {
    let mut loc = 0.0f64;
    let mut mass = 0.0f64;
    let mut count_ok = true;
    for m in &field.measures {
        let atoms = m.atoms(field.bins, ATOM_THRESHOLD);
        if atoms.len() != expected.len() {
            count_ok = false;
            continue;
        }
        for (a, &(l, w)) in atoms.iter().zip(expected) {
            loc = loc.max((a.location - l).abs());
            mass = mass.max((a.mass - w).abs());
        }
    }
    (loc, mass, count_ok)
}

fn alternating(level: GridLevel) -> Result<GridFunction> {
    on_window(level, |i| if i.rem_euclid(2) == 0 { 1.0 } else { -1.0 })
}

pub(super) fn rademacher(cfg: &Config) -> Result<Report> {
    let ladder = cfg.ladder(720, 2, 4, 2.0)?;
    let battery = cfg.battery(&[-1.0], &[1.0])?;
    let half = [(-1.0, 0.5), (1.0, 0.5)];

    struct Level {
        m: u64,
        atoms: (f64, f64, bool),
        square: Vec<f64>,
        square_measure: Vec<f64>,
        identity_measure: Vec<f64>,
    }
    let per_level: Vec<Level> = ladder
        .levels()
        .par_iter()
        .map(|&level| {
            let f = alternating(level)?;
            let opts = measure_options(cfg, level);
            let field = extract_measure(&f, &ProbeGrid::regular(&[-1.0], &[1.0], ProbeGrid::DEFAULT_PER_AXIS), opts)?;
            let tiles = extract_measure(&f, &ProbeGrid::tiling(f.domain(), window_steps(cfg, level)), opts)?;
            let cutoff = tiles.cutoff;
            let f2 = f.map(|v| v * v);
            let mut square = Vec::new();
            let mut square_measure = Vec::new();
            let mut identity_measure = Vec::new();
            for phi in battery.functions() {
                let integral = phi.integral();
                square.push(pair(&f2, phi)? - integral);
                square_measure.push(pair_measure(&tiles, |t| t * t, phi) - integral);
                identity_measure.push(pair_measure(&tiles, |t| if t.abs() <= cutoff { t } else { 0.0 }, phi));
            }
            Ok(Level {
                m: window_steps(cfg, level),
                atoms: atom_deviation(&field, &half),
                square,
                square_measure,
                identity_measure,
            })
        })
        .collect::<Result<_>>()?;

    let mut report = Report::new("rademacher", level_ns(&ladder));
    let mass_table: Vec<(u64, f64)> =
        ladder.levels().iter().zip(&per_level).map(|(l, v)| (l.n_cells(), v.atoms.1)).collect();
    report.table(Table::from_values("atom-mass-error", mass_table));
    report.check(Check::holds(
        "two atoms at every probe and level",
        per_level.iter().all(|l| l.atoms.2),
        Provenance::Reference,
    ));
    let loc = per_level.iter().fold(0.0f64, |m, l| m.max(l.atoms.0));
    report.check(Check::close("atom locations ±1", 0.0, loc, 0.0, Provenance::Reference));
    let worst_mass = per_level.iter().fold(0.0f64, |m, l| m.max(l.atoms.1 - 2.0 / l.m as f64));
    report.check(Check::at_most("atom mass error minus 2/window-count", 0.0, worst_mass, Provenance::Reference));

    let worst = |sel: &dyn Fn(&Level) -> &Vec<f64>| {
        per_level.last().map_or(f64::INFINITY, |l| sel(l).iter().fold(0.0f64, |m, v| m.max(v.abs())))
    };
    report.check(Check::close(
        "⟨Ψ(f), φ⟩ = ∫φ for Ψ(τ) = τ² (worst bump)",
        0.0,
        worst(&|l| &l.square),
        1e-6,
        Provenance::Reference,
    ));
    report.check(Check::close(
        "∫∫τ² dν_x φ dx = ∫φ (worst bump)",
        0.0,
        worst(&|l| &l.square_measure),
        1e-6,
        Provenance::Reference,
    ));
    report.check(Check::close(
        "∫∫τ dν_x φ dx = 0, barycentre 0 (worst bump)",
        0.0,
        worst(&|l| &l.identity_measure),
        1e-12,
        Provenance::Reference,
    ));

    let dist = project_distribution(alternating, &battery, &ladder, cfg.thresholds)?;
    let worst_action = dist.limits().iter().map(|l| l.map_or(f64::INFINITY, f64::abs)).fold(0.0f64, f64::max);
    report.table(Table::against(
        "alternating-action",
        pairs(&dist.samples[0]),
        dist.actions[0].limit,
        0.0,
        Provenance::Reference,
        1e-6,
    ));
    report.check(Check::close("[(−1)ⁿ] = 0 (worst bump)", 0.0, worst_action, 1e-6, Provenance::Reference));
    for (j, a) in dist.actions.iter().enumerate() {
        report.estimate(format!("⟨(−1)ⁿ, φ{j}⟩"), a.clone());
    }
    Ok(report)
}

pub(super) fn concentration(cfg: &Config) -> Result<Report> {
    let ladder = cfg.ladder(720, 2, 4, 2.0)?;
    let battery = cfg.battery(&[-1.5], &[1.5])?.extend(TestBattery::centered(&[1.0], &[0.2, 0.4])?);
    let spike = |level: GridLevel| {
        let n = level.n_cells() as i64;
        let v = level.n();
        on_window(level, move |i| if i == n { v } else { 0.0 })
    };
    let mut probes = ProbeGrid::regular(&[-1.5], &[1.5], ProbeGrid::DEFAULT_PER_AXIS);
    probes.points.push(vec![1.0]);

    let per_level: Vec<(f64, f64, f64, bool)> = ladder
        .levels()
        .par_iter()
        .map(|&level| {
            let f = spike(level)?;
            let norm = lp_norm(&f, 1.0)?;
            let field = extract_measure(&f, &probes, measure_options(cfg, level))?;
            let mut min_mass = f64::INFINITY;
            let mut at_zero = true;
            let mut escaped = 0.0f64;
            for m in &field.measures {
                let atoms = m.atoms(field.bins, ATOM_THRESHOLD);
                at_zero &= atoms.len() == 1 && atoms[0].location == 0.0;
                min_mass = min_mass.min(atoms.iter().map(|a| a.mass).fold(0.0, f64::max));
                escaped = escaped.max(m.escaped_mass());
            }
            Ok((norm, min_mass, escaped, at_zero))
        })
        .collect::<Result<_>>()?;

    let mut report = Report::new("concentration", level_ns(&ladder));
    let worst_norm = per_level.iter().fold(0.0f64, |m, l| m.max((l.0 - 1.0).abs()));
    report.check(Check::close(
        "‖Nχ₁‖₁ = 1 at every level",
        1.0,
        1.0 + worst_norm,
        8.0 * f64::EPSILON,
        Provenance::Reference,
    ));
    report.check(Check::holds("single atom at 0 at every probe", per_level.iter().all(|l| l.3), Provenance::Reference));
    let shortfall = ladder
        .levels()
        .iter()
        .zip(&per_level)
        .map(|(lv, l)| (1.0 - 2.0 / lv.n().sqrt()) - l.1)
        .fold(f64::NEG_INFINITY, f64::max);
    report.check(Check::at_most("atom mass at 0 falls short of 1 − 2/√N by", 0.0, shortfall, Provenance::Reference));
    let escaped: Vec<Sample> = ladder.levels().iter().zip(&per_level).map(|(lv, l)| Sample::new(lv.n(), l.2)).collect();
    let est = fit_power_law(&escaped, cfg.thresholds)?;
    report.table(Table::from_values("largest-escaped-mass", pairs(&escaped)));
    report.check(Check::holds(
        "escaped mass is infinitesimal",
        est.classification == Classification::Infinitesimal,
        Provenance::Reference,
    ));
    report.estimate("largest escaped mass", est);

    let dist = project_distribution(spike, &battery, &ladder, cfg.thresholds)?;
    let mut worst = 0.0f64;
    for (j, phi) in battery.functions().iter().enumerate() {
        let expected = phi.eval(&[1.0]);
        worst = worst.max((dist.actions[j].limit.unwrap_or(f64::NAN) - expected).abs());
        if j == battery.len() - 1 {
            report.table(Table::against(
                "point-mass-action",
                pairs(&dist.samples[j]),
                dist.actions[j].limit,
                expected,
                Provenance::Reference,
                1e-5,
            ));
        }
        report.estimate(format!("⟨Nχ₁, φ{j}⟩"), dist.actions[j].clone());
    }
    report.check(Check::close("[Nχ₁] = δ₁ (worst bump)", 0.0, worst, 1e-5, Provenance::Reference));
    Ok(report)
}

/// `J(u) = ε Σₙ [(ε Σ_{i≤n} u(iε))² + (u(nε)² − 1)²]` over `n = 0, …, N − 1`.
pub fn double_well_energy(values: &[f64], n_cells: u64) -> f64 {
    let eps = 1.0 / n_cells as f64;
    let mut partial = CompensatedSum::new();
    let mut total = CompensatedSum::new();
    for &u in values {
        partial.add(u);
        let s = eps * partial.value();
        total.add(s * s + (u * u - 1.0).powi(2));
    }
    total.value() * eps
}

/// Square wave `f₀(Mx)` at `x = nε`, with `f₀ = 1` on `[0, ½)` and `−1` on `[½, 1)`.
fn square_wave(m: u64, n_cells: u64, i: i64) -> f64 {
    let phase = (2 * m as i128 * i as i128).rem_euclid(2 * n_cells as i128);
    if phase < n_cells as i128 {
        1.0
    } else {
        -1.0
    }
}

pub(super) fn variational(cfg: &Config) -> Result<Report> {
    let ladder = cfg.ladder(720, 2, 4, 1.0)?;
    const DIVISORS: [u64; 10] = [1, 2, 3, 4, 5, 6, 8, 10, 12, 16];

    struct Level {
        family: Vec<(u64, f64)>,
        argmin: u64,
        minimum: f64,
        zero: f64,
        atoms: (f64, f64, bool),
        m: u64,
    }
    let per_level: Vec<Level> = ladder
        .levels()
        .par_iter()
        .map(|&level| {
            let n = level.n_cells();
            let domain = Arc::new(GridDomain::lattice_box(level, &[0], &[n as i64 - 1])?);
            let family: Vec<(u64, f64)> = DIVISORS
                .iter()
                .filter(|&&k| (n / 2) % k == 0)
                .map(|&k| {
                    let m = n / (2 * k);
                    let values: Vec<f64> = (0..n as i64).map(|i| square_wave(m, n, i)).collect();
                    (m, double_well_energy(&values, n))
                })
                .collect();
            let (argmin, minimum) =
                family.iter().copied().min_by(|a, b| a.1.total_cmp(&b.1)).expect("family is non-empty");
            let zero = double_well_energy(&vec![0.0; n as usize], n);
            let best = GridFunction::from_index_fn(domain, |i| square_wave(argmin, n, i[0]));
            let field = extract_measure(
                &best,
                &ProbeGrid::regular(&[0.1], &[0.9], ProbeGrid::DEFAULT_PER_AXIS),
                measure_options(cfg, level),
            )?;
            let atoms = atom_deviation(&field, &[(-1.0, 0.5), (1.0, 0.5)]);
            Ok(Level { family, argmin, minimum, zero, atoms, m: window_steps(cfg, level) })
        })
        .collect::<Result<_>>()?;

    let ns = level_ns(&ladder);
    let mut report = Report::new("variational", ns.clone());
    for (n, l) in ns.iter().zip(&per_level) {
        report.table(Table::from_values(format!("energy-by-M N={n}"), l.family.clone()));
    }
    report.check(Check::holds(
        "argmin over square waves is M = N/2 at every level",
        ns.iter().zip(&per_level).all(|(&n, l)| l.argmin == n / 2),
        Provenance::Reference,
    ));
    let energies: Vec<Sample> = ns.iter().zip(&per_level).map(|(&n, l)| Sample::new(n as f64, l.minimum)).collect();
    let worst_oracle = energies.iter().map(|s| (s.value * 2.0 * s.scale * s.scale - 1.0).abs()).fold(0.0f64, f64::max);
    report.table(Table::from_values("minimum-energy", pairs(&energies)));
    report.check(Check::at_most(
        "J(f_{N/2}) = 1/(2N²) (relative)",
        64.0 * f64::EPSILON,
        worst_oracle,
        Provenance::Oracle,
    ));
    let est = fit_power_law(&energies, cfg.thresholds)?;
    report.check(Check::holds(
        "J(f_{N/2}) is infinitesimal",
        est.classification == Classification::Infinitesimal,
        Provenance::Reference,
    ));
    report.check(Check::close("fitted order of J(f_{N/2})", -2.0, est.exponent, 0.05, Provenance::Oracle));
    report.estimate("J(f_{N/2})", est);
    let zero = per_level.iter().fold(0.0f64, |m, l| m.max((l.zero - 1.0).abs()));
    report.check(Check::close("J(0) = 1", 1.0, 1.0 + zero, 8.0 * f64::EPSILON, Provenance::Direct));
    report.check(Check::holds(
        "minimizer has two atoms at every probe",
        per_level.iter().all(|l| l.atoms.2),
        Provenance::Reference,
    ));
    let loc = per_level.iter().fold(0.0f64, |m, l| m.max(l.atoms.0));
    report.check(Check::close("minimizer atom locations ±1", 0.0, loc, 0.0, Provenance::Reference));
    let excess = per_level.iter().fold(f64::NEG_INFINITY, |m, l| m.max(l.atoms.1 - 2.0 / l.m as f64));
    report.check(Check::at_most("minimizer atom mass error minus 2/window-count", 0.0, excess, Provenance::Reference));
    Ok(report)
}
