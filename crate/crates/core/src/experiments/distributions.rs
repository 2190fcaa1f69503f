use rayon::prelude::*;

use crate::asymptotics::{fit_power_law, Classification, Sample};
use crate::error::Result;
use crate::grid::{diff, inner_product, lp_norm, shift, BoxRegion, Direction, GridFunction, GridLevel};
use crate::pairing::{self, pair, project_distribution, TestBattery, TestFunction};
use crate::quadrature::GaussLegendre;

use super::{level_ns, on_window, pairs, ramp_width, romberg, Check, Config, Provenance, Report, Table};

const ULP8: f64 = 8.0 * f64::EPSILON;

/// `∫_a^b φ` by composite Gauss–Legendre over the part of the support inside.
fn bump_integral_over(phi: &TestFunction, a: f64, b: f64) -> f64 {
    let c = phi.center()[0];
    let r = phi.radius();
    let (lo, hi) = (a.max(c - r), b.min(c + r));
    if lo >= hi {
        return 0.0;
    }
    GaussLegendre::new(16).integrate_composite(lo, hi, 64, |x| phi.eval(&[x]))
}

pub(super) fn heaviside_product(cfg: &Config) -> Result<Report> {
    let ladder = cfg.ladder(720, 4, 4, 2.0)?;
    let (m, n) = (cfg.m, cfg.n);
    let ramp = cfg.ramp;
    let centred = TestBattery::centered(&[0.0], &[0.25, 0.5, 1.0])?;
    let battery = cfg.battery(&[-1.0], &[1.0])?;
    let h_at = |level: GridLevel| {
        let w = ramp_width(level.n_cells()) as f64;
        on_window(level, move |i| if i <= 0 { 0.0 } else { ramp.eval(i as f64 / w) })
    };

    struct Level {
        m_width: f64,
        product: f64,
        diagonal: f64,
        ratios: Vec<f64>,
    }
    let per_level: Vec<Level> = ladder
        .levels()
        .par_iter()
        .map(|&level| {
            let h = h_at(level)?;
            let dh = diff(&h, 0, Direction::Forward)?;
            let hm = h.map(|v| v.powi(m as i32));
            let hn = h.map(|v| v.powi(n as i32));
            let product = inner_product(&hm.zip_with(&hn, |a, b| a - b)?, &dh)?;
            let diagonal = inner_product(&hm.zip_with(&hm, |a, b| a - b)?, &dh)?;
            let hdh = h.zip_with(&dh, |a, b| a * b)?;
            let ratios = centred
                .functions()
                .iter()
                .map(|phi| Ok(pair(&hdh, phi)? / phi.eval(&[0.0])))
                .collect::<Result<Vec<f64>>>()?;
            Ok(Level { m_width: ramp_width(level.n_cells()) as f64, product, diagonal, ratios })
        })
        .collect::<Result<_>>()?;

    let ns = level_ns(&ladder);
    let mut report = Report::new("heaviside-product", ns.clone());
    report.note(format!(
        "ramp {ramp:?} of width M = {:?} steps",
        per_level.iter().map(|l| l.m_width).collect::<Vec<_>>()
    ));
    let by_m =
        |v: &dyn Fn(&Level) -> f64| -> Vec<Sample> { per_level.iter().map(|l| Sample::new(l.m_width, v(l))).collect() };
    let with_n = |s: &[Sample]| -> Vec<(u64, f64)> { ns.iter().zip(s).map(|(&n, s)| (n, s.value)).collect() };

    let expected = 1.0 / f64::from(m + 1) - 1.0 / f64::from(n + 1);
    let product = by_m(&|l| l.product);
    let limit = romberg(&product)?;
    let finest = product.last().expect("ladder is non-empty").value;
    report.table(Table::against(
        format!("h^{m}-h^{n}-pairing"),
        with_n(&product),
        Some(limit),
        expected,
        Provenance::Reference,
        1e-6,
    ));
    report.check(Check::close("⟨h^m − h^n, Δh⟩ at the finest level", expected, finest, 1e-3, Provenance::Reference));
    report.check(Check::close("⟨h^m − h^n, Δh⟩ extrapolated in 1/M", expected, limit, 1e-6, Provenance::Reference));
    let diag = per_level.last().expect("ladder is non-empty").diagonal;
    report.check(Check::close("⟨h^m − h^m, Δh⟩ is exactly 0", 0.0, diag, 0.0, Provenance::Direct));

    let m_finest = per_level.last().expect("ladder is non-empty").m_width;
    for (j, phi) in centred.functions().iter().enumerate() {
        let s = by_m(&|l| l.ratios[j]);
        let limit = romberg(&s)?;
        let finest = s.last().expect("ladder is non-empty").value;
        let r = phi.radius();
        report.table(Table::against(
            format!("h-dh-ratio-r{r}"),
            with_n(&s),
            Some(limit),
            0.5,
            Provenance::Reference,
            1e-4,
        ));
        report.check(Check::close(
            format!("⟨hΔh, φ⟩/φ(0) within 5/M, radius {r}"),
            0.5,
            finest,
            5.0 / m_finest,
            Provenance::Reference,
        ));
        report.check(Check::close(
            format!("⟨hΔh, φ⟩/φ(0) extrapolated, radius {r}"),
            0.5,
            limit,
            1e-4,
            Provenance::Reference,
        ));
    }

    let family = |level: GridLevel| Ok(h_at(level)?.map(|v| v.powi(m as i32)));
    let dist = project_distribution(family, &battery, &ladder, cfg.thresholds)?;
    let mut worst = 0.0f64;
    for (j, phi) in battery.functions().iter().enumerate() {
        let s: Vec<Sample> =
            dist.samples[j].iter().map(|x| Sample::new(ramp_width(x.scale as u64) as f64, x.value)).collect();
        let limit = romberg(&s)?;
        let expected = bump_integral_over(phi, 0.0, f64::INFINITY);
        worst = worst.max((limit - expected).abs());
        report.estimate(format!("⟨h^m, φ{j}⟩"), dist.actions[j].clone());
    }
    report.check(Check::close(
        "[h^m] acts as the Heaviside function (worst bump)",
        0.0,
        worst,
        1e-5,
        Provenance::Oracle,
    ));
    Ok(report)
}

pub(super) fn sign_derivative(cfg: &Config) -> Result<Report> {
    let ladder = cfg.ladder(720, 2, 4, 2.0)?;
    let sign = |level: GridLevel| on_window(level, |i| if i >= 0 { 1.0 } else { -1.0 });
    let exact: Vec<(f64, bool, bool, bool)> = ladder
        .levels()
        .par_iter()
        .map(|&level| {
            let f = sign(level)?;
            let df = diff(&f, 0, Direction::Forward)?;
            let df3 = diff(&f.map(|v| v * v * v), 0, Direction::Forward)?;
            let spike = df.at(&[-1]);
            let elsewhere_zero = df.domain().points().zip(df.values()).all(|(p, &v)| p[0] == -1 || v == 0.0);
            let cube_equal = df3.domain() == df.domain() && df3.values() == df.values();
            let formula = df.domain().points().zip(df.values()).all(|(p, &v)| {
                let rhs = v * (2.0 + f.at(p) * f.at(&[p[0] + 1]));
                rhs == df3.at(p)
            });
            Ok((spike - 2.0 * level.n(), elsewhere_zero, cube_equal, formula))
        })
        .collect::<Result<_>>()?;
    let mut report = Report::new("sign-derivative", level_ns(&ladder));
    let worst_spike = exact.iter().fold(0.0f64, |m, e| m.max(e.0.abs()));
    report.check(Check::close("Δf(−ε) = 2N at every level", 0.0, worst_spike, 0.0, Provenance::Reference));
    report.check(Check::holds("Δf = 0 away from −ε", exact.iter().all(|e| e.1), Provenance::Reference));
    report.check(Check::holds("Δf³ ≡ Δf", exact.iter().all(|e| e.2), Provenance::Reference));
    report.check(Check::holds("Δf³ = Δf·(2 + f(x)f(x+ε))", exact.iter().all(|e| e.3), Provenance::Reference));

    let battery = cfg.battery(&[-1.0], &[1.0])?.extend(TestBattery::centered(&[0.0], &[0.3, 0.6])?);
    let family = |level: GridLevel| diff(&sign(level)?, 0, Direction::Forward);
    let dist = project_distribution(family, &battery, &ladder, cfg.thresholds)?;
    let mut worst = 0.0f64;
    for (j, phi) in battery.functions().iter().enumerate() {
        let expected = 2.0 * phi.eval(&[0.0]);
        let limit = dist.actions[j].limit.unwrap_or(f64::NAN);
        worst = worst.max((limit - expected).abs());
        if j == battery.len() - 1 {
            report.table(Table::against(
                "dirac-action-r0.6",
                pairs(&dist.samples[j]),
                Some(limit),
                expected,
                Provenance::Reference,
                1e-5,
            ));
        }
        report.estimate(format!("⟨Δf, φ{j}⟩"), dist.actions[j].clone());
    }
    report.check(Check::close("[Δf] = 2δ₀ (worst bump)", 0.0, worst, 1e-5, Provenance::Reference));
    Ok(report)
}

pub(super) fn shift_coherence(cfg: &Config) -> Result<Report> {
    let ladder = cfg.ladder(720, 2, 4, 2.0)?;
    let battery = cfg.battery(&[-1.0], &[1.0])?.extend(TestBattery::centered(&[-0.25], &[0.2])?);
    let spike = |level: GridLevel| {
        let n = level.n();
        on_window(level, move |i| if i == 0 { n } else { 0.0 })
    };
    let per_level: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = ladder
        .levels()
        .par_iter()
        .map(|&level| {
            let f = spike(level)?;
            let quarter = shift(&f, (level.n_cells() / 4) as i64, 0)?;
            let one = shift(&f, 1, 0)?;
            let mut a = Vec::new();
            let mut b = Vec::new();
            let mut c = Vec::new();
            for phi in battery.functions() {
                a.push(pair(&f, phi)? - phi.eval(&[0.0]));
                b.push(pair(&quarter, phi)? - phi.eval(&[-0.25]));
                c.push(pair(&one, phi)?);
            }
            Ok((a, b, c))
        })
        .collect::<Result<_>>()?;
    let mut report = Report::new("shift-coherence", level_ns(&ladder));
    let worst = |sel: &dyn Fn(&(Vec<f64>, Vec<f64>, Vec<f64>)) -> &Vec<f64>| {
        per_level.iter().flat_map(|l| sel(l).iter()).fold(0.0f64, |m, v| m.max(v.abs()))
    };
    report.check(Check::at_most("⟨Nχ₀, φ⟩ − φ(0) (no shift)", ULP8, worst(&|l| &l.0), Provenance::Direct));
    report.check(Check::at_most(
        "⟨f(· + nε), φ⟩ − φ(−0.25) with nε = 0.25",
        ULP8,
        worst(&|l| &l.1),
        Provenance::Reference,
    ));
    let mut worst_limit = 0.0f64;
    let mut all_infinitesimal = true;
    for (j, phi) in battery.functions().iter().enumerate() {
        let s: Vec<Sample> = ladder.levels().iter().zip(&per_level).map(|(l, v)| Sample::new(l.n(), v.2[j])).collect();
        let gap: Vec<Sample> = s.iter().map(|x| Sample::new(x.scale, x.value - phi.eval(&[0.0]))).collect();
        let est = fit_power_law(&gap, cfg.thresholds)?;
        all_infinitesimal &= est.classification == Classification::Infinitesimal;
        worst_limit = worst_limit.max((romberg(&s)? - phi.eval(&[0.0])).abs());
        if j == 0 {
            report.table(Table::against(
                "one-step-shift-action",
                pairs(&s),
                Some(romberg(&s)?),
                phi.eval(&[0.0]),
                Provenance::Reference,
                1e-7,
            ));
        }
        report.estimate(format!("⟨f(· + ε), φ{j}⟩ − φ(0)"), est);
    }
    report.check(Check::holds(
        "⟨f(· + ε), φ⟩ − φ(0) is infinitesimal for every bump",
        all_infinitesimal,
        Provenance::Reference,
    ));
    report.check(Check::close(
        "⟨f(· + ε), φ⟩ extrapolates to φ(0) (worst bump)",
        0.0,
        worst_limit,
        1e-7,
        Provenance::Reference,
    ));
    Ok(report)
}

pub(super) fn norm_inequality(cfg: &Config) -> Result<Report> {
    let ladder = cfg.ladder(720, 2, 4, 2.0)?;
    let battery = cfg.battery(&[-1.0], &[1.0])?;
    let mut report = Report::new("norm-inequality", level_ns(&ladder));
    let bump = |x: f64| if x.abs() < 1.0 { (1.0 - x * x).powi(2) } else { 0.0 };

    let alternating = |level: GridLevel| {
        let n = level.n_cells() as i64;
        on_window(level, move |i| {
            if i > 0 && i < n {
                if i % 2 == 0 {
                    1.0
                } else {
                    -1.0
                }
            } else {
                0.0
            }
        })
    };
    let smooth = |level: GridLevel| on_window(level, |i| bump(level.coordinate(i)));
    let indicator_diff =
        |level: GridLevel| diff(&on_window(level, |i| if i == 0 { 1.0 } else { 0.0 })?, 0, Direction::Forward);
    let gl = GaussLegendre::new(16);

    for p in [1.0, 2.0] {
        // (−1)ⁿ on (0, 1): the norm tends to 1 while the projection vanishes.
        let norms = ladder.evaluate(|l| lp_norm(&alternating(l)?, p))?;
        let est = fit_power_law(&norms, cfg.thresholds)?;
        let limit = est.limit.unwrap_or(f64::NAN);
        report.table(Table::against(
            format!("alternating-l{p}-norm"),
            pairs(&norms),
            Some(limit),
            1.0,
            Provenance::Reference,
            1e-6,
        ));
        report.check(Check::close(format!("‖(−1)ⁿχ‖_{p} → 1"), 1.0, limit, 1e-6, Provenance::Reference));
        report.check(Check::at_least(format!("°‖(−1)ⁿχ‖_{p} ≥ ‖[(−1)ⁿχ]‖_{p} = 0"), 0.0, limit, Provenance::Reference));
        report.estimate(format!("‖(−1)ⁿχ‖_{p}"), est);

        // A sampled smooth function: equality.
        let norms = ladder.evaluate(|l| lp_norm(&smooth(l)?, p))?;
        let est = fit_power_law(&norms, cfg.thresholds)?;
        let limit = est.limit.unwrap_or(f64::NAN);
        let exact = gl.integrate_composite(-1.0, 1.0, 64, |x| bump(x).powf(p)).powf(1.0 / p);
        report.table(Table::against(
            format!("smooth-l{p}-norm"),
            pairs(&norms),
            Some(limit),
            exact,
            Provenance::Oracle,
            1e-6,
        ));
        report.check(Check::close(format!("°‖sample(g)‖_{p} = ‖g‖_{p}"), exact, limit, 1e-6, Provenance::Oracle));
        report.estimate(format!("‖sample(g)‖_{p}"), est);

        // Δχ₀ is ±N on two points: ‖·‖_p = 2^{1/p} N^{(p−1)/p}.
        let norms = ladder.evaluate(|l| lp_norm(&indicator_diff(l)?, p))?;
        let worst = norms
            .iter()
            .map(|s| {
                let exact = 2f64.powf(1.0 / p) * s.scale.powf((p - 1.0) / p);
                (s.value - exact).abs() / exact
            })
            .fold(0.0f64, f64::max);
        report.table(Table::from_values(format!("indicator-difference-l{p}-norm"), pairs(&norms)));
        report.check(Check::at_most(
            format!("‖Δχ₀‖_{p} = 2^(1/p) N^((p−1)/p) (relative)"),
            4.0 * ULP8,
            worst,
            Provenance::Oracle,
        ));
        let est = fit_power_law(&norms, cfg.thresholds)?;
        if p == 1.0 {
            report.check(Check::close(
                "‖Δχ₀‖₁ = 2",
                2.0,
                est.limit.unwrap_or(f64::NAN),
                4.0 * ULP8,
                Provenance::Reference,
            ));
        } else {
            report.check(Check::holds(
                "‖Δχ₀‖₂ is infinite",
                est.classification == Classification::Infinite,
                Provenance::Oracle,
            ));
        }
        report.estimate(format!("‖Δχ₀‖_{p}"), est);
    }

    let zero_projection = |name: &str, family: &(dyn Fn(GridLevel) -> Result<GridFunction> + Sync)| -> Result<Check> {
        let dist = project_distribution(family, &battery, &ladder, cfg.thresholds)?;
        let worst = dist.limits().iter().map(|l| l.map_or(f64::INFINITY, f64::abs)).fold(0.0f64, f64::max);
        Ok(Check::close(format!("[{name}] = 0 (worst bump)"), 0.0, worst, 1e-6, Provenance::Reference))
    };
    report.check(zero_projection("(−1)ⁿχ", &alternating)?);
    report.check(zero_projection("Δχ₀", &indicator_diff)?);
    Ok(report)
}

pub(super) fn l2_projection_defect(cfg: &Config) -> Result<Report> {
    let thresholds = cfg.thresholds;
    let window = cfg.window.unwrap_or(1.0);
    let unit = BoxRegion::open_interval(0.0, 1.0);
    let square = BoxRegion::open(vec![0.0, 0.0], vec![1.0, 1.0]);
    let smooth_ladder = cfg.ladder(720, 2, 3, window)?;
    let step_ladder = cfg.ladder(720, 8, 3, window)?;
    let square_ladder = cfg.ladder(24, 2, 3, window)?;
    let cases: Vec<(&str, &crate::asymptotics::Ladder, &BoxRegion, Vec<f64>, Box<dyn Fn(&[f64]) -> f64 + Sync>)> = vec![
        (
            "sin 2πx on (0, 1)",
            &smooth_ladder,
            &unit,
            vec![],
            Box::new(|x: &[f64]| (2.0 * std::f64::consts::PI * x[0]).sin()),
        ),
        (
            "step at 1/7 on (0, 1)",
            &step_ladder,
            &unit,
            vec![1.0 / 7.0],
            Box::new(|x: &[f64]| if x[0] < 1.0 / 7.0 { 0.0 } else { 1.0 }),
        ),
        (
            "sin πx cos πy + xy on (0, 1)²",
            &square_ladder,
            &square,
            vec![],
            Box::new(|x: &[f64]| {
                (std::f64::consts::PI * x[0]).sin() * (std::f64::consts::PI * x[1]).cos() + x[0] * x[1]
            }),
        ),
    ];
    let mut report = Report::new("l2-projection-defect", level_ns(&smooth_ladder));
    for (name, ladder, region, breaks, g) in cases {
        let d = pairing::l2_projection_defect(&g, region, ladder, &breaks, thresholds)?;
        report.table(Table::from_values(format!("defect {name}"), pairs(&d.samples)));
        report.check(Check::holds(
            format!("defect of {name} is infinitesimal"),
            d.estimate.classification == Classification::Infinitesimal,
            Provenance::Reference,
        ));
        report.estimate(format!("defect {name}"), d.estimate);
    }
    report.note("the step ladder refines by 8 so that 1/7 keeps the same offset inside its cell");
    Ok(report)
}
