//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on failure.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use gridfn::asymptotics::{Classification, Ladder, Thresholds};
use gridfn::experiments::{self, Config, Report};
use gridfn::grid::{
    diff, ftc_residual, inner_product, lp_norm, product_rule_residual, summation_by_parts_residual, Direction,
    GridDomain, GridFunction, GridLevel, ProductForm,
};
use gridfn::measures::{barycentre_check, MeasureOptions};
use gridfn::pairing::{equivalent, pair, TestBattery, Verdict, DEFAULT_EQUIVALENCE_TOL};
use gridfn::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Family<'a> = &'a (dyn Fn(GridLevel) -> Result<GridFunction> + Sync);
type Criterion = Box<dyn Fn() -> Result<Outcome>>;

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self { passed, detail: detail.into() }
    }
}

fn run(name: &str) -> Result<Report> {
    experiments::run(name, &Config::default())
}

/// Every check of the report whose name contains one of `needles` (all
/// checks when `needles` is empty) must pass, and at least one must match.
fn checks(report: &Report, needles: &[&str]) -> Outcome {
    let selected: Vec<_> =
        report.checks.iter().filter(|c| needles.is_empty() || needles.iter().any(|n| c.name.contains(n))).collect();
    let failed: Vec<_> = selected.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    if selected.is_empty() {
        return Outcome::new(false, format!("{}: no matching checks", report.name));
    }
    if failed.is_empty() {
        Outcome::new(true, format!("{}: {} checks", report.name, selected.len()))
    } else {
        Outcome::new(false, format!("{}: failed {}", report.name, failed.join("; ")))
    }
}

fn observed(report: &Report, needle: &str) -> f64 {
    report.checks.iter().find(|c| c.name.contains(needle)).map_or(f64::NAN, |c| c.observed)
}

fn all(outcomes: Vec<Outcome>) -> Outcome {
    let passed = outcomes.iter().all(|o| o.passed);
    Outcome::new(passed, outcomes.into_iter().map(|o| o.detail).collect::<Vec<_>>().join(" | "))
}

fn on_window(level: GridLevel, f: impl Fn(i64, f64) -> f64 + Sync) -> Result<GridFunction> {
    let domain = Arc::new(GridDomain::window_box(level, 1)?);
    let step = level.step();
    Ok(GridFunction::from_index_fn(domain, move |p| f(p[0], p[0] as f64 * step)))
}

fn random(level: GridLevel, rng: &mut ChaCha8Rng, amplitude: f64) -> Result<GridFunction> {
    let domain = Arc::new(GridDomain::window_box(level, 1)?);
    let values = (0..domain.len()).map(|_| rng.gen_range(-amplitude..amplitude)).collect();
    GridFunction::new(domain, values)
}

fn heaviside_product() -> Result<Outcome> {
    let r = run("heaviside-product")?;
    let mut o = checks(&r, &["⟨h^m − h^n, Δh⟩"]);
    let fast = r.runtime_seconds < 1.0;
    o.detail = format!(
        "{}; finest {:.9}, extrapolated {:.12}, {:.3} s",
        o.detail,
        observed(&r, "at the finest level"),
        observed(&r, "extrapolated in 1/M"),
        r.runtime_seconds
    );
    o.passed &= fast;
    Ok(o)
}

fn half_derivative() -> Result<Outcome> {
    let r = run("heaviside-product")?;
    Ok(checks(&r, &["⟨hΔh, φ⟩/φ(0) extrapolated"]))
}

fn exact_identities() -> Result<Outcome> {
    let ladder = Ladder::geometric(720, 2, 4, 1.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let battery = TestBattery::for_box(&[-1.0], &[1.0], 8, 4)?;
    let mut worst = 0.0f64;
    let mut spike_ok = true;
    for &level in ladder.levels() {
        let f = random(level, &mut rng, 5.0)?;
        let g = random(level, &mut rng, 5.0)?;
        for direction in [Direction::Forward, Direction::Backward] {
            for form in [ProductForm::ShiftFirst, ProductForm::ShiftSecond] {
                worst = worst.max(product_rule_residual(&f, &g, 0, direction, form)?.max_ulps());
            }
        }
        for phi in battery.functions() {
            let phi_l = phi.sample(Arc::clone(f.domain()))?;
            worst = worst.max(summation_by_parts_residual(&f, &phi_l, 0)?.in_ulps());
        }
        let w = level.window_cells();
        worst = worst.max(ftc_residual(&f, -w, w - 1)?.in_ulps());
        worst = worst.max(ftc_residual(&f, -w / 3, w / 2)?.in_ulps());

        let x2 = on_window(level, |_, x| x * x)?;
        let dx2 = diff(&x2, 0, Direction::Forward)?;
        let (n, eps) = (level.n(), level.step());
        for (p, &d) in dx2.domain().points().zip(dx2.values()) {
            let x = p[0] as f64 * eps;
            let exact = 2.0 * x + eps;
            let scale = n * (x * x + (x + eps) * (x + eps)) + exact.abs();
            worst = worst.max((d - exact).abs() / (f64::EPSILON * scale));
        }

        let spike = on_window(level, |i, _| if i == 0 { n } else { 0.0 })?;
        for phi in battery.functions() {
            let value = phi.eval(&[0.0]);
            spike_ok &= (pair(&spike, phi)? - value).abs() <= 8.0 * f64::EPSILON * value.abs();
        }
        spike_ok &= (lp_norm(&spike, 1.0)? - 1.0).abs() <= 8.0 * f64::EPSILON;
    }
    Ok(Outcome::new(
        worst <= 8.0 && spike_ok,
        format!("worst residual {worst:.2} ulp over 4 levels; ⟨Nχ₀, φ⟩ = φ(0) and ‖Nχ₀‖₁ = 1: {spike_ok}"),
    ))
}

fn holder() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(200);
    let mut violations = 0;
    for _ in 0..200 {
        let level = GridLevel::new(rng.gen_range(8..256), 1.0)?;
        let (a, b) = (rng.gen_range(0.01..100.0), rng.gen_range(0.01..100.0));
        let f = random(level, &mut rng, a)?;
        let g = random(level, &mut rng, b)?;
        let lhs = inner_product(&f, &g)?.abs();
        for (p, q) in [(1.0, f64::INFINITY), (2.0, 2.0), (4.0, 4.0 / 3.0), (f64::INFINITY, 1.0)] {
            if lhs > lp_norm(&f, p)? * lp_norm(&g, q)? * (1.0 + 1e-12) {
                violations += 1;
            }
        }
    }
    Ok(Outcome::new(violations == 0, format!("Hölder: {violations} violations in 200 pairs × 4 exponents")))
}

fn equivalence_laws() -> Result<Outcome> {
    let ladder = Ladder::geometric(720, 2, 3, 2.0)?;
    let battery = TestBattery::for_box(&[-2.0], &[2.0], 8, 11)?;
    let shape = |x: f64| (PI * x).sin() * (-x * x).exp();
    let f = |level| on_window(level, move |_, x| shape(x));
    let g = |level: GridLevel| {
        let eps = level.step();
        on_window(level, move |i, x| shape(x) + eps * if i % 3 == 0 { 1.0 } else { -0.5 })
    };
    let h = |level| on_window(level, move |i, x| shape(x) + if i.rem_euclid(2) == 0 { 1.0 } else { -1.0 });
    let spiked = |level: GridLevel| {
        let n = level.n();
        on_window(level, move |i, x| shape(x) + if i == 0 { n } else { 0.0 })
    };
    let eq = |a: Family, b: Family, tol: f64| equivalent(a, b, &battery, &ladder, tol, Thresholds::default());
    let tol = DEFAULT_EQUIVALENCE_TOL;
    let reflexive = eq(&f, &f, tol)?.holds() && eq(&h, &h, tol)?.holds() && eq(&spiked, &spiked, tol)?.holds();
    let symmetric = eq(&f, &g, tol)?.verdict == eq(&g, &f, tol)?.verdict
        && eq(&f, &spiked, tol)?.verdict == eq(&spiked, &f, tol)?.verdict;
    let transitive = !(eq(&f, &g, tol)?.holds() && eq(&g, &h, tol)?.holds()) || eq(&f, &h, 2.0 * tol)?.holds();
    let refutes = eq(&f, &spiked, tol)?.verdict == Verdict::Refuted;
    Ok(Outcome::new(
        reflexive && symmetric && transitive && refutes,
        format!("≡ reflexive {reflexive}, symmetric {symmetric}, transitive {transitive}, refutes f + Nχ₀ {refutes}"),
    ))
}

fn barycentres() -> Result<Outcome> {
    let ladder = Ladder::geometric(720, 2, 3, 2.0)?;
    let battery = TestBattery::for_box(&[-1.5], &[1.5], 6, 3)?;
    let alternating = |level| on_window(level, |i, _| if i.rem_euclid(2) == 0 { 1.0 } else { -1.0 });
    let constant = |level| on_window(level, |_, _| 0.75);
    let sign = |level| on_window(level, |_, x| if x < 0.0 { -1.0 } else { 1.0 });
    let mut bad = Vec::new();
    for (name, family) in [("(−1)ⁿ", &alternating as Family), ("constant", &constant), ("sign", &sign)] {
        let residuals = barycentre_check(family, &battery, &ladder, MeasureOptions::default(), Thresholds::default())?;
        if residuals.iter().any(|r| r.estimate.classification != Classification::Infinitesimal) {
            bad.push(name);
        }
    }
    let detail = if bad.is_empty() {
        "barycentre residuals infinitesimal for (−1)ⁿ, constant, sign".to_string()
    } else {
        format!("barycentre residuals not infinitesimal for {}", bad.join(", "))
    };
    Ok(Outcome::new(bad.is_empty(), detail))
}

fn main() -> ExitCode {
    let start = Instant::now();
    let criteria: Vec<(&str, Criterion)> = vec![
        ("Heaviside product pairing → −1/6", Box::new(heaviside_product)),
        ("⟨hΔh, φ⟩/φ(0) → 1/2", Box::new(half_derivative)),
        ("sign function derivative", Box::new(|| Ok(checks(&run("sign-derivative")?, &[])))),
        ("exact identities within 8 ulp", Box::new(exact_identities)),
        ("Rademacher measure and projection", Box::new(|| Ok(checks(&run("rademacher")?, &[])))),
        ("concentration Nχ₁", Box::new(|| Ok(checks(&run("concentration")?, &[])))),
        (
            "Poisson 1D and 2D convergence",
            Box::new(|| Ok(all(vec![checks(&run("poisson-1d")?, &[]), checks(&run("poisson-2d")?, &[])]))),
        ),
        ("Green convolution against direct solve", Box::new(|| Ok(checks(&run("green-convolution")?, &[])))),
        ("heat equation against the analytic solution", Box::new(|| Ok(checks(&run("heat-1d")?, &[])))),
        ("variational minimizer", Box::new(|| Ok(checks(&run("variational")?, &[])))),
        (
            "property suites",
            Box::new(|| {
                Ok(all(vec![
                    holder()?,
                    equivalence_laws()?,
                    barycentres()?,
                    checks(&run("l2-projection-defect")?, &[]),
                ]))
            }),
        ),
    ];
    let mut failures = 0;
    for (i, (name, criterion)) in criteria.iter().enumerate() {
        let outcome = criterion().unwrap_or_else(|e| Outcome::new(false, format!("error: {e}")));
        if !outcome.passed {
            failures += 1;
        }
        println!("{} {:>2}. {name}: {}", if outcome.passed { "PASS" } else { "FAIL" }, i + 1, outcome.detail);
    }
    println!(
        "{} of {} criteria passed in {:.1} s",
        criteria.len() - failures,
        criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
