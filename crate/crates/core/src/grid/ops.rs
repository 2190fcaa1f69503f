use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{GridDomain, GridFunction, MultiIndex, MAX_DIM};
use crate::error::{Error, Result};
use crate::numeric::{CompensatedSum, DotAccumulator, Residual};

/// Direction of a one-sided difference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    fn sign(self) -> i64 {
        match self {
            Direction::Forward => 1,
            Direction::Backward => -1,
        }
    }
}

fn unit_offset(axis: usize, step: i64) -> [i64; MAX_DIM] {
    let mut o = [0i64; MAX_DIM];
    o[axis] = step;
    o
}

fn check_axis(f: &GridFunction, axis: usize) -> Result<()> {
    if axis >= f.dim() {
        return Err(Error::InvalidArgument(format!("axis {axis} out of range for dimension {}", f.dim())));
    }
    Ok(())
}

/// `Δ⁺ᵢf(x) = (f(x+εeᵢ) − f(x))/ε` or `Δ⁻ᵢf(x) = (f(x) − f(x−εeᵢ))/ε`, on the
/// points where both reads fall inside the domain.
pub fn diff(f: &GridFunction, axis: usize, direction: Direction) -> Result<GridFunction> {
    check_axis(f, axis)?;
    let dim = f.dim();
    let s = direction.sign();
    let off = unit_offset(axis, s);
    let domain = Arc::new(f.domain().shifted_by(&off[..dim]));
    let n = f.level().n();
    Ok(GridFunction::from_index_fn(domain, |p| {
        let other = f.at_offset(p, &off[..dim]);
        let here = f.at(p);
        match direction {
            Direction::Forward => (other - here) * n,
            Direction::Backward => (here - other) * n,
        }
    }))
}

/// `Δ^α f`, the composition of one-sided differences along each axis.
pub fn alpha_diff(f: &GridFunction, alpha: &MultiIndex, direction: Direction) -> Result<GridFunction> {
    if alpha.dim() != f.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), got: alpha.dim() });
    }
    let mut out = f.clone();
    for (axis, &order) in alpha.components().iter().enumerate() {
        for _ in 0..order {
            out = diff(&out, axis, direction)?;
        }
    }
    Ok(out)
}

/// `εᵏ Σ_{x∈A} f(x)` over `region` (default: the domain of `f`).
pub fn grid_integral(f: &GridFunction, region: Option<&GridDomain>) -> f64 {
    let vol = f.level().n().powi(f.dim() as i32);
    let mut total = DotAccumulator::new();
    match region {
        None => f.values().iter().for_each(|&v| total.add(v)),
        Some(r) => r.points().for_each(|p| total.add(f.at(p))),
    }
    total.quotient(vol)
}

/// `⟨f, g⟩ = εᵏ Σ f(x) g(x)` with out-of-domain values read as 0.
pub fn inner_product(f: &GridFunction, g: &GridFunction) -> Result<f64> {
    f.domain().compatible(g.domain())?;
    let (a, b) = if f.domain().len() <= g.domain().len() { (f, g) } else { (g, f) };
    let vol = f.level().n().powi(f.dim() as i32);
    let mut total = DotAccumulator::new();
    for (p, &v) in a.domain().points().zip(a.values()) {
        total.add_product(v, b.at(p));
    }
    Ok(total.quotient(vol))
}

/// `‖f‖_p = (εᵏ Σ |f|^p)^{1/p}`, or `max |f|` for `p = ∞`.
pub fn lp_norm(f: &GridFunction, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidExponent(p));
    }
    if p.is_infinite() {
        return Ok(f.max_abs());
    }
    let vol = f.level().n().powi(f.dim() as i32);
    let mut total = DotAccumulator::new();
    f.values().iter().for_each(|v| total.add(v.abs().powf(p)));
    Ok(total.quotient(vol).powf(1.0 / p))
}

/// `x ↦ f(x + steps·εeᵢ)` on the domain of `f`.
pub fn shift(f: &GridFunction, steps: i64, axis: usize) -> Result<GridFunction> {
    check_axis(f, axis)?;
    let dim = f.dim();
    let off = unit_offset(axis, steps);
    Ok(GridFunction::from_index_fn(Arc::clone(f.domain()), |p| f.at_offset(p, &off[..dim])))
}

/// Right-hand side of the discrete product rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProductForm {
    /// The difference quotient of `f·g` itself.
    Quotient,
    /// `f(x±ε) Δg(x) + g(x) Δf(x)`.
    ShiftFirst,
    /// `f(x) Δg(x) + g(x±ε) Δf(x)`.
    ShiftSecond,
}

/// Pointwise residual of an exact identity with the magnitude of the terms
/// that produced it.
#[derive(Debug, Clone)]
pub struct PointwiseResidual {
    pub residual: GridFunction,
    pub scale: Vec<f64>,
}

impl PointwiseResidual {
    /// Largest residual measured in units of the pointwise scale's ulp.
    pub fn max_ulps(&self) -> f64 {
        self.residual
            .values()
            .iter()
            .zip(&self.scale)
            .map(|(r, s)| if *r == 0.0 { 0.0 } else { r.abs() / (f64::EPSILON * s.max(f64::MIN_POSITIVE)) })
            .fold(0.0, f64::max)
    }

    pub fn within_ulps(&self, ulps: f64) -> bool {
        self.max_ulps() <= ulps
    }
}

/// `Δ(f·g)` minus the chosen product-rule form, on the shared domain.
pub fn product_rule_residual(
    f: &GridFunction,
    g: &GridFunction,
    axis: usize,
    direction: Direction,
    form: ProductForm,
) -> Result<PointwiseResidual> {
    if !(Arc::ptr_eq(f.domain(), g.domain()) || **f.domain() == **g.domain()) {
        return Err(Error::DomainMismatch);
    }
    let fg = f.zip_with(g, |a, b| a * b)?;
    let lhs = diff(&fg, axis, direction)?;
    let df = diff(f, axis, direction)?;
    let dg = diff(g, axis, direction)?;
    let dim = f.dim();
    let off = unit_offset(axis, direction.sign());
    let n = f.level().n();
    let mut scale = Vec::with_capacity(lhs.domain().len());
    let mut values = Vec::with_capacity(lhs.domain().len());
    for (p, &l) in lhs.domain().points().zip(lhs.values()) {
        let (f0, g0) = (f.at(p), g.at(p));
        let (f1, g1) = (f.at_offset(p, &off[..dim]), g.at_offset(p, &off[..dim]));
        let (dfx, dgx) = (df.at(p), dg.at(p));
        let (a, b) = match form {
            ProductForm::Quotient => {
                let q = match direction {
                    Direction::Forward => (f1 * g1 - f0 * g0) * n,
                    Direction::Backward => (f0 * g0 - f1 * g1) * n,
                };
                (q, 0.0)
            }
            ProductForm::ShiftFirst => (f1 * dgx, g0 * dfx),
            ProductForm::ShiftSecond => (f0 * dgx, g1 * dfx),
        };
        values.push(l - (a + b));
        scale.push(n * ((f1 * g1).abs() + (f0 * g0).abs()) + a.abs() + b.abs());
    }
    Ok(PointwiseResidual { residual: GridFunction::new(Arc::clone(lhs.domain()), values)?, scale })
}

/// `⟨Δ⁺ᵢf, φ⟩ + ⟨f(·+εeᵢ), Δ⁺ᵢφ⟩`, zero whenever `φ` vanishes near the edge
/// of both domains.
pub fn summation_by_parts_residual(f: &GridFunction, phi: &GridFunction, axis: usize) -> Result<Residual> {
    f.domain().compatible(phi.domain())?;
    let df = diff(f, axis, Direction::Forward)?;
    let dphi = diff(phi, axis, Direction::Forward)?;
    let dim = f.dim();
    let off = unit_offset(axis, 1);
    let vol = f.level().n().powi(dim as i32);
    let mut total = CompensatedSum::new();
    let mut scale = CompensatedSum::new();
    for (p, &d) in df.domain().points().zip(df.values()) {
        let t = d * phi.at(p);
        total.add(t);
        scale.add(t.abs());
    }
    for (p, &d) in dphi.domain().points().zip(dphi.values()) {
        let t = f.at_offset(p, &off[..dim]) * d;
        total.add(t);
        scale.add(t.abs());
    }
    Ok(Residual { value: total.value() / vol, scale: scale.value() / vol })
}

/// `ε Σ_{x=a}^{b} Δf(x) − (f(b+ε) − f(a))` for a 1D function and lattice
/// indices `a ≤ b`.
pub fn ftc_residual(f: &GridFunction, a: i64, b: i64) -> Result<Residual> {
    if f.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: f.dim() });
    }
    if a > b {
        return Err(Error::InvalidArgument(format!("need a <= b, got {a} > {b}")));
    }
    let n = f.level().n();
    let mut total = CompensatedSum::new();
    let mut scale = CompensatedSum::new();
    for x in a..=b {
        let (f0, f1) = (f.at(&[x]), f.at(&[x + 1]));
        total.add((f1 - f0) * n / n);
        scale.add(f0.abs() + f1.abs());
    }
    let (fa, fb) = (f.at(&[a]), f.at(&[b + 1]));
    total.add(-(fb - fa));
    scale.add(fa.abs() + fb.abs());
    Ok(Residual { value: total.value(), scale: scale.value() })
}

/// The step extension `f̃(x) = f(⌊x/ε⌋ε)`; 0 outside the window or domain.
pub fn step_extension_eval(f: &GridFunction, x: &[f64]) -> Result<f64> {
    if x.len() != f.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), got: x.len() });
    }
    let level = f.level();
    let mut idx = [0i64; MAX_DIM];
    for (a, &xa) in x.iter().enumerate() {
        if !xa.is_finite() {
            return Ok(0.0);
        }
        idx[a] = level.floor_index(xa);
        if !level.in_window(idx[a]) {
            return Ok(0.0);
        }
    }
    Ok(f.at(&idx[..x.len()]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{BoxRegion, GridLevel};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn window(n: u64, l: f64, dim: usize) -> Arc<GridDomain> {
        Arc::new(GridDomain::window_box(GridLevel::new(n, l).unwrap(), dim).unwrap())
    }

    fn unit(n: u64) -> Arc<GridDomain> {
        let l = GridLevel::new(n, 2.0).unwrap();
        Arc::new(GridDomain::discretize(&BoxRegion::open_interval(0.0, 1.0), l).unwrap())
    }

    fn random(d: &Arc<GridDomain>, seed: u64) -> GridFunction {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = (0..d.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        GridFunction::new(Arc::clone(d), v).unwrap()
    }

    #[test]
    fn difference_of_square() {
        let d = window(720, 1.0, 1);
        let f = GridFunction::sample(Arc::clone(&d), |x| x[0] * x[0]).unwrap();
        let df = diff(&f, 0, Direction::Forward).unwrap();
        let eps = 1.0 / 720.0;
        for (p, &v) in df.domain().points().zip(df.values()) {
            let x = p[0] as f64 / 720.0;
            assert!((v - (2.0 * x + eps)).abs() <= 1e-12, "{v} at {x}");
        }
    }

    #[test]
    fn sign_jump_is_exactly_two_n() {
        let d = window(720, 1.0, 1);
        let f = GridFunction::from_index_fn(d, |p| if p[0] < 0 { -1.0 } else { 1.0 });
        let df = diff(&f, 0, Direction::Forward).unwrap();
        assert_eq!(df.at(&[-1]), 1440.0);
        assert!(df.domain().points().filter(|p| p[0] != -1).all(|p| df.at(p) == 0.0));
    }

    #[test]
    fn constant_has_zero_difference() {
        let f = GridFunction::constant(unit(16), 3.5);
        assert!(diff(&f, 0, Direction::Backward).unwrap().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn second_difference_of_quadratic() {
        let f = GridFunction::sample(window(8, 1.0, 1), |x| x[0] * x[0]).unwrap();
        let d2 = alpha_diff(&f, &MultiIndex::new(vec![2]), Direction::Forward).unwrap();
        assert!(d2.values().iter().all(|&v| (v - 2.0).abs() < 1e-12));
        let d0 = alpha_diff(&f, &MultiIndex::zero(1), Direction::Forward).unwrap();
        assert_eq!(d0.values(), f.values());
    }

    #[test]
    fn mixed_difference_of_xy() {
        let f = GridFunction::sample(window(8, 1.0, 2), |x| x[0] * x[1]).unwrap();
        let d = alpha_diff(&f, &MultiIndex::new(vec![1, 1]), Direction::Forward).unwrap();
        assert!(d.values().iter().all(|&v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn counting_integral() {
        let f = GridFunction::constant(unit(8), 1.0);
        assert_eq!(grid_integral(&f, None), 7.0 / 8.0);
    }

    #[test]
    fn scaled_indicator_is_a_delta() {
        let d = window(720, 1.0, 1);
        let spike = GridFunction::from_index_fn(Arc::clone(&d), |p| if p[0] == 0 { 720.0 } else { 0.0 });
        assert_eq!(lp_norm(&spike, 1.0).unwrap(), 1.0);
        let g = GridFunction::sample(d, |x| (x[0] + 0.3).cos()).unwrap();
        assert_eq!(inner_product(&spike, &g).unwrap(), g.at(&[0]));
    }

    #[test]
    fn norms_of_difference_spike() {
        let n = 720u64;
        let d = window(n, 1.0, 1);
        let chi = GridFunction::from_index_fn(d, |p| if p[0] == 0 { 1.0 } else { 0.0 });
        let dchi = diff(&chi, 0, Direction::Forward).unwrap();
        for p in [1.0, 2.0, 3.0] {
            let expected = 2f64.powf(1.0 / p) * (n as f64).powf((p - 1.0) / p);
            let got = lp_norm(&dchi, p).unwrap();
            assert!((got - expected).abs() <= 1e-12 * expected);
        }
        assert_eq!(lp_norm(&dchi, f64::INFINITY).unwrap(), n as f64);
        assert!(matches!(lp_norm(&dchi, 0.5), Err(Error::InvalidExponent(_))));
    }

    #[test]
    fn shift_pairs_with_translated_test_function() {
        let d = window(64, 1.0, 1);
        let spike = GridFunction::from_index_fn(Arc::clone(&d), |p| if p[0] == 0 { 64.0 } else { 0.0 });
        let phi = GridFunction::sample(d, |x| (2.0 * x[0]).sin() + 1.0).unwrap();
        for s in [-3i64, 0, 5] {
            let shifted = shift(&spike, s, 0).unwrap();
            assert_eq!(inner_product(&shifted, &phi).unwrap(), phi.at(&[-s]));
        }
        assert_eq!(shift(&phi, 0, 0).unwrap().values(), phi.values());
    }

    #[test]
    fn product_rule_forms_vanish() {
        let d = unit(16);
        for seed in 0..20 {
            let f = random(&d, seed);
            let g = random(&d, seed + 100);
            for dir in [Direction::Forward, Direction::Backward] {
                for form in [ProductForm::Quotient, ProductForm::ShiftFirst, ProductForm::ShiftSecond] {
                    let r = product_rule_residual(&f, &g, 0, dir, form).unwrap();
                    assert!(r.within_ulps(8.0), "{form:?} {dir:?}: {}", r.max_ulps());
                }
            }
        }
    }

    #[test]
    fn summation_by_parts_vanishes() {
        let d = window(64, 1.0, 1);
        let f = random(&d, 7);
        let phi = GridFunction::sample(Arc::clone(&d), |x| {
            let t = x[0] / 0.5;
            if t.abs() < 1.0 {
                (-1.0 / (1.0 - t * t)).exp()
            } else {
                0.0
            }
        })
        .unwrap();
        let r = summation_by_parts_residual(&f, &phi, 0).unwrap();
        assert!(r.within_ulps(8.0), "{:?}", r);
    }

    #[test]
    fn fundamental_theorem() {
        let d = window(64, 1.0, 1);
        let f = random(&d, 3);
        let r = ftc_residual(&f, -20, 30).unwrap();
        assert!(r.within_ulps(8.0), "{:?}", r);
    }

    #[test]
    fn step_extension_reads_lower_corner() {
        let l = GridLevel::new(8, 2.0).unwrap();
        let d = Arc::new(GridDomain::discretize(&BoxRegion::open_interval(0.0, 1.0), l).unwrap());
        let f = GridFunction::sample(d, |x| x[0] * x[0]).unwrap();
        assert_eq!(step_extension_eval(&f, &[0.3]).unwrap(), 1.0 / 16.0);
        assert_eq!(step_extension_eval(&f, &[0.5]).unwrap(), 0.25);
        assert_eq!(step_extension_eval(&f, &[1.5]).unwrap(), 0.0);
    }
}
