use std::sync::{Arc, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{GridDomain, GridFunction, GridLevel, MultiIndex, MAX_DIM};
use crate::quadrature::GaussLegendre;

/// Highest derivative order supported per axis.
pub const MAX_DERIVATIVE_ORDER: u32 = 8;

/// Polynomials `Pₙ` with `ψ⁽ⁿ⁾(t) = Pₙ(t) (1−t²)^{−2n} ψ(t)` for the bump
/// `ψ(t) = exp(−1/(1−t²))`.
fn bump_polynomials() -> &'static [Vec<f64>] {
    static POLYS: OnceLock<Vec<Vec<f64>>> = OnceLock::new();
    POLYS.get_or_init(|| {
        let mut out = vec![vec![1.0]];
        for n in 0..MAX_DERIVATIVE_ORDER as usize {
            let p = &out[n];
            let mut next = vec![0.0; p.len() + 3];
            // P' (1 − t²)²
            for (i, &c) in p.iter().enumerate().skip(1) {
                let d = c * i as f64;
                next[i - 1] += d;
                next[i + 1] -= 2.0 * d;
                next[i + 3] += d;
            }
            // 4n t P (1 − t²) − 2t P
            for (i, &c) in p.iter().enumerate() {
                next[i + 1] += (4.0 * n as f64 - 2.0) * c;
                next[i + 3] -= 4.0 * n as f64 * c;
            }
            while next.len() > 1 && next[next.len() - 1] == 0.0 {
                next.pop();
            }
            out.push(next);
        }
        out
    })
}

/// `ψ⁽ⁿ⁾(t)` for the standard bump on `(−1, 1)`.
pub fn bump_derivative(n: u32, t: f64) -> f64 {
    if t.abs() >= 1.0 {
        return 0.0;
    }
    let s = 1.0 - t * t;
    let p = &bump_polynomials()[n as usize];
    let poly = p.iter().rev().fold(0.0, |acc, &c| acc * t + c);
    if poly == 0.0 {
        return 0.0;
    }
    poly * (-1.0 / s - 2.0 * f64::from(n) * s.ln()).exp()
}

/// `∫₋₁¹ ψ(t) dt`.
pub fn bump_integral() -> f64 {
    static VALUE: OnceLock<f64> = OnceLock::new();
    *VALUE.get_or_init(|| GaussLegendre::new(16).integrate_composite(-1.0, 1.0, 256, |t| bump_derivative(0, t)))
}

/// Product bump `φ(x) = Π ψ((xᵢ − cᵢ)/r)` supported on the cube of half-side `r`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestFunction {
    center: Vec<f64>,
    radius: f64,
}

impl TestFunction {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if center.is_empty() || center.len() > MAX_DIM {
            return Err(Error::DimensionMismatch { expected: MAX_DIM, got: center.len() });
        }
        if !(radius > 0.0) || !radius.is_finite() || center.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument(format!("invalid bump centre {center:?} / radius {radius}")));
        }
        Ok(Self { center, radius })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut v = 1.0;
        for (xa, ca) in x.iter().zip(&self.center) {
            v *= bump_derivative(0, (xa - ca) / self.radius);
            if v == 0.0 {
                break;
            }
        }
        v
    }

    /// `∂^α φ(x)`.
    pub fn derivative(&self, alpha: &MultiIndex, x: &[f64]) -> f64 {
        let mut v = 1.0;
        for ((xa, ca), &a) in x.iter().zip(&self.center).zip(alpha.components()) {
            assert!(a <= MAX_DERIVATIVE_ORDER, "derivative order {a} exceeds {MAX_DERIVATIVE_ORDER}");
            v *= bump_derivative(a, (xa - ca) / self.radius) / self.radius.powi(a as i32);
            if v == 0.0 {
                break;
            }
        }
        v
    }

    /// `∫ φ dx`.
    pub fn integral(&self) -> f64 {
        (self.radius * bump_integral()).powi(self.dim() as i32)
    }

    /// Whether the support lies strictly inside the window of `level`.
    pub fn check_window(&self, level: GridLevel) -> Result<()> {
        let w = level.window();
        for &c in &self.center {
            let (lo, hi) = (c - self.radius, c + self.radius);
            if lo <= -w || hi >= w {
                return Err(Error::SupportOutsideWindow { lo, hi, window: w });
            }
        }
        Ok(())
    }

    /// Lattice index range `[lo, hi]` per axis covering the support.
    pub fn index_bounds(&self, level: GridLevel) -> Vec<(i64, i64)> {
        self.center
            .iter()
            .map(|&c| (level.floor_index(c - self.radius), level.floor_index(c + self.radius) + 1))
            .collect()
    }

    /// `φ_Λ`: pointwise restriction to a domain.
    pub fn sample(&self, domain: Arc<GridDomain>) -> Result<GridFunction> {
        self.check_window(domain.level())?;
        GridFunction::sample(domain, |x| self.eval(x))
    }

    /// Pointwise restriction of `∂^α φ`.
    pub fn sample_derivative(&self, alpha: &MultiIndex, domain: Arc<GridDomain>) -> Result<GridFunction> {
        self.check_window(domain.level())?;
        GridFunction::sample(domain, |x| self.derivative(alpha, x))
    }
}

/// Finite family of bumps used to probe grid functions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestBattery {
    functions: Vec<TestFunction>,
    seed: u64,
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut out = 0.0;
    let mut f = 1.0 / base as f64;
    while i > 0 {
        out += (i % base) as f64 * f;
        i /= base;
        f /= base as f64;
    }
    out
}

impl TestBattery {
    pub const DEFAULT_COUNT: usize = 12;
    pub const DEFAULT_SEED: u64 = 7;
    pub const DEFAULT_RADII: (f64, f64) = (0.05, 0.4);

    pub fn new(functions: Vec<TestFunction>, seed: u64) -> Self {
        Self { functions, seed }
    }

    /// `count` bumps inside the open box `(lo, hi)`: radii log-spaced in
    /// `[0.05, 0.4]·d` with `d` the shortest side, centres from a Halton
    /// sequence under a seeded rotation.
    pub fn for_box(lo: &[f64], hi: &[f64], count: usize, seed: u64) -> Result<Self> {
        Self::for_box_with_radii(lo, hi, count, seed, Self::DEFAULT_RADII)
    }

    /// As [`for_box`](Self::for_box) with radii log-spaced in
    /// `[radii.0, radii.1]·d`.
    pub fn for_box_with_radii(lo: &[f64], hi: &[f64], count: usize, seed: u64, radii: (f64, f64)) -> Result<Self> {
        if !(radii.0 > 0.0 && radii.0 <= radii.1 && radii.1 < 0.5) {
            return Err(Error::InvalidArgument(format!(
                "radius fractions must satisfy 0 < min <= max < 0.5, got {radii:?}"
            )));
        }
        if lo.len() != hi.len() || lo.is_empty() || lo.len() > MAX_DIM {
            return Err(Error::DimensionMismatch { expected: lo.len(), got: hi.len() });
        }
        if lo.iter().zip(hi).any(|(a, b)| !(a < b)) {
            return Err(Error::InvalidArgument("battery box must have positive extent".into()));
        }
        const BASES: [u64; MAX_DIM] = [2, 3, 5];
        let side = lo.iter().zip(hi).map(|(a, b)| b - a).fold(f64::INFINITY, f64::min);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rotation: Vec<f64> = (0..lo.len()).map(|_| rng.gen::<f64>()).collect();
        let functions = (0..count)
            .map(|i| {
                let frac = if count > 1 { i as f64 / (count - 1) as f64 } else { 0.5 };
                let radius = side * radii.0 * (radii.1 / radii.0).powf(frac);
                let center = (0..lo.len())
                    .map(|a| {
                        let t = (radical_inverse(i as u64 + 1, BASES[a]) + rotation[a]).fract();
                        let margin = 0.02 * side;
                        let span = (hi[a] - lo[a]) - 2.0 * (radius + margin);
                        lo[a] + radius + margin + t * span.max(0.0)
                    })
                    .collect();
                TestFunction::new(center, radius)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { functions, seed })
    }

    /// Bumps centred at `point` with the given radii.
    pub fn centered(point: &[f64], radii: &[f64]) -> Result<Self> {
        let functions = radii.iter().map(|&r| TestFunction::new(point.to_vec(), r)).collect::<Result<Vec<_>>>()?;
        Ok(Self { functions, seed: 0 })
    }

    pub fn extend(mut self, other: TestBattery) -> Self {
        self.functions.extend(other.functions);
        self
    }

    pub fn functions(&self) -> &[TestFunction] {
        &self.functions
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_derivative_matches_closed_form() {
        for &t in &[-0.7, -0.2, 0.0, 0.3, 0.9] {
            let s: f64 = 1.0 - t * t;
            let expected = -2.0 * t / (s * s) * (-1.0 / s).exp();
            assert!((bump_derivative(1, t) - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let h = 1e-5;
        for n in 0..5 {
            for &t in &[-0.5, 0.1, 0.6] {
                let fd = (bump_derivative(n, t + h) - bump_derivative(n, t - h)) / (2.0 * h);
                let exact = bump_derivative(n + 1, t);
                assert!((fd - exact).abs() <= 1e-5 * exact.abs().max(1.0), "n={n} t={t}");
            }
        }
    }

    #[test]
    fn bump_integral_value() {
        assert!((bump_integral() - 0.443_993_816_168_079_4).abs() < 1e-14);
    }

    #[test]
    fn scaled_derivative_and_integral() {
        let phi = TestFunction::new(vec![0.2], 0.5).unwrap();
        let a = MultiIndex::new(vec![1]);
        assert_eq!(phi.derivative(&a, &[0.2]), 0.0);
        assert_eq!(phi.eval(&[0.7]), 0.0);
        assert!((phi.integral() - 0.5 * bump_integral()).abs() < 1e-16);
    }

    #[test]
    fn battery_is_inside_box() {
        let b = TestBattery::for_box(&[-1.0, -1.0], &[1.0, 1.0], 12, 3).unwrap();
        assert_eq!(b.len(), 12);
        for f in b.functions() {
            assert!(f.radius() >= 0.1 - 1e-12 && f.radius() <= 0.8 + 1e-12);
            for &c in f.center() {
                assert!(c - f.radius() > -1.0 && c + f.radius() < 1.0);
            }
        }
        assert_eq!(b, TestBattery::for_box(&[-1.0, -1.0], &[1.0, 1.0], 12, 3).unwrap());
        assert_ne!(b, TestBattery::for_box(&[-1.0, -1.0], &[1.0, 1.0], 12, 4).unwrap());
    }

    #[test]
    fn window_check() {
        let l = GridLevel::new(720, 1.0).unwrap();
        assert!(TestFunction::new(vec![0.5], 0.4).unwrap().check_window(l).is_ok());
        assert!(TestFunction::new(vec![0.5], 0.5).unwrap().check_window(l).is_err());
    }
}
