use serde::{Deserialize, Serialize};

use crate::asymptotics::{Ladder, Thresholds};
use crate::error::{Error, Result};
use crate::pairing::TestBattery;
use crate::pde::SolveMethod;

/// Profile of the Heaviside ramp on `[0, Mε]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ramp {
    /// `t`.
    #[default]
    Linear,
    /// `3t² − 2t³`.
    Smoothstep,
    /// `t²`, one-sided smooth at 0 only.
    Quadratic,
}

impl Ramp {
    pub fn eval(self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        match self {
            Ramp::Linear => t,
            Ramp::Smoothstep => t * t * (3.0 - 2.0 * t),
            Ramp::Quadratic => t * t,
        }
    }
}

/// Parameters shared by all experiments; unset fields take per-experiment
/// defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Number of ladder levels.
    pub levels: Option<usize>,
    /// Coarsest `N` (per axis in 2D).
    pub base: Option<u64>,
    /// Window half-width `L`.
    pub window: Option<f64>,
    pub battery_count: usize,
    pub seed: u64,
    /// Bump radii as fractions of the battery box side.
    pub radii: Option<[f64; 2]>,
    /// Window size in grid steps for measure extraction.
    pub window_steps: Option<u64>,
    pub bins: usize,
    pub cutoff: Option<f64>,
    pub method: SolveMethod,
    /// Relative solver residual; each experiment has its own default.
    pub tol: Option<f64>,
    pub dt: Option<f64>,
    pub final_time: Option<f64>,
    /// Heaviside powers `m` and `n`.
    pub m: u32,
    pub n: u32,
    pub ramp: Ramp,
    pub thresholds: Thresholds,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            levels: None,
            base: None,
            window: None,
            battery_count: TestBattery::DEFAULT_COUNT,
            seed: TestBattery::DEFAULT_SEED,
            radii: None,
            window_steps: None,
            bins: crate::measures::DEFAULT_BINS,
            cutoff: None,
            method: SolveMethod::Auto,
            tol: None,
            dt: None,
            final_time: None,
            m: 2,
            n: 1,
            ramp: Ramp::Linear,
            thresholds: Thresholds::default(),
        }
    }
}

/// Largest accepted number of ladder levels.
pub const MAX_LEVELS: usize = 8;

fn invalid(field: &str, message: impl std::fmt::Display) -> Error {
    Error::InvalidArgument(format!("{field}: {message}"))
}

impl Config {
    /// Range checks on every field, reporting the offending field name.
    pub fn validate(&self) -> Result<()> {
        if let Some(l) = self.levels {
            if !(Ladder::MIN_LEVELS..=MAX_LEVELS).contains(&l) {
                return Err(invalid("levels", format!("must be in {}..={MAX_LEVELS}, got {l}", Ladder::MIN_LEVELS)));
            }
        }
        if self.base == Some(0) {
            return Err(invalid("base", "must be positive"));
        }
        if let Some(w) = self.window {
            if !(w > 0.0 && w.is_finite()) {
                return Err(invalid("window", format!("must be positive, got {w}")));
            }
        }
        if self.battery_count == 0 {
            return Err(invalid("battery_count", "must be at least 1"));
        }
        if let Some([a, b]) = self.radii {
            if !(a > 0.0 && a <= b && b < 0.5) {
                return Err(invalid("radii", format!("need 0 < min <= max < 0.5, got [{a}, {b}]")));
            }
        }
        if self.window_steps == Some(0) {
            return Err(invalid("window_steps", "must be positive"));
        }
        if self.bins == 0 {
            return Err(invalid("bins", "must be positive"));
        }
        if let Some(c) = self.cutoff {
            if !(c > 0.0) {
                return Err(invalid("cutoff", format!("must be positive, got {c}")));
            }
        }
        if let Some(tol) = self.tol {
            if !(tol > 0.0 && tol < 1.0) {
                return Err(invalid("tol", format!("must be in (0, 1), got {tol}")));
            }
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(invalid("dt", format!("must be positive, got {dt}")));
            }
        }
        if let Some(t) = self.final_time {
            if !(t > 0.0 && t.is_finite()) {
                return Err(invalid("final_time", format!("must be positive, got {t}")));
            }
        }
        if self.m == 0 || self.n == 0 {
            return Err(invalid(if self.m == 0 { "m" } else { "n" }, "must be at least 1"));
        }
        let t = self.thresholds;
        if !(t.exponent > 0.0 && t.residual > 0.0 && t.zero_floor >= 0.0) {
            return Err(invalid("thresholds", "exponent and residual must be positive, zero_floor non-negative"));
        }
        Ok(())
    }

    /// The configured solver tolerance, or `default`.
    pub fn tol_or(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }

    pub fn battery(&self, lo: &[f64], hi: &[f64]) -> Result<TestBattery> {
        let radii = self.radii.map_or(TestBattery::DEFAULT_RADII, |[a, b]| (a, b));
        TestBattery::for_box_with_radii(lo, hi, self.battery_count, self.seed, radii)
    }

    /// Geometric ladder from the configured or default base, count and window.
    pub fn ladder(&self, base: u64, factor: u64, levels: usize, window: f64) -> Result<Ladder> {
        Ladder::geometric(
            self.base.unwrap_or(base),
            factor,
            self.levels.unwrap_or(levels),
            self.window.unwrap_or(window),
        )
    }
}
