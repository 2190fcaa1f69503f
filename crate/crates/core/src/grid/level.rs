use serde::Serialize;

use crate::error::{Error, Result};

/// Default highly-composite base: every rational with a denominator dividing
/// 720 lies on every level of a ladder built from it.
pub const DEFAULT_BASE: u64 = 720;

/// One finite resolution: `N` cells per unit length and the half-width of the
/// computational window `[-L, L]ᵏ`, stored as the integer `L·N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct GridLevel {
    n_cells: u64,
    window_cells: i64,
}

impl GridLevel {
    /// Level with `N = n_cells` and window half-width `window`. The window must
    /// be grid-aligned.
    pub fn new(n_cells: u64, window: f64) -> Result<Self> {
        if n_cells == 0 {
            return Err(Error::InvalidLevel("N must be positive".into()));
        }
        if !(window > 0.0) || !window.is_finite() {
            return Err(Error::InvalidLevel(format!("window must be positive, got {window}")));
        }
        let scaled = window * n_cells as f64;
        let rounded = scaled.round();
        if (scaled - rounded).abs() > 1e-9 * rounded.max(1.0) {
            return Err(Error::WindowAlignment { window, n_cells });
        }
        Self::from_window_cells(n_cells, rounded as i64)
    }

    pub fn from_window_cells(n_cells: u64, window_cells: i64) -> Result<Self> {
        if n_cells == 0 || window_cells <= 0 {
            return Err(Error::InvalidLevel(format!(
                "need N > 0 and window cells > 0, got N = {n_cells}, cells = {window_cells}"
            )));
        }
        Ok(Self { n_cells, window_cells })
    }

    pub fn n_cells(&self) -> u64 {
        self.n_cells
    }

    /// `N` as a float; exact for every practical resolution.
    pub fn n(&self) -> f64 {
        self.n_cells as f64
    }

    pub fn step(&self) -> f64 {
        1.0 / self.n()
    }

    pub fn window(&self) -> f64 {
        self.window_cells as f64 / self.n()
    }

    pub fn window_cells(&self) -> i64 {
        self.window_cells
    }

    /// Coordinate of lattice index `i`, correctly rounded as `i / N`.
    #[inline]
    pub fn coordinate(&self, index: i64) -> f64 {
        index as f64 / self.n()
    }

    /// Largest lattice index `i` with `i/N <= x`.
    pub fn floor_index(&self, x: f64) -> i64 {
        let mut i = (x * self.n()).floor() as i64;
        while self.coordinate(i + 1) <= x {
            i += 1;
        }
        while self.coordinate(i) > x {
            i -= 1;
        }
        i
    }

    /// Lattice index closest to `x` (ties go up).
    pub fn nearest_index(&self, x: f64) -> i64 {
        (x * self.n()).round() as i64
    }

    /// Integer index for a rational coordinate that lies on this grid, if it does.
    pub fn exact_index(&self, x: f64) -> Option<i64> {
        let scaled = x * self.n();
        let rounded = scaled.round();
        ((scaled - rounded).abs() <= 1e-9 * rounded.abs().max(1.0)).then_some(rounded as i64)
    }

    /// The level `factor` times finer with the same window.
    pub fn refined(&self, factor: u64) -> Self {
        Self { n_cells: self.n_cells * factor, window_cells: self.window_cells * factor as i64 }
    }

    pub fn in_window(&self, index: i64) -> bool {
        index.abs() <= self.window_cells
    }
}

/// Level with `N = base · 2^exponent` and window half-width `window`.
pub fn make_level(exponent: u32, base: u64, window: f64) -> Result<GridLevel> {
    if base == 0 {
        return Err(Error::InvalidLevel("base must be at least 1".into()));
    }
    let n = base.checked_mul(1u64 << exponent).ok_or_else(|| Error::InvalidLevel("resolution overflows".into()))?;
    GridLevel::new(n, window)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn base_level() {
        let l = make_level(0, 720, 2.0).unwrap();
        assert_eq!(l.n_cells(), 720);
        assert_eq!(l.step(), 1.0 / 720.0);
        assert_eq!(l.window_cells(), 1440);
        assert_eq!(l.step() * l.n(), 1.0);
    }

    #[test]
    fn refined_exponent() {
        assert_eq!(make_level(3, 720, 2.0).unwrap().n_cells(), 5760);
    }

    #[test]
    fn alignment_uses_exact_rationals() {
        // 720 / 3 = 240 exactly.
        let l = make_level(0, 720, 1.0 / 3.0).unwrap();
        assert_eq!(l.window_cells(), 240);
        // 720 / 7 is not an integer.
        assert!(matches!(make_level(0, 720, 1.0 / 7.0), Err(Error::WindowAlignment { .. })));
        assert!(make_level(0, 0, 1.0).is_err());
        assert!(make_level(0, 720, -1.0).is_err());
    }

    #[test]
    fn floor_index_on_grid_points() {
        let l = GridLevel::new(8, 1.0).unwrap();
        assert_eq!(l.floor_index(0.3), 2);
        assert_eq!(l.floor_index(0.25), 2);
        assert_eq!(l.floor_index(-0.01), -1);
        let l = GridLevel::new(720, 1.0).unwrap();
        for i in -720..=720 {
            assert_eq!(l.floor_index(l.coordinate(i)), i);
        }
    }
}
