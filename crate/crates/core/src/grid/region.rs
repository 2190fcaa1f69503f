use std::fmt;

/// An open (or closed) subset of ℝᵏ used to select grid points.
pub trait Region: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    fn contains(&self, x: &[f64]) -> bool;

    /// Membership of the lattice point `index / N`. Regions with rational
    /// boundaries override this to decide membership in exact arithmetic.
    fn contains_lattice(&self, index: &[i64], n_cells: u64) -> bool {
        let mut buf = [0.0; super::MAX_DIM];
        for (b, &i) in buf.iter_mut().zip(index) {
            *b = i as f64 / n_cells as f64;
        }
        self.contains(&buf[..index.len()])
    }
}

/// Compare `i` with `bound·N`; exact when `bound·N` is an integer.
fn compare_scaled(i: i64, bound: f64, n_cells: u64) -> std::cmp::Ordering {
    let scaled = bound * n_cells as f64;
    let rounded = scaled.round();
    if (scaled - rounded).abs() <= 1e-9 * rounded.abs().max(1.0) {
        i.cmp(&(rounded as i64))
    } else {
        (i as f64).partial_cmp(&scaled).unwrap_or(std::cmp::Ordering::Equal)
    }
}

/// Axis-aligned box, open or closed.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxRegion {
    lo: Vec<f64>,
    hi: Vec<f64>,
    closed: bool,
}

impl BoxRegion {
    pub fn open(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        assert_eq!(lo.len(), hi.len(), "box corners must have equal dimension");
        Self { lo, hi, closed: false }
    }

    pub fn closed(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        assert_eq!(lo.len(), hi.len(), "box corners must have equal dimension");
        Self { lo, hi, closed: true }
    }

    pub fn open_interval(a: f64, b: f64) -> Self {
        Self::open(vec![a], vec![b])
    }

    pub fn closed_interval(a: f64, b: f64) -> Self {
        Self::closed(vec![a], vec![b])
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }
}

impl Region for BoxRegion {
    fn dim(&self) -> usize {
        self.lo.len()
    }

    fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(self.lo.iter().zip(&self.hi)).all(
            |(&v, (&a, &b))| {
                if self.closed {
                    a <= v && v <= b
                } else {
                    a < v && v < b
                }
            },
        )
    }

    fn contains_lattice(&self, index: &[i64], n_cells: u64) -> bool {
        use std::cmp::Ordering::*;
        index.iter().zip(self.lo.iter().zip(&self.hi)).all(|(&i, (&a, &b))| {
            let above = compare_scaled(i, a, n_cells);
            let below = compare_scaled(i, b, n_cells);
            if self.closed {
                above != Less && below != Greater
            } else {
                above == Greater && below == Less
            }
        })
    }
}

/// Euclidean ball, open or closed.
#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    center: Vec<f64>,
    radius: f64,
    closed: bool,
}

impl Ball {
    pub fn open(center: Vec<f64>, radius: f64) -> Self {
        Self { center, radius, closed: false }
    }

    pub fn closed(center: Vec<f64>, radius: f64) -> Self {
        Self { center, radius, closed: true }
    }
}

impl Region for Ball {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn contains(&self, x: &[f64]) -> bool {
        let d2: f64 = x.iter().zip(&self.center).map(|(a, c)| (a - c) * (a - c)).sum();
        let r2 = self.radius * self.radius;
        if self.closed {
            d2 <= r2
        } else {
            d2 < r2
        }
    }

    fn contains_lattice(&self, index: &[i64], n_cells: u64) -> bool {
        let n = n_cells as f64;
        let exact = |v: f64| {
            let s = v * n;
            let r = s.round();
            ((s - r).abs() <= 1e-9 * r.abs().max(1.0)).then_some(r as i128)
        };
        let centre: Option<Vec<i128>> = self.center.iter().map(|&c| exact(c)).collect();
        match (centre, exact(self.radius)) {
            (Some(c), Some(r)) => {
                let d2: i128 = index.iter().zip(&c).map(|(&i, &ci)| (i as i128 - ci) * (i as i128 - ci)).sum();
                if self.closed {
                    d2 <= r * r
                } else {
                    d2 < r * r
                }
            }
            _ => {
                let mut buf = [0.0; super::MAX_DIM];
                for (b, &i) in buf.iter_mut().zip(index) {
                    *b = i as f64 / n;
                }
                self.contains(&buf[..index.len()])
            }
        }
    }
}

/// All of ℝᵏ; the window supplies the truncation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Whole {
    pub dim: usize,
}

impl Whole {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }
}

impl Region for Whole {
    fn dim(&self) -> usize {
        self.dim
    }

    fn contains(&self, _x: &[f64]) -> bool {
        true
    }

    fn contains_lattice(&self, _index: &[i64], _n_cells: u64) -> bool {
        true
    }
}

/// Region given by an arbitrary membership predicate.
pub struct FnRegion {
    dim: usize,
    predicate: Box<dyn Fn(&[f64]) -> bool + Send + Sync>,
}

impl FnRegion {
    pub fn new(dim: usize, predicate: impl Fn(&[f64]) -> bool + Send + Sync + 'static) -> Self {
        Self { dim, predicate: Box::new(predicate) }
    }
}

impl fmt::Debug for FnRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnRegion").field("dim", &self.dim).finish_non_exhaustive()
    }
}

impl Region for FnRegion {
    fn dim(&self) -> usize {
        self.dim
    }

    fn contains(&self, x: &[f64]) -> bool {
        (self.predicate)(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn open_interval_excludes_endpoints_exactly() {
        let r = BoxRegion::open_interval(0.0, 1.0);
        assert!(!r.contains_lattice(&[0], 720));
        assert!(r.contains_lattice(&[1], 720));
        assert!(r.contains_lattice(&[719], 720));
        assert!(!r.contains_lattice(&[720], 720));
    }

    #[test]
    fn rational_endpoint_decided_exactly() {
        // 0.1 * 720 = 72 exactly in the lattice even though 0.1 is inexact.
        let r = BoxRegion::open_interval(-0.1, 0.1);
        assert!(!r.contains_lattice(&[72], 720));
        assert!(r.contains_lattice(&[71], 720));
    }

    #[test]
    fn ball_lattice_membership() {
        let b = Ball::open(vec![0.0, 0.0], 0.5);
        assert!(!b.contains_lattice(&[4, 0], 8));
        assert!(b.contains_lattice(&[3, 0], 8));
        let c = Ball::closed(vec![0.0, 0.0], 0.5);
        assert!(c.contains_lattice(&[4, 0], 8));
    }
}
