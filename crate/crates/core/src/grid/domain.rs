use std::sync::Arc;

use rayon::prelude::*;

use super::{GridLevel, MultiIndex, Region, MAX_DIM};
use crate::error::{Error, Result};

const VACANT: u32 = u32::MAX;

/// Finite set of window lattice points, stored as a dense bounding box with a
/// slot table. Points are kept in lexicographic order (axis 0 slowest).
#[derive(Debug, Clone, PartialEq)]
pub struct GridDomain {
    level: GridLevel,
    dim: usize,
    lo: [i64; MAX_DIM],
    shape: [usize; MAX_DIM],
    slots: Vec<u32>,
    indices: Vec<i64>,
}

impl GridDomain {
    /// All window points of `level` that lie in `region`.
    pub fn discretize(region: &dyn Region, level: GridLevel) -> Result<Self> {
        let dim = region.dim();
        check_dim(dim)?;
        let w = level.window_cells();
        let n = level.n_cells();
        let side = (2 * w + 1) as usize;
        let rows: Vec<Vec<i64>> = (-w..=w)
            .into_par_iter()
            .map(|i0| {
                let mut out = Vec::new();
                let mut idx = [i0, -w, -w];
                let inner = side.pow(dim as u32 - 1);
                for _ in 0..inner {
                    if region.contains_lattice(&idx[..dim], n) {
                        out.extend_from_slice(&idx[..dim]);
                    }
                    for axis in (1..dim).rev() {
                        idx[axis] += 1;
                        if idx[axis] <= w {
                            break;
                        }
                        idx[axis] = -w;
                    }
                }
                out
            })
            .collect();
        let flat: Vec<i64> = rows.concat();
        if flat.is_empty() {
            return Err(Error::EmptyDomain);
        }
        Ok(Self::from_sorted(level, dim, flat))
    }

    /// The full window box `[-L, L]ᵏ ∩ Λᵏ`.
    pub fn window_box(level: GridLevel, dim: usize) -> Result<Self> {
        Self::discretize(&super::Whole::new(dim), level)
    }

    /// Domain from arbitrary index tuples; duplicates and out-of-window points
    /// are dropped.
    pub fn from_points(level: GridLevel, dim: usize, points: &[Vec<i64>]) -> Result<Self> {
        check_dim(dim)?;
        let mut pts: Vec<&Vec<i64>> =
            points.iter().filter(|p| p.len() == dim && p.iter().all(|&i| level.in_window(i))).collect();
        pts.sort();
        pts.dedup();
        let flat: Vec<i64> = pts.into_iter().flatten().copied().collect();
        Ok(Self::from_sorted(level, dim, flat))
    }

    fn from_sorted(level: GridLevel, dim: usize, flat: Vec<i64>) -> Self {
        let mut lo = [0i64; MAX_DIM];
        let mut hi = [0i64; MAX_DIM];
        if !flat.is_empty() {
            for a in 0..dim {
                lo[a] = i64::MAX;
                hi[a] = i64::MIN;
            }
            for p in flat.chunks_exact(dim) {
                for a in 0..dim {
                    lo[a] = lo[a].min(p[a]);
                    hi[a] = hi[a].max(p[a]);
                }
            }
        }
        let mut shape = [1usize; MAX_DIM];
        for a in 0..dim {
            shape[a] = if flat.is_empty() { 0 } else { (hi[a] - lo[a] + 1) as usize };
        }
        let total: usize = shape[..dim].iter().product();
        let mut d = Self { level, dim, lo, shape, slots: vec![VACANT; total], indices: flat };
        for id in 0..d.len() {
            let slot = d.slot(&d.indices[id * dim..(id + 1) * dim]).expect("point inside bounding box");
            d.slots[slot] = id as u32;
        }
        d
    }

    fn slot(&self, index: &[i64]) -> Option<usize> {
        let mut s = 0usize;
        for a in 0..self.dim {
            let off = index[a] - self.lo[a];
            if off < 0 || off as usize >= self.shape[a] {
                return None;
            }
            s = s * self.shape[a] + off as usize;
        }
        Some(s)
    }

    pub fn level(&self) -> GridLevel {
        self.level
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.indices.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Index tuple of point `id`.
    #[inline]
    pub fn index(&self, id: usize) -> &[i64] {
        &self.indices[id * self.dim..(id + 1) * self.dim]
    }

    /// Coordinates of point `id`; unused trailing entries are 0.
    pub fn coords(&self, id: usize) -> [f64; MAX_DIM] {
        let mut x = [0.0; MAX_DIM];
        for (a, &i) in self.index(id).iter().enumerate() {
            x[a] = self.level.coordinate(i);
        }
        x
    }

    /// Point id of an index tuple, if it belongs to the domain.
    #[inline]
    pub fn id_of(&self, index: &[i64]) -> Option<usize> {
        let s = self.slot(index)?;
        let v = self.slots[s];
        (v != VACANT).then_some(v as usize)
    }

    pub fn contains_index(&self, index: &[i64]) -> bool {
        self.id_of(index).is_some()
    }

    pub fn points(&self) -> impl Iterator<Item = &[i64]> + '_ {
        self.indices.chunks_exact(self.dim.max(1))
    }

    /// Extent of the bounding box along each axis.
    pub fn shape(&self) -> &[usize] {
        &self.shape[..self.dim]
    }

    /// Sub-domain of points satisfying `keep`.
    pub fn subset(&self, mut keep: impl FnMut(&[i64]) -> bool) -> Self {
        let flat: Vec<i64> = self.points().filter(|p| keep(p)).flatten().copied().collect();
        Self::from_sorted(self.level, self.dim, flat)
    }

    /// `{x ∈ d : x + offset·ε ∈ d}`.
    pub fn shifted_by(&self, offset: &[i64]) -> Self {
        let mut buf = [0i64; MAX_DIM];
        self.subset(|p| {
            for a in 0..self.dim {
                buf[a] = p[a] + offset[a];
            }
            self.contains_index(&buf[..self.dim])
        })
    }

    /// `Ω_Λ^α = {x ∈ Ω_Λ : x + αε ∈ Ω_Λ}`, where `Δ^α` is defined.
    pub fn shifted_interior(&self, alpha: &MultiIndex) -> Self {
        let off: Vec<i64> = alpha.components().iter().map(|&a| i64::from(a)).collect();
        self.shifted_by(&off)
    }

    /// Whether point `id` has a lattice neighbour (`|x − y|_∞ ≤ ε`) outside
    /// the domain or the window.
    pub fn on_lambda_boundary(&self, index: &[i64]) -> bool {
        let dim = self.dim;
        let mut y = [0i64; MAX_DIM];
        let combos = 3usize.pow(dim as u32);
        for c in 0..combos {
            let mut rest = c;
            for a in 0..dim {
                y[a] = index[a] + (rest % 3) as i64 - 1;
                rest /= 3;
            }
            let y = &y[..dim];
            if y.iter().any(|&i| !self.level.in_window(i)) || !self.contains_index(y) {
                return true;
            }
        }
        false
    }

    /// Mask over point ids marking the Λ-boundary.
    pub fn boundary_mask(&self) -> Vec<bool> {
        (0..self.len()).into_par_iter().map(|id| self.on_lambda_boundary(self.index(id))).collect()
    }

    /// `∂_Λ Ω_Λ`.
    pub fn lambda_boundary(&self) -> Self {
        self.subset(|p| self.on_lambda_boundary(p))
    }

    /// `∂_Λ^α = {x ∈ Ω_Λ : x + αε ∈ ∂_Λ Ω_Λ}`.
    pub fn alpha_boundary(&self, alpha: &MultiIndex) -> Self {
        let mut buf = [0i64; MAX_DIM];
        self.subset(|p| {
            for a in 0..self.dim {
                buf[a] = p[a] + i64::from(alpha.components()[a]);
            }
            let y = &buf[..self.dim];
            self.contains_index(y) && self.on_lambda_boundary(y)
        })
    }

    /// All window points of the index box `lo ..= hi`.
    pub fn lattice_box(level: GridLevel, lo: &[i64], hi: &[i64]) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch { expected: lo.len(), got: hi.len() });
        }
        let bounds: Vec<(i64, i64)> = lo.iter().zip(hi).map(|(&a, &b)| (a, b)).collect();
        let mut pts = Vec::new();
        super::for_each_index(&bounds, |i| pts.push(i.to_vec()));
        let d = Self::from_points(level, lo.len(), &pts)?;
        if d.is_empty() {
            return Err(Error::EmptyDomain);
        }
        Ok(d)
    }

    /// Points within sup-distance `layers` steps of the domain (window-clipped).
    pub fn dilate(&self, layers: i64) -> Self {
        self.dilate_on(self.level, layers)
    }

    /// Like [`dilate`](Self::dilate), on a level whose window is widened by
    /// `layers` so that nothing is clipped.
    pub fn padded(&self, layers: i64) -> Self {
        let level = GridLevel::from_window_cells(self.level.n_cells(), self.level.window_cells() + layers.max(0))
            .expect("widened window stays valid");
        self.dilate_on(level, layers)
    }

    fn dilate_on(&self, level: GridLevel, layers: i64) -> Self {
        let mut pts: Vec<Vec<i64>> = Vec::new();
        let mut bounds = vec![(0i64, 0i64); self.dim];
        for p in self.points() {
            for a in 0..self.dim {
                bounds[a] = (p[a] - layers, p[a] + layers);
            }
            super::for_each_index(&bounds, |i| pts.push(i.to_vec()));
        }
        Self::from_points(level, self.dim, &pts).expect("dimension already validated")
    }

    /// Whether the domain is a complete index box.
    pub fn is_full_box(&self) -> bool {
        self.len() == self.shape().iter().product::<usize>()
    }

    /// Lowest index along each axis.
    pub fn lower_corner(&self) -> &[i64] {
        &self.lo[..self.dim]
    }

    /// Union of two domains on the same level.
    pub fn union(&self, other: &Self) -> Result<Self> {
        self.compatible(other)?;
        let mut pts: Vec<Vec<i64>> = self.points().map(<[i64]>::to_vec).collect();
        pts.extend(other.points().filter(|p| !self.contains_index(p)).map(<[i64]>::to_vec));
        Self::from_points(self.level, self.dim, &pts)
    }

    pub(crate) fn compatible(&self, other: &Self) -> Result<()> {
        if self.level != other.level {
            return Err(Error::LevelMismatch { left: self.level.n_cells(), right: other.level.n_cells() });
        }
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        Ok(())
    }

    pub fn into_shared(self) -> Arc<Self> {
        Arc::new(self)
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 || dim > MAX_DIM {
        return Err(Error::DimensionMismatch { expected: MAX_DIM, got: dim });
    }
    Ok(())
}
