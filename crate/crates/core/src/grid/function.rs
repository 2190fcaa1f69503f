use std::sync::Arc;

use rayon::prelude::*;

use super::{GridDomain, GridLevel, MAX_DIM};
use crate::error::{Error, Result};

/// Real values on the points of a [`GridDomain`]. Reads outside the domain are 0.
#[derive(Debug, Clone)]
pub struct GridFunction {
    domain: Arc<GridDomain>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(domain: Arc<GridDomain>, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.len() {
            return Err(Error::InvalidArgument(format!(
                "{} values for a domain of {} points",
                values.len(),
                domain.len()
            )));
        }
        Ok(Self { domain, values })
    }

    pub fn zeros(domain: Arc<GridDomain>) -> Self {
        Self::constant(domain, 0.0)
    }

    pub fn constant(domain: Arc<GridDomain>, c: f64) -> Self {
        let values = vec![c; domain.len()];
        Self { domain, values }
    }

    /// Pointwise restriction of `f` to the domain.
    pub fn sample(domain: Arc<GridDomain>, f: impl Fn(&[f64]) -> f64 + Sync) -> Result<Self> {
        let dim = domain.dim();
        let values: Vec<f64> = (0..domain.len()).into_par_iter().map(|id| f(&domain.coords(id)[..dim])).collect();
        if let Some(id) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteSample { point: domain.coords(id)[..dim].to_vec(), value: values[id] });
        }
        Ok(Self { domain, values })
    }

    /// Values given as a function of the integer index tuple.
    pub fn from_index_fn(domain: Arc<GridDomain>, f: impl Fn(&[i64]) -> f64 + Sync) -> Self {
        let values = (0..domain.len()).into_par_iter().map(|id| f(domain.index(id))).collect();
        Self { domain, values }
    }

    pub fn domain(&self) -> &Arc<GridDomain> {
        &self.domain
    }

    pub fn level(&self) -> GridLevel {
        self.domain.level()
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Value at an index tuple; 0 outside the domain.
    #[inline]
    pub fn at(&self, index: &[i64]) -> f64 {
        self.domain.id_of(index).map_or(0.0, |id| self.values[id])
    }

    /// Value at `index + offset`; 0 outside the domain.
    #[inline]
    pub fn at_offset(&self, index: &[i64], offset: &[i64]) -> f64 {
        let mut buf = [0i64; MAX_DIM];
        for a in 0..index.len() {
            buf[a] = index[a] + offset[a];
        }
        self.at(&buf[..index.len()])
    }

    /// Pointwise composition `F ∘ f`.
    pub fn map(&self, op: impl Fn(f64) -> f64 + Sync) -> Self {
        Self { domain: Arc::clone(&self.domain), values: self.values.par_iter().map(|&v| op(v)).collect() }
    }

    /// Pointwise combination on the union of both domains.
    pub fn zip_with(&self, other: &Self, op: impl Fn(f64, f64) -> f64 + Sync) -> Result<Self> {
        if Arc::ptr_eq(&self.domain, &other.domain) || *self.domain == *other.domain {
            let values = self.values.par_iter().zip(&other.values).map(|(&a, &b)| op(a, b)).collect();
            return Ok(Self { domain: Arc::clone(&self.domain), values });
        }
        let union = Arc::new(self.domain.union(&other.domain)?);
        Ok(Self::from_index_fn(union, |p| op(self.at(p), other.at(p))))
    }

    pub fn scale(&self, a: f64) -> Self {
        self.map(|v| a * v)
    }

    /// The same values read on another domain (0 where `self` is undefined).
    pub fn restrict(&self, domain: Arc<GridDomain>) -> Result<Self> {
        self.domain.compatible(&domain)?;
        Ok(Self::from_index_fn(domain, |p| self.at(p)))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::BoxRegion;

    fn unit(n: u64) -> Arc<GridDomain> {
        let l = GridLevel::new(n, 2.0).unwrap();
        Arc::new(GridDomain::discretize(&BoxRegion::open_interval(0.0, 1.0), l).unwrap())
    }

    #[test]
    fn sample_square() {
        let f = GridFunction::sample(unit(4), |x| x[0] * x[0]).unwrap();
        assert_eq!(f.values(), &[1.0 / 16.0, 0.25, 9.0 / 16.0]);
        assert_eq!(f.at(&[0]), 0.0);
        assert_eq!(f.at(&[4]), 0.0);
    }

    #[test]
    fn sample_reciprocal_is_finite() {
        let f = GridFunction::sample(unit(64), |x| 1.0 / x[0]).unwrap();
        assert_eq!(f.values()[0], 64.0);
    }

    #[test]
    fn non_finite_sample_is_reported() {
        let l = GridLevel::new(4, 1.0).unwrap();
        let d = Arc::new(GridDomain::window_box(l, 1).unwrap());
        assert!(matches!(GridFunction::sample(d, |x| 1.0 / x[0]), Err(Error::NonFiniteSample { .. })));
    }

    #[test]
    fn zip_on_union() {
        let l = GridLevel::new(4, 2.0).unwrap();
        let a = Arc::new(GridDomain::discretize(&BoxRegion::open_interval(0.0, 1.0), l).unwrap());
        let b = Arc::new(GridDomain::discretize(&BoxRegion::open_interval(0.5, 1.5), l).unwrap());
        let f = GridFunction::constant(a, 1.0);
        let g = GridFunction::constant(b, 2.0);
        let h = f.zip_with(&g, |x, y| x + y).unwrap();
        assert_eq!(h.domain().len(), 5);
        assert_eq!(h.at(&[1]), 1.0);
        assert_eq!(h.at(&[3]), 3.0);
        assert_eq!(h.at(&[5]), 2.0);
    }
}
