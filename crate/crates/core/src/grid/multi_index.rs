use serde::Serialize;

/// Multi-index `α = (α₁, …, α_k)` of non-negative orders.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(components: Vec<u32>) -> Self {
        Self(components)
    }

    pub fn zero(dim: usize) -> Self {
        Self(vec![0; dim])
    }

    /// The unit multi-index `eᵢ`.
    pub fn unit(dim: usize, axis: usize) -> Self {
        let mut c = vec![0; dim];
        c[axis] = 1;
        Self(c)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn components(&self) -> &[u32] {
        &self.0
    }

    /// `|α| = Σ αᵢ`.
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&a| a == 0)
    }

    /// `α − eᵢ`, defined only when `αᵢ ≥ 1`.
    pub fn minus_unit(&self, axis: usize) -> Option<Self> {
        let mut c = self.0.clone();
        let a = c.get_mut(axis)?;
        *a = a.checked_sub(1)?;
        Some(Self(c))
    }

    /// All multi-indices of dimension `dim` with `|α| ≤ max_order`, sorted by
    /// order and then lexicographically.
    pub fn all_up_to(dim: usize, max_order: u32) -> Vec<Self> {
        let mut out = Vec::new();
        let mut current = vec![0u32; dim];
        fn rec(axis: usize, left: u32, current: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
            if axis == current.len() {
                out.push(MultiIndex(current.clone()));
                return;
            }
            for a in 0..=left {
                current[axis] = a;
                rec(axis + 1, left - a, current, out);
            }
            current[axis] = 0;
        }
        rec(0, max_order, &mut current, &mut out);
        out.sort_by(|a, b| a.order().cmp(&b.order()).then_with(|| b.0.cmp(&a.0)));
        out
    }

    /// Offsets `δ ≤ α` (componentwise) paired with `Π C(αᵢ, δᵢ)`.
    pub(crate) fn sub_indices(&self) -> Vec<(Vec<i64>, f64, u32)> {
        let mut out = vec![(Vec::new(), 1.0, 0u32)];
        for &a in &self.0 {
            let mut next = Vec::with_capacity(out.len() * (a as usize + 1));
            for (off, w, ord) in &out {
                for d in 0..=a {
                    let mut o = off.clone();
                    o.push(i64::from(d));
                    next.push((o, w * crate::numeric::binomial(a, d), ord + d));
                }
            }
            out = next;
        }
        out
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        Self(v)
    }
}
