//! Gauss–Legendre rules on intervals and tensor boxes.

use std::f64::consts::PI;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "a quadrature rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Newton iteration from the Chebyshev-like initial guess.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Integral of `f` over `[a, b]`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, a: f64, b: f64, f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }

    /// Composite rule with `panels` equal sub-intervals of `[a, b]`.
    pub fn integrate_composite<F: Fn(f64) -> f64>(&self, a: f64, b: f64, panels: usize, f: F) -> f64 {
        let h = (b - a) / panels as f64;
        crate::numeric::sum((0..panels).map(|i| {
            let lo = a + h * i as f64;
            self.integrate(lo, lo + h, &f)
        }))
    }

    /// Integral over the box `Π [lo_i, hi_i]` with the tensor-product rule.
    pub fn integrate_box<F: Fn(&[f64]) -> f64>(&self, lo: &[f64], hi: &[f64], f: F) -> f64 {
        let (acc, _, jac) = self.tensor_sum(lo, hi, f);
        acc * jac
    }

    /// Mean value over the box, with weights normalised so that constants
    /// are reproduced exactly.
    pub fn mean_box<F: Fn(&[f64]) -> f64>(&self, lo: &[f64], hi: &[f64], f: F) -> f64 {
        let (acc, wsum, _) = self.tensor_sum(lo, hi, f);
        acc / wsum
    }

    fn tensor_sum<F: Fn(&[f64]) -> f64>(&self, lo: &[f64], hi: &[f64], f: F) -> (f64, f64, f64) {
        let dim = lo.len();
        let n = self.len();
        let mut idx = vec![0usize; dim];
        let mut x = vec![0.0; dim];
        let mut acc = 0.0;
        let mut wsum = 0.0;
        let jac: f64 = lo.iter().zip(hi).map(|(a, b)| 0.5 * (b - a)).product();
        loop {
            let mut w = 1.0;
            for d in 0..dim {
                let half = 0.5 * (hi[d] - lo[d]);
                x[d] = 0.5 * (lo[d] + hi[d]) + half * self.nodes[idx[d]];
                w *= self.weights[idx[d]];
            }
            acc += w * f(&x);
            wsum += w;
            // odometer increment
            let mut d = 0;
            loop {
                if d == dim {
                    return (acc, wsum, jac);
                }
                idx[d] += 1;
                if idx[d] < n {
                    break;
                }
                idx[d] = 0;
                d += 1;
            }
        }
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_point_rule_matches_tabulated_nodes() {
        let g = GaussLegendre::new(4);
        assert!((g.nodes()[3] - 0.861_136_311_594_052_6).abs() < 1e-15);
        assert!((g.weights()[3] - 0.347_854_845_137_453_9).abs() < 1e-15);
        assert!((g.weights().iter().sum::<f64>() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn exact_for_degree_2n_minus_1() {
        let g = GaussLegendre::new(4);
        let v = g.integrate(0.0, 2.0, |x| x.powi(7));
        assert!((v - 32.0).abs() < 1e-12);
    }

    #[test]
    fn odd_rule_has_centre_node() {
        let g = GaussLegendre::new(5);
        assert!(g.nodes()[2].abs() < 1e-16);
        assert!((g.integrate(-1.0, 1.0, |x| x.powi(8)) - 2.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn box_rule_in_two_dimensions() {
        let g = GaussLegendre::new(3);
        let v = g.integrate_box(&[0.0, 0.0], &[1.0, 2.0], |x| x[0] * x[1] * x[1]);
        assert!((v - 0.5 * 8.0 / 3.0).abs() < 1e-14);
    }
}
