//! Small floating-point helpers shared across modules.

/// Neumaier's compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// Dot product accumulated in doubled precision: products are split exactly
/// with a fused multiply-add and the running sum carries its rounding error.
#[derive(Debug, Clone, Copy, Default)]
pub struct DotAccumulator {
    hi: f64,
    lo: f64,
}

impl DotAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let s = self.hi + value;
        let bp = s - self.hi;
        let err = (self.hi - (s - bp)) + (value - bp);
        self.hi = s;
        self.lo += err;
    }

    #[inline]
    pub fn add_product(&mut self, a: f64, b: f64) {
        let p = a * b;
        let e = a.mul_add(b, -p);
        self.add(p);
        self.lo += e;
    }

    pub fn value(&self) -> f64 {
        self.hi + self.lo
    }

    /// `(Σ)/d` rounded from the doubled-precision sum, so that an exact
    /// multiple `d·x` divides back to `x`.
    pub fn quotient(&self, d: f64) -> f64 {
        let s = self.hi + self.lo;
        let l = self.lo - (s - self.hi);
        let q = s / d;
        let r = (-q).mul_add(d, s) + l;
        q + r / d
    }
}

/// Compensated sum of an iterator.
pub fn sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    values.into_iter().collect::<CompensatedSum>().value()
}

/// True when `|a - b| <= ulps · EPSILON · scale`.
pub fn within_ulps(a: f64, b: f64, scale: f64, ulps: f64) -> bool {
    (a - b).abs() <= ulps * f64::EPSILON * scale.abs().max(f64::MIN_POSITIVE)
}

/// A residual of an exact identity together with the magnitude of the terms
/// that produced it. The identity holds to `k` ulp when
/// `|residual| <= k · EPSILON · scale`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Residual {
    pub value: f64,
    pub scale: f64,
}

impl Residual {
    pub fn within_ulps(&self, ulps: f64) -> bool {
        within_ulps(self.value, 0.0, self.scale, ulps)
    }

    /// Residual measured in units of `EPSILON · scale`.
    pub fn in_ulps(&self) -> f64 {
        if self.scale == 0.0 {
            if self.value == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            self.value.abs() / (f64::EPSILON * self.scale)
        }
    }
}

/// Binomial coefficient for the small orders used by difference stencils.
pub fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * f64::from(n - i) / f64::from(i + 1);
    }
    acc
}

/// Ordinary least-squares line `y = slope·x + intercept`; returns
/// `(slope, intercept, rms_residual)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - (slope * x + intercept);
            r * r
        })
        .sum();
    (slope, intercept, (ss / n).sqrt())
}
