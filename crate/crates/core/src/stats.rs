//! Small statistics toolkit: compensated summation, ensemble summaries,
//! batch-means standard errors, and least-squares lines.

use alloc::vec::Vec;

use crate::math;

/// Kahan–Babuška compensated accumulator.
///
/// Aggregations over per-path records use this so that results do not depend
/// on how the record vector was produced (serially or by a parallel map),
/// only on its order.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    c: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if math::abs(self.sum) >= math::abs(x) {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.c
    }
}

/// Compensated sum of a slice.
pub fn ksum(xs: &[f64]) -> f64 {
    let mut acc = KahanSum::new();
    for &x in xs {
        acc.add(x);
    }
    acc.value()
}

/// Sample mean, variance (unbiased), and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub var: f64,
    pub se: f64,
}

pub fn summarize(xs: &[f64]) -> Summary {
    let n = xs.len();
    if n == 0 {
        return Summary { n: 0, mean: 0.0, var: 0.0, se: 0.0 };
    }
    let mean = ksum(xs) / n as f64;
    if n == 1 {
        return Summary { n, mean, var: 0.0, se: 0.0 };
    }
    let mut sq = KahanSum::new();
    for &x in xs {
        let d = x - mean;
        sq.add(d * d);
    }
    let var = sq.value() / (n - 1) as f64;
    let se = math::sqrt(var / n as f64);
    Summary { n, mean, var, se }
}

/// Batch-means standard error for a correlated series.
///
/// Splits the series into `floor(sqrt(n))` equal batches and returns the
/// standard error of the batch averages; the trailing remainder is dropped.
pub fn batch_means_se(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 4 {
        return summarize(xs).se;
    }
    let n_batches = int_sqrt(n).max(2);
    let len = n / n_batches;
    let means: Vec<f64> = (0..n_batches)
        .map(|b| ksum(&xs[b * len..(b + 1) * len]) / len as f64)
        .collect();
    summarize(&means).se
}

fn int_sqrt(n: usize) -> usize {
    let mut r = math::sqrt(n as f64) as usize;
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    while r * r > n {
        r -= 1;
    }
    r
}

/// Ordinary least-squares line `y = slope * x + intercept` with `r^2`.
#[derive(Debug, Clone, Copy)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> LinearFit {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = ksum(x) / n;
    let my = ksum(y) / n;
    let mut sxx = KahanSum::new();
    let mut sxy = KahanSum::new();
    let mut syy = KahanSum::new();
    for (&a, &b) in x.iter().zip(y) {
        sxx.add((a - mx) * (a - mx));
        sxy.add((a - mx) * (b - my));
        syy.add((b - my) * (b - my));
    }
    let slope = sxy.value() / sxx.value();
    let intercept = my - slope * mx;
    let r_squared = if syy.value() == 0.0 {
        1.0
    } else {
        (sxy.value() * sxy.value()) / (sxx.value() * syy.value())
    };
    LinearFit { slope, intercept, r_squared }
}

/// Trapezoid-rule integral of uniformly spaced samples.
pub fn trapezoid(values: &[f64], dt: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let mut acc = KahanSum::new();
    for w in values.windows(2) {
        acc.add(0.5 * (w[0] + w[1]));
    }
    acc.value() * dt
}
