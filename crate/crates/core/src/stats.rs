//! Order-stable reductions and Monte Carlo estimates.

use alloc::vec::Vec;

/// z-quantile of a two-sided 99% normal interval.
pub const Z_99: f64 = 2.576;

/// Pairwise (cascade) summation. The association order depends only on the
/// slice length, so the result is reproducible for a fixed input order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 64;
    if xs.len() <= BLOCK {
        let mut s = 0.0;
        for &x in xs {
            s += x;
        }
        return s;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub fn mean(xs: &[f64]) -> f64 {
    pairwise_sum(xs) / xs.len() as f64
}

/// Unbiased sample variance (two-pass).
pub fn sample_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let sq: Vec<f64> = xs.iter().map(|&x| (x - m) * (x - m)).collect();
    pairwise_sum(&sq) / (xs.len() - 1) as f64
}

/// Mean with standard error and a symmetric normal confidence interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MCEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
    pub z: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl MCEstimate {
    /// Panics on an empty sample.
    pub fn from_samples(xs: &[f64], z: f64) -> Self {
        assert!(!xs.is_empty(), "empty sample");
        let n = xs.len();
        let mean = mean(xs);
        let stderr = libm::sqrt(sample_variance(xs) / n as f64);
        Self { mean, stderr, n, z, ci_low: mean - z * stderr, ci_high: mean + z * stderr }
    }

    pub fn contains(&self, value: f64) -> bool {
        self.ci_low <= value && value <= self.ci_high
    }
}
