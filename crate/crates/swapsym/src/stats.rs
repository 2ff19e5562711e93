//! Order-stable summation and the small statistical toolkit shared by the
//! Monte-Carlo estimators.
//!
//! All estimators reduce per-path values with pairwise summation over an
//! index-ordered buffer, so results do not depend on thread scheduling.

use serde::{Deserialize, Serialize};

/// Pairwise (cascade) summation. Error grows like O(log n) rather than O(n)
/// and the reduction tree depends only on the slice length.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BASE: usize = 32;
    if xs.len() <= BASE {
        let mut acc = 0.0;
        for &x in xs {
            acc += x;
        }
        return acc;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

impl McEstimate {
    /// Mean and standard error (sample standard deviation / sqrt(n)) of a
    /// sample, reduced with pairwise summation.
    pub fn from_sample(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self {
                mean: 0.0,
                stderr: 0.0,
                n: 0,
            };
        }
        let mean = pairwise_sum(xs) / n as f64;
        if n == 1 {
            return Self {
                mean,
                stderr: 0.0,
                n,
            };
        }
        let sq: Vec<f64> = xs.iter().map(|&x| (x - mean) * (x - mean)).collect();
        let var = pairwise_sum(&sq) / (n - 1) as f64;
        Self {
            mean,
            stderr: (var / n as f64).sqrt(),
            n,
        }
    }
}

/// z-score of a paired-difference sample: mean(d) / stderr(d).
///
/// A degenerate sample (stderr 0) yields 0 when the mean is also 0, otherwise
/// a signed infinity; callers compare |z| against a threshold.
pub fn paired_z(diffs: &[f64]) -> (McEstimate, f64) {
    let est = McEstimate::from_sample(diffs);
    let z = if est.stderr == 0.0 {
        if est.mean == 0.0 {
            0.0
        } else {
            f64::INFINITY.copysign(est.mean)
        }
    } else {
        est.mean / est.stderr
    };
    (est, z)
}

/// Standard normal cumulative distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}
