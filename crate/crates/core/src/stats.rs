//! Monte Carlo summaries.

use alloc::vec::Vec;

use crate::math;

/// Point estimate with its standard error and replica count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateWithCI {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(n)`; zero for exact values.
    pub se: f64,
    pub n: u64,
}

impl EstimateWithCI {
    /// A value known exactly (no sampling error).
    pub fn exact(value: f64) -> Self {
        EstimateWithCI {
            mean: value,
            se: 0.0,
            n: 0,
        }
    }

    pub fn from_samples(samples: &[f64]) -> Self {
        let mut acc = MeanAccumulator::default();
        for &s in samples {
            acc.push(s);
        }
        acc.estimate()
    }

    /// `|a - b| / sqrt(se_a^2 + se_b^2)`; 0 for identical exact values and
    /// infinity for different exact values.
    pub fn z_score(&self, other: &EstimateWithCI) -> f64 {
        z_score(self.mean, self.se, other.mean, other.se)
    }

    /// `mean ± k * se`.
    pub fn interval(&self, k: f64) -> (f64, f64) {
        (self.mean - k * self.se, self.mean + k * self.se)
    }

    /// Whether `value` lies within `k` standard errors (plus `slack`).
    pub fn covers(&self, value: f64, k: f64, slack: f64) -> bool {
        (self.mean - value).abs() <= k * self.se + slack
    }
}

pub fn z_score(mean_a: f64, se_a: f64, mean_b: f64, se_b: f64) -> f64 {
    let diff = (mean_a - mean_b).abs();
    let scale = math::sqrt(se_a * se_a + se_b * se_b);
    if diff == 0.0 {
        0.0
    } else if scale == 0.0 {
        f64::INFINITY
    } else {
        diff / scale
    }
}

/// Running mean and variance (Welford), mergeable across partial results.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MeanAccumulator {
    n: u64,
    mean: f64,
    m2: f64,
}

impl MeanAccumulator {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Chan et al. pairwise combination.
    pub fn merge(&mut self, other: &MeanAccumulator) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * other.n as f64 / n as f64;
        let m2 = self.m2 + other.m2 + delta * delta * (self.n as f64 * other.n as f64) / n as f64;
        *self = MeanAccumulator { n, mean, m2 };
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance (0 for fewer than two samples).
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2 / (self.n - 1) as f64).max(0.0)
        }
    }

    pub fn estimate(&self) -> EstimateWithCI {
        let se = if self.n < 2 {
            0.0
        } else {
            math::sqrt(self.variance() / self.n as f64)
        };
        EstimateWithCI {
            mean: self.mean,
            se,
            n: self.n,
        }
    }
}

/// Number of batches used for variance confidence intervals.
pub const VARIANCE_BATCHES: usize = 30;

/// Variance estimate with a batch-means standard error: the samples are cut
/// into `n_batches` contiguous batches, the unbiased variance is computed in
/// each, and the batch variances are averaged.
pub fn batch_variance(samples: &[f64], n_batches: usize) -> EstimateWithCI {
    let n_batches = n_batches.max(2).min(samples.len() / 2).max(1);
    if samples.len() < 4 {
        let mut acc = MeanAccumulator::default();
        samples.iter().for_each(|&s| acc.push(s));
        return EstimateWithCI {
            mean: acc.variance(),
            se: 0.0,
            n: samples.len() as u64,
        };
    }
    let size = samples.len() / n_batches;
    let mut batches = MeanAccumulator::default();
    for b in 0..n_batches {
        let chunk = &samples[b * size..(b + 1) * size];
        let mut acc = MeanAccumulator::default();
        chunk.iter().for_each(|&s| acc.push(s));
        batches.push(acc.variance());
    }
    let est = batches.estimate();
    EstimateWithCI {
        mean: est.mean,
        se: est.se,
        n: samples.len() as u64,
    }
}

/// Pearson statistic and degrees of freedom for observed counts against
/// expected probabilities; cells with expected count below `min_expected`
/// are pooled into their neighbour.
pub fn chi_square_statistic(observed: &[u64], probs: &[f64], min_expected: f64) -> (f64, usize) {
    assert_eq!(observed.len(), probs.len());
    let total: u64 = observed.iter().sum();
    let total = total as f64;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut o_acc, mut e_acc) = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(probs) {
        o_acc += o as f64;
        e_acc += p * total;
        if e_acc >= min_expected {
            cells.push((o_acc, e_acc));
            o_acc = 0.0;
            e_acc = 0.0;
        }
    }
    if e_acc > 0.0 || o_acc > 0.0 {
        match cells.last_mut() {
            Some(last) => {
                last.0 += o_acc;
                last.1 += e_acc;
            }
            None => cells.push((o_acc, e_acc)),
        }
    }
    let stat = cells.iter().map(|&(o, e)| (o - e) * (o - e) / e).sum();
    (stat, cells.len().saturating_sub(1))
}
