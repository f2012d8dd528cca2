//! Summary statistics for evaluation reports.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const BOOTSTRAP_RESAMPLES: usize = 10_000;

/// Mean ± std, median with a bootstrap 95% interval, and maximum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (n - 1), 0 for a single value.
    pub std: f64,
    pub median: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub max: f64,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    median_sorted(&v)
}

fn median_sorted(v: &[f64]) -> f64 {
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Linear-interpolated quantile of sorted data, `q` in [0, 1].
fn quantile_sorted(v: &[f64], q: f64) -> f64 {
    let pos = q * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

/// Percentile-bootstrap 95% interval of the median.
pub fn bootstrap_median_ci(values: &[f64], resamples: usize, seed: u64) -> (f64, f64) {
    if values.is_empty() || resamples == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = values.len();
    let mut sample = vec![0.0; n];
    let mut medians: Vec<f64> = (0..resamples)
        .map(|_| {
            for s in sample.iter_mut() {
                *s = values[rng.gen_range(0..n)];
            }
            sample.sort_by(f64::total_cmp);
            median_sorted(&sample)
        })
        .collect();
    medians.sort_by(f64::total_cmp);
    (quantile_sorted(&medians, 0.025), quantile_sorted(&medians, 0.975))
}

/// `None` for an empty input.
pub fn summarize(values: &[f64], seed: u64) -> Option<Summary> {
    if values.is_empty() {
        return None;
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let std = if n > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    let (ci_low, ci_high) = bootstrap_median_ci(values, BOOTSTRAP_RESAMPLES, seed);
    Some(Summary {
        n,
        mean,
        std,
        median: median(values),
        ci_low,
        ci_high,
        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}
