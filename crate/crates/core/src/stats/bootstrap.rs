use rand::Rng;
use rayon::prelude::*;

use super::{Result, StatsError};
use crate::rng::{derive_seed, rng_from};

pub const DEFAULT_RESAMPLES: usize = 5000;

/// Linear-interpolation quantile of sorted data.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Percentile 95% interval of `statistic` over resampled index vectors.
/// Resample `b` is drawn from its own derived seed, so the result does not
/// depend on thread scheduling. Non-finite resample statistics are skipped.
pub fn bootstrap_ci_indexed<F>(n: usize, statistic: F, resamples: usize, seed: u64) -> Result<(f64, f64)>
where
    F: Fn(&[usize]) -> f64 + Sync,
{
    if n < 2 {
        return Err(StatsError::InsufficientData("bootstrap needs two samples".into()));
    }
    if resamples == 0 {
        return Err(StatsError::InvalidArgument("zero resamples".into()));
    }
    let mut stats: Vec<f64> = (0..resamples)
        .into_par_iter()
        .map(|b| {
            let mut rng = rng_from(derive_seed(seed, &[b as u64]));
            let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            statistic(&idx)
        })
        .filter(|v| v.is_finite())
        .collect();
    if stats.is_empty() {
        return Err(StatsError::InsufficientData("no finite resample statistic".into()));
    }
    stats.sort_by(f64::total_cmp);
    Ok((percentile(&stats, 0.025), percentile(&stats, 0.975)))
}

pub fn bootstrap_ci<F>(samples: &[f64], statistic: F, resamples: usize, seed: u64) -> Result<(f64, f64)>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    bootstrap_ci_indexed(
        samples.len(),
        |idx| {
            let v: Vec<f64> = idx.iter().map(|&i| samples[i]).collect();
            statistic(&v)
        },
        resamples,
        seed,
    )
}
