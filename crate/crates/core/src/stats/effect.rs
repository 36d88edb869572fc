use super::{PairedSamples, Result, StatsError};

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
pub fn sample_sd(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

/// Spread indistinguishable from rounding noise around `center`.
fn negligible(sd: f64, center: f64) -> bool {
    sd <= 1e-12 * (1.0 + center.abs())
}

/// `mean(x - y) / sd(x - y)`. Constant differences have no defined d.
pub fn cohens_d_paired(s: &PairedSamples) -> Result<f64> {
    let d = s.differences();
    if d.len() < 2 {
        return Err(StatsError::InsufficientData("paired d needs two pairs".into()));
    }
    let sd = sample_sd(&d);
    if negligible(sd, mean(&d)) {
        return Err(StatsError::ZeroVariance);
    }
    Ok(mean(&d) / sd)
}

/// `(mean x - mean y) / pooled sd`.
pub fn cohens_d_groups(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() < 2 || y.len() < 2 {
        return Err(StatsError::InsufficientData("each group needs two values".into()));
    }
    let (nx, ny) = (x.len() as f64, y.len() as f64);
    let pooled = (((nx - 1.0) * sample_sd(x).powi(2) + (ny - 1.0) * sample_sd(y).powi(2)) / (nx + ny - 2.0)).sqrt();
    if negligible(pooled, mean(x) - mean(y)) {
        return Err(StatsError::ZeroVariance);
    }
    Ok((mean(x) - mean(y)) / pooled)
}
