use serde::Serialize;

use super::{Result, StatsError};

/// Holm step-down decisions, reported in input order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolmOutcome {
    pub alpha: f64,
    pub family_size: usize,
    /// Threshold each hypothesis was compared against at its sorted rank.
    pub thresholds: Vec<f64>,
    pub reject: Vec<bool>,
    /// Step-down adjusted p-values, capped at 1.
    pub adjusted: Vec<f64>,
}

pub fn holm_bonferroni(p_values: &[f64], alpha: f64) -> Result<HolmOutcome> {
    holm_bonferroni_family(p_values, alpha, p_values.len())
}

/// Holm step-down with an explicit family size `m >= p_values.len()`.
/// Sorted rank `i` (1-based) is compared with `alpha / (m - i + 1)`; the
/// procedure stops at the first non-rejection. Equal p-values keep input
/// order.
pub fn holm_bonferroni_family(p_values: &[f64], alpha: f64, family_size: usize) -> Result<HolmOutcome> {
    if p_values.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(StatsError::InvalidArgument("p-values must lie in [0, 1]".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(StatsError::InvalidArgument(format!("alpha {alpha}")));
    }
    if family_size < p_values.len() {
        return Err(StatsError::InvalidArgument(format!(
            "family size {family_size} smaller than {} tests",
            p_values.len()
        )));
    }
    let mut order: Vec<usize> = (0..p_values.len()).collect();
    order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]));

    let m = family_size;
    let mut thresholds = vec![0.0; p_values.len()];
    let mut reject = vec![false; p_values.len()];
    let mut adjusted = vec![0.0; p_values.len()];
    let mut still_rejecting = true;
    let mut running_max = 0.0f64;
    for (rank, &i) in order.iter().enumerate() {
        let remaining = (m - rank) as f64;
        thresholds[i] = alpha / remaining;
        still_rejecting &= p_values[i] <= thresholds[i];
        reject[i] = still_rejecting;
        running_max = running_max.max((p_values[i] * remaining).min(1.0));
        adjusted[i] = running_max;
    }
    Ok(HolmOutcome {
        alpha,
        family_size: m,
        thresholds,
        reject,
        adjusted,
    })
}
