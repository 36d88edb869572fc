//! Analysis statistics: paired tests, effect sizes, resampling intervals,
//! family-wise error control, correlation and agreement coefficients.

mod bootstrap;
mod correlation;
mod effect;
pub mod hypothesis;
mod kappa;
mod multiple;
mod wilcoxon;

pub use bootstrap::{bootstrap_ci, bootstrap_ci_indexed, percentile, DEFAULT_RESAMPLES};
pub use correlation::{average_ranks, pearson, spearman};
pub use effect::{cohens_d_groups, cohens_d_paired, mean, sample_sd};
pub use kappa::{
    cohens_kappa, fleiss_kappa, fleiss_kappa_from_aggregates, kappa_matrix, FleissResult, KappaMatrix, RatingMatrix,
    Scale, Weighting,
};
pub use multiple::{holm_bonferroni, holm_bonferroni_family, HolmOutcome};
pub use wilcoxon::{wilcoxon_exact_cutoff, wilcoxon_signed_rank};

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("zero variance")]
    ZeroVariance,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("chance agreement is 1; kappa undefined")]
    DegenerateAgreementBase,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, StatsError>;

/// Aligned pairs `(x_i, y_i)`, optionally keyed by id.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairedSamples {
    pub ids: Vec<String>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl PairedSamples {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let ids = (0..x.len()).map(|i| i.to_string()).collect();
        Self::with_ids(ids, x, y)
    }

    pub fn with_ids(ids: Vec<String>, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(StatsError::LengthMismatch(x.len(), y.len()));
        }
        if ids.len() != x.len() {
            return Err(StatsError::LengthMismatch(ids.len(), x.len()));
        }
        if x.is_empty() {
            return Err(StatsError::InsufficientData("no pairs".into()));
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(StatsError::InvalidArgument("non-finite sample".into()));
        }
        Ok(Self { ids, x, y })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn differences(&self) -> Vec<f64> {
        self.x.iter().zip(&self.y).map(|(a, b)| a - b).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestResult {
    pub method: String,
    pub statistic: f64,
    pub p_value: f64,
    pub effect_size: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub n: usize,
}

/// Wilcoxon test, paired Cohen's d, and a percentile bootstrap interval for
/// d over resampled pairs.
pub fn paired_comparison(s: &PairedSamples, resamples: usize, seed: u64) -> Result<TestResult> {
    let mut r = wilcoxon_signed_rank(s)?;
    let d = cohens_d_paired(s).ok();
    r.effect_size = d;
    if d.is_some() && s.len() >= 2 {
        let diffs = s.differences();
        let (lo, hi) = bootstrap_ci_indexed(
            diffs.len(),
            |idx| {
                let v: Vec<f64> = idx.iter().map(|&i| diffs[i]).collect();
                let sd = sample_sd(&v);
                if sd > 0.0 {
                    mean(&v) / sd
                } else {
                    f64::NAN
                }
            },
            resamples,
            seed,
        )?;
        r.ci_low = Some(lo);
        r.ci_high = Some(hi);
    }
    r.method = "wilcoxon-signed-rank+paired-d".into();
    Ok(r)
}
