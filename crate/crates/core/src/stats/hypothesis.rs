//! Pre-registered paired hypothesis tests over per-claim metric tables.
//!
//! ```toml
//! alpha = 0.05
//! resamples = 5000
//!
//! [[hypotheses]]
//! id = "H1"
//! family = "primary"
//! description = "debate lowers supported faithfulness"
//! metric = "sfs"
//! condition_a = "C13"
//! condition_b = "C1"
//! ```
//!
//! Each hypothesis pairs the two conditions on shared claim ids, runs the
//! two-sided Wilcoxon signed-rank test with paired Cohen's d (a minus b) and a
//! bootstrap interval on d, then Holm step-down is applied per family.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{holm_bonferroni_family, paired_comparison, PairedSamples, Result, StatsError};
use crate::rng::{derive_seed, hash_str};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HypothesisSpec {
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_resamples")]
    pub resamples: usize,
    /// Overrides the per-family test count used by Holm.
    #[serde(default)]
    pub family_size: Option<usize>,
    #[serde(default)]
    pub hypotheses: Vec<Hypothesis>,
}

fn default_alpha() -> f64 {
    0.05
}

fn default_resamples() -> usize {
    super::DEFAULT_RESAMPLES
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hypothesis {
    pub id: String,
    #[serde(default = "default_family")]
    pub family: String,
    #[serde(default)]
    pub description: String,
    pub metric: String,
    pub condition_a: String,
    pub condition_b: String,
}

fn default_family() -> String {
    "primary".into()
}

impl HypothesisSpec {
    pub fn from_toml(src: &str) -> Result<Self> {
        toml::from_str(src).map_err(|e| StatsError::InvalidArgument(format!("hypothesis spec: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisRow {
    pub id: String,
    pub family: String,
    pub metric: String,
    pub condition_a: String,
    pub condition_b: String,
    pub n: usize,
    pub statistic: f64,
    pub p_value: f64,
    pub d: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub holm_threshold: f64,
    pub reject: bool,
}

/// `values(condition, metric)` returns the per-claim values of one condition.
pub fn evaluate<F>(spec: &HypothesisSpec, seed: u64, values: F) -> Result<Vec<HypothesisRow>>
where
    F: Fn(&str, &str) -> Option<BTreeMap<String, f64>>,
{
    let mut rows = Vec::with_capacity(spec.hypotheses.len());
    for h in &spec.hypotheses {
        let missing = |c: &str| {
            StatsError::InvalidArgument(format!("hypothesis {}: no {} values for condition {c}", h.id, h.metric))
        };
        let a = values(&h.condition_a, &h.metric).ok_or_else(|| missing(&h.condition_a))?;
        let b = values(&h.condition_b, &h.metric).ok_or_else(|| missing(&h.condition_b))?;
        let (mut ids, mut x, mut y) = (Vec::new(), Vec::new(), Vec::new());
        for (id, va) in &a {
            if let Some(vb) = b.get(id) {
                ids.push(id.clone());
                x.push(*va);
                y.push(*vb);
            }
        }
        if ids.is_empty() {
            return Err(StatsError::InsufficientData(format!(
                "hypothesis {}: conditions share no claim ids",
                h.id
            )));
        }
        let samples = PairedSamples::with_ids(ids, x, y)?;
        let r = paired_comparison(&samples, spec.resamples, derive_seed(seed, &[hash_str(&h.id)]))?;
        rows.push(HypothesisRow {
            id: h.id.clone(),
            family: h.family.clone(),
            metric: h.metric.clone(),
            condition_a: h.condition_a.clone(),
            condition_b: h.condition_b.clone(),
            n: samples.len(),
            statistic: r.statistic,
            p_value: r.p_value,
            d: r.effect_size,
            ci_low: r.ci_low,
            ci_high: r.ci_high,
            holm_threshold: 0.0,
            reject: false,
        });
    }

    let mut families: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, h) in spec.hypotheses.iter().enumerate() {
        families.entry(h.family.as_str()).or_default().push(i);
    }
    for members in families.values() {
        let p: Vec<f64> = members.iter().map(|&i| rows[i].p_value).collect();
        let m = spec.family_size.unwrap_or(p.len()).max(p.len());
        let holm = holm_bonferroni_family(&p, spec.alpha, m)?;
        for (k, &i) in members.iter().enumerate() {
            rows[i].holm_threshold = holm.thresholds[k];
            rows[i].reject = holm.reject[k];
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shifted_condition_is_rejected() {
        let spec = HypothesisSpec::from_toml(
            r#"
resamples = 300
[[hypotheses]]
id = "H1"
metric = "sfs"
condition_a = "B"
condition_b = "A"
[[hypotheses]]
id = "H2"
metric = "sfs"
condition_a = "A"
condition_b = "A2"
"#,
        )
        .unwrap();
        let table = |c: &str, _m: &str| -> Option<BTreeMap<String, f64>> {
            let shift = match c {
                "A" => 0.0,
                "A2" => 0.0,
                "B" => -0.3,
                _ => return None,
            };
            Some(
                (0..40)
                    .map(|i| {
                        let jitter = if c != "A" {
                            ((i * 37) % 11) as f64 * 1e-3 - 5e-3
                        } else {
                            0.0
                        };
                        (format!("c{i:02}"), 0.5 + ((i * 13) % 7) as f64 * 0.05 + shift + jitter)
                    })
                    .collect(),
            )
        };
        let rows = evaluate(&spec, 1, table).unwrap();
        assert!(rows[0].reject);
        assert!(rows[0].d.unwrap() < 0.0);
        assert!(!rows[1].reject);
        assert_eq!(rows[0].holm_threshold, 0.025);

        let bad = HypothesisSpec {
            hypotheses: vec![Hypothesis {
                id: "H9".into(),
                family: "x".into(),
                description: String::new(),
                metric: "sfs".into(),
                condition_a: "Z".into(),
                condition_b: "A".into(),
            }],
            ..spec
        };
        assert!(evaluate(&bad, 1, table).is_err());
    }
}
