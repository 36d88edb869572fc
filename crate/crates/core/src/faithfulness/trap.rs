use serde::{Deserialize, Serialize};

use super::{FaithError, Result};

/// Accuracy held within `eps` while faithfulness fell by more than `delta`.
pub fn detect_trap(acc_t1: f64, sfs_t1: f64, acc_t2: f64, sfs_t2: f64, eps: f64, delta: f64) -> bool {
    acc_t2 >= acc_t1 - eps && sfs_t2 < sfs_t1 - delta
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tier {
    None,
    Degradation,
    TrapProper,
    Elimination,
}

impl Tier {
    pub fn as_str(&self) -> &'static str {
        match self {
            Tier::None => "none",
            Tier::Degradation => "degradation",
            Tier::TrapProper => "trap-proper",
            Tier::Elimination => "elimination",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TierInput {
    pub acc: f64,
    pub sfs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TierThresholds {
    /// SFS retention below this is elimination.
    pub elimination_sfs: f64,
    /// Accuracy retention at or above this, with degraded SFS, is trap-proper.
    pub trap_accuracy: f64,
    /// SFS retention below this is degraded.
    pub degraded_sfs: f64,
}

impl Default for TierThresholds {
    fn default() -> Self {
        Self {
            elimination_sfs: 0.10,
            trap_accuracy: 0.85,
            degraded_sfs: 0.70,
        }
    }
}

/// Retention-ratio tiering of a condition against the baseline.
pub fn classify_tier(base: TierInput, cond: TierInput, th: TierThresholds) -> Result<Tier> {
    if base.sfs.is_nan() || base.sfs <= 0.0 {
        return Err(FaithError::DegenerateBaseline);
    }
    let sfs_ret = cond.sfs / base.sfs;
    let acc_ret = if base.acc > 0.0 { cond.acc / base.acc } else { 0.0 };
    Ok(if sfs_ret < th.elimination_sfs {
        Tier::Elimination
    } else if sfs_ret < th.degraded_sfs && acc_ret >= th.trap_accuracy {
        Tier::TrapProper
    } else if sfs_ret < th.degraded_sfs {
        Tier::Degradation
    } else {
        Tier::None
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const C1: TierInput = TierInput { acc: 0.588, sfs: 0.349 };

    #[test]
    fn published_condition_pairs() {
        assert!(detect_trap(0.588, 0.349, 0.517, 0.200, 0.08, 0.10));
        assert!(detect_trap(0.588, 0.349, 0.536, 0.006, 0.08, 0.10));
        assert!(!detect_trap(0.588, 0.349, 0.588, 0.349, 0.08, 0.10));

        let th = TierThresholds::default();
        let c15 = TierInput { acc: 0.536, sfs: 0.006 };
        let c13 = TierInput { acc: 0.517, sfs: 0.200 };
        let c8 = TierInput { acc: 0.588, sfs: 0.343 };
        assert_eq!(classify_tier(C1, c15, th).unwrap(), Tier::Elimination);
        assert_eq!(classify_tier(C1, c13, th).unwrap(), Tier::TrapProper);
        assert_eq!(classify_tier(C1, c8, th).unwrap(), Tier::None);
        let low_acc = TierInput { acc: 0.3, sfs: 0.2 };
        assert_eq!(classify_tier(C1, low_acc, th).unwrap(), Tier::Degradation);
        assert_eq!(
            classify_tier(TierInput { acc: 0.5, sfs: 0.0 }, c8, th),
            Err(FaithError::DegenerateBaseline)
        );
    }
}
