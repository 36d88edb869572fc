use statrs::function::erf::erfc;

use super::{average_ranks, PairedSamples, Result, TestResult};

/// Largest non-zero sample size tested by exact enumeration.
pub const fn wilcoxon_exact_cutoff() -> usize {
    12
}

/// Two-sided Wilcoxon signed-rank test. Zero differences are dropped; with
/// nothing left the p-value is 1.
///
/// `statistic` is the positive-rank sum `W+`. Up to twelve non-zero pairs the
/// null distribution of `W+` over all sign assignments is enumerated exactly
/// (tied average ranks included); above that a tie-corrected normal
/// approximation with continuity correction is used.
pub fn wilcoxon_signed_rank(s: &PairedSamples) -> Result<TestResult> {
    let diffs: Vec<f64> = s.differences().into_iter().filter(|d| *d != 0.0).collect();
    let n = diffs.len();
    if n == 0 {
        return Ok(TestResult {
            method: "wilcoxon-signed-rank".into(),
            statistic: 0.0,
            p_value: 1.0,
            effect_size: None,
            ci_low: None,
            ci_high: None,
            n: 0,
        });
    }
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = average_ranks(&abs);
    let w_plus: f64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();

    let (p, method) = if n <= wilcoxon_exact_cutoff() {
        (exact_p(&ranks, w_plus), "wilcoxon-signed-rank-exact")
    } else {
        (normal_p(&ranks, w_plus), "wilcoxon-signed-rank-normal")
    };
    Ok(TestResult {
        method: method.into(),
        statistic: w_plus,
        p_value: p.clamp(0.0, 1.0),
        effect_size: None,
        ci_low: None,
        ci_high: None,
        n,
    })
}

/// Doubled ranks are integers even with average ties, so the null
/// distribution of `2 W+` is a subset-sum count.
fn exact_p(ranks: &[f64], w_plus: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut counts = vec![0u64; total + 1];
    counts[0] = 1;
    for &r in &doubled {
        for s in (r..=total).rev() {
            counts[s] += counts[s - r];
        }
    }
    let centre = total as f64 / 2.0;
    let observed = (2.0 * w_plus - centre).abs();
    let extreme: u64 = counts
        .iter()
        .enumerate()
        .filter(|(s, _)| (*s as f64 - centre).abs() >= observed - 1e-9)
        .map(|(_, c)| c)
        .sum();
    extreme as f64 / 2f64.powi(ranks.len() as i32)
}

fn normal_p(ranks: &[f64], w_plus: f64) -> f64 {
    let n = ranks.len() as f64;
    let mu = n * (n + 1.0) / 4.0;
    let mut sorted = ranks.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        tie_term += t * t * t - t;
        i = j;
    }
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    if var <= 0.0 {
        return 1.0;
    }
    let dev = ((w_plus - mu).abs() - 0.5).max(0.0);
    let z = dev / var.sqrt();
    erfc(z / std::f64::consts::SQRT_2)
}
