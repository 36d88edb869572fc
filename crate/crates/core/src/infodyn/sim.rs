//! Monte Carlo checks: score concentration and optional stopping.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rayon::prelude::*;
use serde::Serialize;

use super::{mutual_information, ChainSpec, InfoError, ProbVector, Result};
use crate::rng::{derive_seed, rng_from};

/// `min(1, 2 exp(-2 n eps^2))`.
pub fn hoeffding_bound(n: usize, eps: f64) -> Result<f64> {
    if n == 0 {
        return Err(InfoError::InvalidArgument("claim count must be at least 1".into()));
    }
    if !eps.is_finite() || eps <= 0.0 {
        return Err(InfoError::InvalidArgument(format!(
            "deviation must be positive, got {eps}"
        )));
    }
    Ok((2.0 * (-2.0 * n as f64 * eps * eps).exp()).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Concentration {
    pub empirical_exceedance: f64,
    pub bound: f64,
    /// Binomial standard error of the exceedance rate at the bound.
    pub mc_sigma: f64,
    pub expected_score: f64,
    pub trials: usize,
}

impl Concentration {
    pub fn within_bound(&self) -> bool {
        self.empirical_exceedance <= self.bound + 3.0 * self.mc_sigma
    }
}

/// Draw `n` per-claim scores from `score_dist` over the evenly spaced grid
/// `{0, 1/(m-1), ..., 1}` and count how often the sample mean strays more
/// than `eps` from its expectation.
pub fn simulate_sfs_concentration(
    n: usize,
    eps: f64,
    trials: usize,
    score_dist: &ProbVector,
    seed: u64,
) -> Result<Concentration> {
    let bound = hoeffding_bound(n, eps)?;
    if trials == 0 {
        return Err(InfoError::InvalidArgument("trials must be at least 1".into()));
    }
    let m = score_dist.len();
    let grid: Vec<f64> = if m == 1 {
        vec![0.0]
    } else {
        (0..m).map(|i| i as f64 / (m - 1) as f64).collect()
    };
    let expected: f64 = grid.iter().zip(score_dist.entries()).map(|(v, p)| v * p).sum();
    let sampler =
        WeightedIndex::new(score_dist.entries()).map_err(|e| InfoError::InvalidDistribution(e.to_string()))?;

    let exceed: usize = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng_from(derive_seed(seed, &[t as u64]));
            let total: f64 = (0..n).map(|_| grid[sampler.sample(&mut rng)]).sum();
            usize::from((total / n as f64 - expected).abs() > eps)
        })
        .sum();

    Ok(Concentration {
        empirical_exceedance: exceed as f64 / trials as f64,
        bound,
        mc_sigma: (bound * (1.0 - bound) / trials as f64).sqrt(),
        expected_score: expected,
        trials,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum StoppingRule {
    FixedRounds {
        rounds: usize,
    },
    /// Stop at the first round whose MI reaches `bits`, else at the end.
    MiThreshold {
        bits: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StoppedFaithfulness {
    pub mean_stopped_f: f64,
    /// Mean initial MI across trials.
    pub f0: f64,
    /// Standard error of `mean_stopped_f`.
    pub sigma: f64,
    pub mean_stop_round: f64,
    pub trials: usize,
}

impl StoppedFaithfulness {
    pub fn holds(&self) -> bool {
        self.mean_stopped_f >= self.f0 - 3.0 * self.sigma
    }
}

/// Sample `trials` chains from an open-only spec and evaluate joint MI at the
/// stopping time.
pub fn simulate_stopped_faithfulness(
    spec: &ChainSpec,
    rule: StoppingRule,
    trials: usize,
    seed: u64,
) -> Result<StoppedFaithfulness> {
    if !spec.is_open_only() {
        return Err(InfoError::InvalidArgument(format!(
            "chain {} has non-open steps; the stopping guarantee covers open chains only",
            spec.name
        )));
    }
    if trials == 0 {
        return Err(InfoError::InvalidArgument("trials must be at least 1".into()));
    }
    if let StoppingRule::FixedRounds { rounds } = rule {
        if rounds > spec.steps.len() {
            return Err(InfoError::InvalidArgument(format!(
                "fixed stop at round {rounds} beyond chain length {}",
                spec.steps.len()
            )));
        }
    }

    let outcomes: Vec<(f64, f64, usize)> = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<(f64, f64, usize)> {
            let mut rng = rng_from(derive_seed(seed, &[t as u64]));
            let (init, steps) = spec.materialize(&mut rng)?;
            let f0 = mutual_information(&init);
            let last = match rule {
                StoppingRule::FixedRounds { rounds } => rounds,
                StoppingRule::MiThreshold { .. } => steps.len(),
            };
            let mut cur = init;
            let mut f = f0;
            let mut round = 0;
            loop {
                if let StoppingRule::MiThreshold { bits } = rule {
                    if f >= bits {
                        break;
                    }
                }
                if round == last {
                    break;
                }
                cur = steps[round].apply(&cur)?;
                f = mutual_information(&cur);
                round += 1;
            }
            Ok((f, f0, round))
        })
        .collect::<Result<_>>()?;

    let n = trials as f64;
    let mean = outcomes.iter().map(|o| o.0).sum::<f64>() / n;
    let f0 = outcomes.iter().map(|o| o.1).sum::<f64>() / n;
    let var = if trials > 1 {
        outcomes.iter().map(|o| (o.0 - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Ok(StoppedFaithfulness {
        mean_stopped_f: mean,
        f0,
        sigma: (var / n).sqrt(),
        mean_stop_round: outcomes.iter().map(|o| o.2 as f64).sum::<f64>() / n,
        trials,
    })
}
