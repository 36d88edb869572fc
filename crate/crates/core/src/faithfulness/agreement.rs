use std::collections::BTreeMap;

use super::{AtomicClaim, FaithError, Result, RoundOutput, SimilarityBackend};

/// Match threshold for soft-Jaccard claim alignment.
pub const SOFT_JACCARD_THRESHOLD: f64 = 0.6;

/// Echo/mimicry coefficient: mean similarity between each agent's round-`t`
/// text and every peer's round-`t-1` text, over all `t >= 1`. Agents without
/// peers contribute nothing; with no peer pair at all the value is 0.
pub fn emc(outputs: &[RoundOutput], sim: &dyn SimilarityBackend) -> Result<f64> {
    let mut by_round: BTreeMap<usize, Vec<&RoundOutput>> = BTreeMap::new();
    for o in outputs {
        by_round.entry(o.round_index).or_default().push(o);
    }
    if by_round.len() < 2 {
        return Err(FaithError::InsufficientRounds(by_round.len()));
    }
    let rounds: Vec<&Vec<&RoundOutput>> = by_round.values().collect();
    let mut total = 0.0;
    let mut count = 0usize;
    for w in rounds.windows(2) {
        let (prev, cur) = (w[0], w[1]);
        for o in cur {
            let peers: Vec<&&RoundOutput> = prev.iter().filter(|p| p.agent_id != o.agent_id).collect();
            if peers.is_empty() {
                continue;
            }
            let mean = peers.iter().map(|p| sim.similarity(&o.text, &p.text)).sum::<f64>() / peers.len() as f64;
            total += mean;
            count += 1;
        }
    }
    Ok(if count == 0 {
        0.0
    } else {
        (total / count as f64).clamp(0.0, 1.0)
    })
}

/// Greedy maximum-similarity matching at `threshold`, scored as
/// `matches / (|A| + |B| - matches)`. Two empty lists agree perfectly.
pub fn soft_jaccard(a: &[AtomicClaim], b: &[AtomicClaim], sim: &dyn SimilarityBackend, threshold: f64) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, ca) in a.iter().enumerate() {
        for (j, cb) in b.iter().enumerate() {
            let s = sim.similarity(&ca.text, &cb.text);
            if s >= threshold {
                pairs.push((s, i, j));
            }
        }
    }
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let (mut used_a, mut used_b) = (vec![false; a.len()], vec![false; b.len()]);
    let mut matches = 0usize;
    for (_, i, j) in pairs {
        if !used_a[i] && !used_b[j] {
            used_a[i] = true;
            used_b[j] = true;
            matches += 1;
        }
    }
    matches as f64 / (a.len() + b.len() - matches) as f64
}
