//! Seeded random instances: Dirichlet(1, ..., 1) rows, deterministic maps and
//! vote maps.

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use super::{Channel, DiscreteJoint, EvidenceAugmentChannel, VoteMap};

/// A uniform draw from the probability simplex of dimension `n`.
pub fn dirichlet_row<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    assert!(n >= 1, "dirichlet over empty alphabet");
    let mut w: Vec<f64> = (0..n)
        .map(|_| {
            let v: f64 = Exp1.sample(rng);
            v.max(f64::MIN_POSITIVE)
        })
        .collect();
    normalize(&mut w);
    w
}

/// Rescale in place to sum to 1, then fold the rounding residue into the
/// largest entry so the row sums to 1 well inside the validation tolerance.
pub(crate) fn normalize(w: &mut [f64]) {
    let total: f64 = w.iter().sum();
    for v in w.iter_mut() {
        *v /= total;
    }
    let residue = 1.0 - w.iter().sum::<f64>();
    if let Some(max) = w.iter_mut().max_by(|a, b| a.partial_cmp(b).expect("finite weights")) {
        *max += residue;
    }
}

pub fn random_joint<R: Rng + ?Sized>(rng: &mut R, evidence: usize, state: usize) -> DiscreteJoint {
    DiscreteJoint::from_flat(evidence, state, dirichlet_row(rng, evidence * state))
        .expect("dirichlet draw is a valid joint")
}

/// Random joint whose evidence marginal is exactly uniform, so `H(E) =
/// log2(evidence)`.
pub fn random_joint_with_uniform_evidence<R: Rng + ?Sized>(
    rng: &mut R,
    evidence: usize,
    state: usize,
) -> DiscreteJoint {
    let pe = 1.0 / evidence as f64;
    let table: Vec<f64> = (0..evidence)
        .flat_map(|_| dirichlet_row(rng, state))
        .map(|p| p * pe)
        .collect();
    let mut table = table;
    normalize(&mut table);
    DiscreteJoint::from_flat(evidence, state, table).expect("valid joint")
}

pub fn random_channel<R: Rng + ?Sized>(rng: &mut R, inputs: usize, outputs: usize) -> Channel {
    Channel::new((0..inputs).map(|_| dirichlet_row(rng, outputs)).collect()).expect("dirichlet rows form a channel")
}

/// Deterministic map with every input sent to a uniformly drawn output.
pub fn random_deterministic_channel<R: Rng + ?Sized>(rng: &mut R, inputs: usize, outputs: usize) -> Channel {
    let map: Vec<usize> = (0..inputs).map(|_| rng.random_range(0..outputs)).collect();
    Channel::deterministic(&map, outputs).expect("in-range map")
}

pub fn random_augment<R: Rng + ?Sized>(
    rng: &mut R,
    evidence: usize,
    state: usize,
    aux: usize,
) -> EvidenceAugmentChannel {
    EvidenceAugmentChannel::from_fn(evidence, state, |_, _| dirichlet_row(rng, aux))
        .expect("dirichlet rows form an augment channel")
}

/// Random vote map; surjective whenever `states >= verdict_arity`.
pub fn random_vote_map<R: Rng + ?Sized>(rng: &mut R, states: usize, verdict_arity: usize) -> VoteMap {
    let mut assignment: Vec<usize> = (0..states).map(|_| rng.random_range(0..verdict_arity)).collect();
    if states >= verdict_arity {
        // Pin K distinct states to distinct verdicts.
        let mut idx: Vec<usize> = (0..states).collect();
        for i in 0..verdict_arity {
            let j = rng.random_range(i..states);
            idx.swap(i, j);
            assignment[idx[i]] = i;
        }
    }
    VoteMap::new(assignment, verdict_arity).expect("in-range vote map")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from;

    #[test]
    fn generated_objects_validate() {
        let mut rng = rng_from(3);
        for n in 1..10 {
            let row = dirichlet_row(&mut rng, n);
            assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            assert!(row.iter().all(|&p| p >= 0.0));
        }
        let j = random_joint_with_uniform_evidence(&mut rng, 8, 5);
        assert!((j.evidence_entropy() - 3.0).abs() < 1e-9);
        let v = random_vote_map(&mut rng, 6, 3);
        let mut seen = [false; 3];
        for &a in v.assignment() {
            seen[a] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }
}
