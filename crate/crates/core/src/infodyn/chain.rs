use std::io::Write;

use serde::Serialize;

use super::{
    apply_channel, augment_open, mutual_information, vote_collapse, Channel, DiscreteJoint, EvidenceAugmentChannel,
    InfoError, Result, VoteMap,
};

#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    Closed(Channel),
    Open(EvidenceAugmentChannel),
    Vote(VoteMap),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepKind {
    Closed,
    Open,
    Vote,
}

impl Step {
    pub fn kind(&self) -> StepKind {
        match self {
            Step::Closed(_) => StepKind::Closed,
            Step::Open(_) => StepKind::Open,
            Step::Vote(_) => StepKind::Vote,
        }
    }

    pub fn apply(&self, j: &DiscreteJoint) -> Result<DiscreteJoint> {
        match self {
            Step::Closed(c) => apply_channel(j, c),
            Step::Open(a) => augment_open(j, a),
            Step::Vote(v) => vote_collapse(j, v),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Closed,
    Open,
    VoteCollapsed,
}

impl Regime {
    /// A vote anywhere dominates; otherwise any open step makes the chain open.
    pub fn from_steps(kinds: &[StepKind]) -> Self {
        if kinds.contains(&StepKind::Vote) {
            Regime::VoteCollapsed
        } else if kinds.contains(&StepKind::Open) {
            Regime::Open
        } else {
            Regime::Closed
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Closed => "closed",
            Regime::Open => "open",
            Regime::VoteCollapsed => "vote-collapsed",
        }
    }
}

/// `I(E; O^t)` for `t = 0..=T`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainTrajectory {
    pub mi_per_round: Vec<f64>,
    pub regime: Regime,
    pub rounds: usize,
    pub step_kinds: Vec<StepKind>,
    pub evidence_entropy: f64,
}

impl ChainTrajectory {
    /// Indices `t` where the step `t -> t+1` moved MI against its kind's
    /// monotone direction by more than `tol`.
    pub fn monotonicity_violations(&self, tol: f64) -> Vec<usize> {
        self.step_kinds
            .iter()
            .enumerate()
            .filter(|(t, kind)| {
                let (a, b) = (self.mi_per_round[*t], self.mi_per_round[t + 1]);
                match kind {
                    StepKind::Closed | StepKind::Vote => b > a + tol,
                    StepKind::Open => b < a - tol,
                }
            })
            .map(|(t, _)| t)
            .collect()
    }

    /// Rows `round,mi_bits,regime`.
    pub fn write_csv<W: Write>(&self, mut w: W, with_header: bool) -> std::io::Result<()> {
        if with_header {
            writeln!(w, "round,mi_bits,regime")?;
        }
        for (t, mi) in self.mi_per_round.iter().enumerate() {
            writeln!(w, "{t},{mi:.12},{}", self.regime.as_str())?;
        }
        Ok(())
    }
}

pub fn run_chain(init: &DiscreteJoint, steps: &[Step]) -> Result<ChainTrajectory> {
    let mut mi_per_round = Vec::with_capacity(steps.len() + 1);
    mi_per_round.push(mutual_information(init));
    let mut cur = init.clone();
    for (t, step) in steps.iter().enumerate() {
        cur = step.apply(&cur).map_err(|e| match e {
            InfoError::ShapeMismatch(m) => InfoError::ShapeMismatch(format!("step {t}: {m}")),
            other => other,
        })?;
        mi_per_round.push(mutual_information(&cur));
    }
    let step_kinds: Vec<StepKind> = steps.iter().map(Step::kind).collect();
    Ok(ChainTrajectory {
        mi_per_round,
        regime: Regime::from_steps(&step_kinds),
        rounds: steps.len(),
        step_kinds,
        evidence_entropy: init.evidence_entropy(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::infodyn::ProbVector;
    use approx::assert_abs_diff_eq;

    #[test]
    fn identity_chain_is_constant() {
        let j = DiscreteJoint::new(vec![vec![0.4, 0.1], vec![0.1, 0.4]]).unwrap();
        let steps = vec![Step::Closed(Channel::identity(2).unwrap()); 4];
        let tr = run_chain(&j, &steps).unwrap();
        assert_eq!(tr.mi_per_round.len(), 5);
        assert!(tr.mi_per_round.iter().all(|&m| m == tr.mi_per_round[0]));
        assert_eq!(tr.regime, Regime::Closed);
    }

    #[test]
    fn closed_then_vote_matches_stepwise_oracle() {
        let j = DiscreteJoint::diagonal_uniform(4).unwrap();
        let c1 = Channel::new(vec![
            vec![0.9, 0.1, 0.0, 0.0],
            vec![0.1, 0.8, 0.1, 0.0],
            vec![0.0, 0.1, 0.8, 0.1],
            vec![0.0, 0.0, 0.1, 0.9],
        ])
        .unwrap();
        let vote = VoteMap::new(vec![0, 0, 1, 1], 2).unwrap();
        let steps = vec![
            Step::Closed(c1.clone()),
            Step::Closed(c1.clone()),
            Step::Closed(c1.clone()),
            Step::Vote(vote.clone()),
        ];
        let tr = run_chain(&j, &steps).unwrap();
        let mut cur = j.clone();
        let mut oracle = vec![mutual_information(&cur)];
        for _ in 0..3 {
            cur = apply_channel(&cur, &c1).unwrap();
            oracle.push(mutual_information(&cur));
        }
        cur = vote_collapse(&cur, &vote).unwrap();
        oracle.push(mutual_information(&cur));
        assert_eq!(tr.mi_per_round, oracle);
        assert!(tr.mi_per_round.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        assert!(*tr.mi_per_round.last().unwrap() <= 1.0 + 1e-12);
        assert_eq!(tr.regime, Regime::VoteCollapsed);
        assert!(tr.monotonicity_violations(1e-9).is_empty());
    }

    #[test]
    fn alternating_open_closed() {
        let j = DiscreteJoint::independent(&ProbVector::uniform(2).unwrap(), &ProbVector::uniform(2).unwrap());
        let copy = EvidenceAugmentChannel::noisy_evidence_copy(2, 2, 0.1).unwrap();
        let squash = Channel::new(vec![vec![0.8, 0.2], vec![0.2, 0.8], vec![0.3, 0.7], vec![0.7, 0.3]]).unwrap();
        let steps = vec![
            Step::Open(copy),
            Step::Closed(squash),
            Step::Open(EvidenceAugmentChannel::evidence_copy(2, 2).unwrap()),
        ];
        let tr = run_chain(&j, &steps).unwrap();
        assert_eq!(tr.regime, Regime::Open);
        assert!(tr.mi_per_round[1] >= tr.mi_per_round[0]);
        assert!(tr.mi_per_round[2] <= tr.mi_per_round[1] + 1e-12);
        assert_abs_diff_eq!(tr.mi_per_round[3], 1.0, epsilon = 1e-12);
        assert!(tr.monotonicity_violations(1e-9).is_empty());

        let mut buf = Vec::new();
        tr.write_csv(&mut buf, true).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("round,mi_bits,regime\n0,"));
        assert_eq!(s.lines().count(), 5);
    }

    #[test]
    fn incompatible_steps_are_shape_errors() {
        let j = DiscreteJoint::diagonal_uniform(2).unwrap();
        let steps = vec![
            Step::Closed(Channel::identity(2).unwrap()),
            Step::Closed(Channel::identity(3).unwrap()),
        ];
        assert!(matches!(run_chain(&j, &steps), Err(InfoError::ShapeMismatch(m)) if m.starts_with("step 1")));
    }
}
