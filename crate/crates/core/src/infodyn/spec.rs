//! Declarative chain specifications (TOML).
//!
//! ```toml
//! name = "noisy-reinjection"
//! seed = 11
//!
//! [init]
//! kind = "independent"
//! evidence = [0.5, 0.5]
//! state = [1.0]
//!
//! [[steps]]
//! kind = "noisy-copy-range"
//! min_flip = 0.05
//! max_flip = 0.45
//! ```
//!
//! Random step kinds are resolved against an RNG at materialization time, so
//! one spec describes a family of chains.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::random::{
    random_augment, random_channel, random_joint, random_joint_with_uniform_evidence, random_vote_map,
};
use super::{Channel, DiscreteJoint, EvidenceAugmentChannel, InfoError, ProbVector, Result, Step, VoteMap};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpec {
    pub name: String,
    #[serde(default)]
    pub seed: Option<u64>,
    pub init: InitSpec,
    #[serde(default)]
    pub steps: Vec<StepSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitSpec {
    Random {
        evidence: usize,
        state: usize,
        #[serde(default)]
        uniform_evidence: bool,
    },
    DiagonalUniform {
        n: usize,
    },
    Independent {
        evidence: Vec<f64>,
        state: Vec<f64>,
    },
    Table {
        rows: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StepSpec {
    Identity,
    Constant {
        #[serde(default = "one")]
        outputs: usize,
        #[serde(default)]
        target: usize,
    },
    RandomChannel {
        outputs: usize,
    },
    Channel {
        rows: Vec<Vec<f64>>,
    },
    EvidenceCopy,
    NoisyCopy {
        flip: f64,
    },
    /// Flip probability drawn uniformly from `[min_flip, max_flip]`.
    NoisyCopyRange {
        min_flip: f64,
        max_flip: f64,
    },
    RandomAugment {
        aux: usize,
    },
    IndependentAugment {
        dist: Vec<f64>,
    },
    Augment {
        rows: Vec<Vec<f64>>,
    },
    Vote {
        assignment: Vec<usize>,
        verdict_arity: usize,
    },
    RandomVote {
        verdict_arity: usize,
    },
}

fn one() -> usize {
    1
}

impl StepSpec {
    pub fn is_open(&self) -> bool {
        matches!(
            self,
            StepSpec::EvidenceCopy
                | StepSpec::NoisyCopy { .. }
                | StepSpec::NoisyCopyRange { .. }
                | StepSpec::RandomAugment { .. }
                | StepSpec::IndependentAugment { .. }
                | StepSpec::Augment { .. }
        )
    }
}

impl ChainSpec {
    pub fn from_toml(src: &str) -> Result<Self> {
        toml::from_str(src).map_err(|e| InfoError::InvalidArgument(format!("chain spec: {e}")))
    }

    pub fn is_open_only(&self) -> bool {
        self.steps.iter().all(StepSpec::is_open)
    }

    /// Resolve the init joint and every step against `rng`.
    pub fn materialize<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(DiscreteJoint, Vec<Step>)> {
        let init = match &self.init {
            InitSpec::Random {
                evidence,
                state,
                uniform_evidence,
            } => {
                if *evidence == 0 || *state == 0 {
                    return Err(InfoError::InvalidArgument("empty alphabet".into()));
                }
                if *uniform_evidence {
                    random_joint_with_uniform_evidence(rng, *evidence, *state)
                } else {
                    random_joint(rng, *evidence, *state)
                }
            }
            InitSpec::DiagonalUniform { n } => DiscreteJoint::diagonal_uniform(*n)?,
            InitSpec::Independent { evidence, state } => {
                DiscreteJoint::independent(&ProbVector::new(evidence.clone())?, &ProbVector::new(state.clone())?)
            }
            InitSpec::Table { rows } => DiscreteJoint::new(rows.clone())?,
        };

        let ne = init.evidence_alphabet_size();
        let mut ns = init.state_alphabet_size();
        let mut steps = Vec::with_capacity(self.steps.len());
        for spec in &self.steps {
            let step = match spec {
                StepSpec::Identity => Step::Closed(Channel::identity(ns)?),
                StepSpec::Constant { outputs, target } => Step::Closed(Channel::constant(ns, *outputs, *target)?),
                StepSpec::RandomChannel { outputs } => {
                    if *outputs == 0 {
                        return Err(InfoError::InvalidArgument("empty output alphabet".into()));
                    }
                    Step::Closed(random_channel(rng, ns, *outputs))
                }
                StepSpec::Channel { rows } => Step::Closed(Channel::new(rows.clone())?),
                StepSpec::EvidenceCopy => Step::Open(EvidenceAugmentChannel::evidence_copy(ne, ns)?),
                StepSpec::NoisyCopy { flip } => Step::Open(EvidenceAugmentChannel::noisy_evidence_copy(ne, ns, *flip)?),
                StepSpec::NoisyCopyRange { min_flip, max_flip } => {
                    if !(*min_flip >= 0.0 && min_flip <= max_flip && *max_flip <= 1.0) {
                        return Err(InfoError::InvalidArgument(format!(
                            "flip range [{min_flip}, {max_flip}]"
                        )));
                    }
                    let flip = rng.random_range(*min_flip..=*max_flip);
                    Step::Open(EvidenceAugmentChannel::noisy_evidence_copy(ne, ns, flip)?)
                }
                StepSpec::RandomAugment { aux } => {
                    if *aux == 0 {
                        return Err(InfoError::InvalidArgument("empty auxiliary alphabet".into()));
                    }
                    Step::Open(random_augment(rng, ne, ns, *aux))
                }
                StepSpec::IndependentAugment { dist } => Step::Open(EvidenceAugmentChannel::independent(
                    ne,
                    ns,
                    &ProbVector::new(dist.clone())?,
                )?),
                StepSpec::Augment { rows } => Step::Open(EvidenceAugmentChannel::new(ne, ns, rows.clone())?),
                StepSpec::Vote {
                    assignment,
                    verdict_arity,
                } => Step::Vote(VoteMap::new(assignment.clone(), *verdict_arity)?),
                StepSpec::RandomVote { verdict_arity } => {
                    if *verdict_arity < 2 {
                        return Err(InfoError::InvalidArgument(format!(
                            "vote needs at least two verdicts, got {verdict_arity}"
                        )));
                    }
                    Step::Vote(random_vote_map(rng, ns, *verdict_arity))
                }
            };
            ns = match &step {
                Step::Closed(c) => {
                    if c.inputs() != ns {
                        return Err(InfoError::ShapeMismatch(format!(
                            "channel expects {} inputs, chain state has {ns}",
                            c.inputs()
                        )));
                    }
                    c.outputs()
                }
                Step::Open(a) => ns * a.aux_alphabet_size(),
                Step::Vote(v) => v.verdict_arity(),
            };
            steps.push(step);
        }
        Ok((init, steps))
    }
}
