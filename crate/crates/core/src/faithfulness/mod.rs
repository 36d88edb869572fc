//! Supported-faithfulness scoring.
//!
//! A reasoning trace is decomposed into atomic claims, each claim is scored
//! against every evidence passage as `similarity x entailment-gate`, and the
//! trace score is the uniform mean of the per-claim maxima. Diagnostics (EUR,
//! RCVA, EMC), decomposer agreement and Debate-Trap classification live here
//! too.
//!
//! RCVA and EMC have no published formula; the definitions used are recorded
//! in every [`SfsReport`] under `assumed_definitions`.

mod agreement;
mod backend;
mod decompose;
mod score;
mod trap;

pub use agreement::{emc, soft_jaccard, SOFT_JACCARD_THRESHOLD};
pub use backend::{EntailmentBackend, EntailmentJudgment, LexicalEntailment, LexicalSimilarity, SimilarityBackend};
pub use decompose::{decomposer_by_name, ClauseDecomposer, Decomposer, SentenceDecomposer};
pub use score::{
    eur, rcva, score_batch, write_batch_csv, BatchItem, BatchRow, EmptyPolicy, SfsEngine, SfsReport, DEFAULT_TAU,
};
pub use trap::{classify_tier, detect_trap, Tier, TierInput, TierThresholds};

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FaithError {
    #[error("no verifiable claim in trace")]
    EmptyDecomposition,
    #[error("empty evidence set")]
    EmptyEvidence,
    #[error("duplicate passage id {0}")]
    DuplicatePassage(String),
    #[error("at least two rounds are needed, got {0}")]
    InsufficientRounds(usize),
    #[error("baseline faithfulness must be positive")]
    DegenerateBaseline,
    #[error("unknown decomposer {0}")]
    UnknownDecomposer(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, FaithError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "SUPPORTS")]
    Supports,
    #[serde(rename = "REFUTES")]
    Refutes,
    #[serde(rename = "NOT-ENOUGH-INFO")]
    NotEnoughInfo,
}

impl Verdict {
    pub const ALL: [Verdict; 3] = [Verdict::Supports, Verdict::Refutes, Verdict::NotEnoughInfo];

    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Supports => "SUPPORTS",
            Verdict::Refutes => "REFUTES",
            Verdict::NotEnoughInfo => "NOT-ENOUGH-INFO",
        }
    }

    pub fn index(&self) -> usize {
        match self {
            Verdict::Supports => 0,
            Verdict::Refutes => 1,
            Verdict::NotEnoughInfo => 2,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Verdict {
    type Err = FaithError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().replace('_', "-").as_str() {
            "SUPPORTS" | "SUPPORT" => Ok(Verdict::Supports),
            "REFUTES" | "REFUTE" => Ok(Verdict::Refutes),
            "NOT-ENOUGH-INFO" | "NEI" => Ok(Verdict::NotEnoughInfo),
            other => Err(FaithError::InvalidArgument(format!("unknown verdict {other}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Passage {
    pub passage_id: String,
    pub text: String,
}

impl Passage {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            passage_id: id.into(),
            text: text.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceSet {
    pub claim_id: String,
    pub passages: Vec<Passage>,
}

impl EvidenceSet {
    pub fn new(claim_id: impl Into<String>, passages: Vec<Passage>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for p in &passages {
            if !seen.insert(p.passage_id.as_str()) {
                return Err(FaithError::DuplicatePassage(p.passage_id.clone()));
            }
        }
        Ok(Self {
            claim_id: claim_id.into(),
            passages,
        })
    }

    pub fn is_empty(&self) -> bool {
        self.passages.is_empty()
    }

    pub fn len(&self) -> usize {
        self.passages.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtomicClaim {
    pub text: String,
    /// Byte range into the decomposed trace.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_span: Option<(usize, usize)>,
}

impl AtomicClaim {
    pub fn new(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            source_span: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClaimScore {
    pub claim: AtomicClaim,
    pub best_passage_id: String,
    pub similarity: f64,
    pub gate: u8,
    pub support_mass: f64,
    /// Stance of a gate-passing claim toward the claim under test.
    pub polarity: Option<Verdict>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundOutput {
    pub round_index: usize,
    pub agent_id: String,
    pub text: String,
    pub verdict: Option<Verdict>,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FaithfulnessTrajectory {
    pub condition_id: String,
    pub per_round_sfs: Vec<f64>,
}

impl FaithfulnessTrajectory {
    pub fn is_non_decreasing(&self, tol: f64) -> bool {
        self.per_round_sfs.windows(2).all(|w| w[1] >= w[0] - tol)
    }
}
