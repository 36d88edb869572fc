use serde::{Deserialize, Serialize};

use super::backend::{BackendIdentity, CallRecord};
use super::config::ProtocolConfig;
use super::egsr::EgsrTrace;
use super::regime::RegimeLabel;
use super::ProtocolError;
use crate::faithfulness::{Passage, RoundOutput, Verdict};

/// Bumped whenever the on-disk layout of a run changes.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureReason {
    BackendUnavailable,
    BudgetExhausted,
    Transport,
    MalformedResponse,
    RetrievalEmpty,
    Internal,
}

impl FailureReason {
    pub fn of(e: &ProtocolError) -> Self {
        match e {
            ProtocolError::BackendUnavailable(_) => FailureReason::BackendUnavailable,
            ProtocolError::BudgetExhausted => FailureReason::BudgetExhausted,
            ProtocolError::Transport(_) => FailureReason::Transport,
            ProtocolError::MalformedResponse(_) => FailureReason::MalformedResponse,
            ProtocolError::RetrievalEmpty(_) => FailureReason::RetrievalEmpty,
            ProtocolError::Config(_) => FailureReason::Internal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialFailure {
    /// Position of the claim in the dataset.
    pub index: usize,
    pub claim_id: String,
    pub reason: FailureReason,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool_version: String,
    pub condition: ProtocolConfig,
    pub regime: RegimeLabel,
    pub seed: u64,
    pub backend: BackendIdentity,
    pub dataset: String,
    pub dataset_size: usize,
    pub trial_count: usize,
    pub failures: Vec<TrialFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub index: usize,
    pub claim_id: String,
    pub claim_text: String,
    pub gold_label: Verdict,
    /// Agent outputs per round, round 0 first.
    pub rounds: Vec<Vec<RoundOutput>>,
    pub final_text: String,
    pub final_verdict: Verdict,
    pub final_confidence: f64,
    pub correct: bool,
    /// Passages injected into the agents' view on top of the claim's evidence.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub injected_passages: Vec<Passage>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub egsr: Option<EgsrTrace>,
    pub calls: Vec<CallRecord>,
    pub tokens_in: u64,
    pub tokens_out: u64,
    /// Wall-clock time; absent for deterministic backends so records replay
    /// byte for byte.
    pub wall_ms: Option<u64>,
}

impl TrialRecord {
    /// Every round output, in round order.
    pub fn round_outputs(&self) -> Vec<RoundOutput> {
        self.rounds.iter().flatten().cloned().collect()
    }

    pub fn total_tokens(&self) -> u64 {
        self.tokens_in + self.tokens_out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunArtifact {
    pub manifest: RunManifest,
    pub trials: Vec<TrialRecord>,
}

impl RunArtifact {
    pub fn condition_id(&self) -> &str {
        &self.manifest.condition.condition_id
    }

    pub fn accuracy(&self) -> f64 {
        if self.trials.is_empty() {
            return 0.0;
        }
        self.trials.iter().filter(|t| t.correct).count() as f64 / self.trials.len() as f64
    }
}
