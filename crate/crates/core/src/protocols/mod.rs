//! Condition registry and protocol runners.
//!
//! A [`ProtocolConfig`] describes one condition: agent count, round limit,
//! aggregation, evidence policy and role structure. The runner executes it
//! over a claim corpus with one [`AgentBackend`] shared by all agents and
//! records every call, round and failure into a [`RunArtifact`].

mod artifact;
mod backend;
mod config;
pub mod egsr;
pub mod http;
pub mod mock;
mod regime;
mod runner;

pub use artifact::{FailureReason, RunArtifact, RunManifest, TrialFailure, TrialRecord, SCHEMA_VERSION};
pub use backend::{
    call, count_tokens, parse_verdict, prompt_text, render_prompt, verdict_line, AgentBackend, AgentRequest,
    AgentResponse, BackendIdentity, BackendKind, CallRecord, ChatMessage, Role,
};
pub use config::{
    builtin_condition, builtin_conditions, Aggregation, ContextWindow, ConvergenceRule, EgsrConfig, EvidencePolicy,
    ProtocolConfig, RoleStructure,
};
pub use egsr::{egsr_ess, egsr_run, hfsv_answer, retrieve_topk, EgsrTask, EgsrTrace, QuestionType};
pub use http::{HttpChatBackend, HttpChatConfig};
pub use mock::{MockBackend, MockMode, MockProfile};
pub use regime::{classify_protocol, ClosureCondition, ProtocolRegime, RegimeLabel};
pub use runner::{
    adversarial_passages, aggregate_votes, mad_step, run_condition, run_trial, visible_evidence, RunOptions,
    TrialContext,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("request budget exhausted")]
    BudgetExhausted,
    #[error("transport error: {0}")]
    Transport(String),
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("no passage to retrieve for claim {0}")]
    RetrievalEmpty(String),
}

pub type Result<T> = std::result::Result<T, ProtocolError>;
