use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::egsr::QuestionType;
use super::Result;
use crate::faithfulness::{Passage, RoundOutput, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    ScriptedMock,
    DistributionalMock,
    HttpChat,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendIdentity {
    pub name: String,
    pub kind: BackendKind,
    #[serde(default)]
    pub model: Option<String>,
    pub deterministic: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    /// Symmetric debate participant or single-shot answerer.
    Agent,
    Debater,
    Questioner,
    /// Hypothesis-free sub-question answerer.
    Answerer,
    Summarizer,
    Judge,
}

impl Role {
    pub fn as_str(&self) -> &'static str {
        match self {
            Role::Agent => "agent",
            Role::Debater => "debater",
            Role::Questioner => "questioner",
            Role::Answerer => "answerer",
            Role::Summarizer => "summarizer",
            Role::Judge => "judge",
        }
    }
}

/// Everything a backend may see for one call. Fields left empty are withheld
/// from the prompt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentRequest {
    pub role: Role,
    pub condition_id: String,
    pub claim_id: String,
    pub agent_id: String,
    pub round: usize,
    /// Per-call seed; mocks draw all randomness from it.
    pub seed: u64,
    pub claim_text: Option<String>,
    pub evidence: Vec<Passage>,
    pub history: Vec<RoundOutput>,
    pub question: Option<(QuestionType, String)>,
    /// The trace under inquiry (questioner calls only).
    pub trace: Option<String>,
    /// Questions already asked in the current iteration.
    pub prior_questions: Vec<String>,
}

impl AgentRequest {
    pub fn new(role: Role, condition_id: &str, claim_id: &str, agent_id: &str, round: usize, seed: u64) -> Self {
        Self {
            role,
            condition_id: condition_id.into(),
            claim_id: claim_id.into(),
            agent_id: agent_id.into(),
            round,
            seed,
            claim_text: None,
            evidence: Vec::new(),
            history: Vec::new(),
            question: None,
            trace: None,
            prior_questions: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

const VERDICT_INSTRUCTION: &str =
    "End with a line of the form `Verdict: SUPPORTS|REFUTES|NOT-ENOUGH-INFO (confidence 0.00-1.00)`.";

/// Chat messages for a request. Only the fields present in the request reach
/// the prompt.
pub fn render_prompt(req: &AgentRequest) -> Vec<ChatMessage> {
    let system = match req.role {
        Role::Agent | Role::Debater => {
            format!("You assess scientific claims. {VERDICT_INSTRUCTION}")
        }
        Role::Questioner => {
            "You examine a reasoning trace and ask one question that can be settled by the listed passages.".to_string()
        }
        Role::Answerer => {
            "Answer the question using only the passages given. Do not speculate beyond them.".to_string()
        }
        Role::Summarizer => format!("Summarize the discussion into one assessment. {VERDICT_INSTRUCTION}"),
        Role::Judge => format!("Judge the debate and give the better-supported assessment. {VERDICT_INSTRUCTION}"),
    };
    let mut user = String::new();
    if let Some(c) = &req.claim_text {
        user.push_str(&format!("Claim: {c}\n\n"));
    }
    if !req.evidence.is_empty() {
        user.push_str("Passages:\n");
        for p in &req.evidence {
            user.push_str(&format!("[{}] {}\n", p.passage_id, p.text));
        }
        user.push('\n');
    }
    if !req.history.is_empty() {
        user.push_str("Previous responses:\n");
        for o in &req.history {
            user.push_str(&format!(
                "--- {} (round {}) ---\n{}\n",
                o.agent_id, o.round_index, o.text
            ));
        }
        user.push('\n');
    }
    if let Some(t) = &req.trace {
        user.push_str(&format!("Reasoning under review:\n{t}\n\n"));
    }
    if !req.prior_questions.is_empty() {
        user.push_str("Already asked:\n");
        for q in &req.prior_questions {
            user.push_str(&format!("- {q}\n"));
        }
        user.push('\n');
    }
    match (&req.question, req.role) {
        (Some((qt, _)), Role::Questioner) => {
            user.push_str(&format!("Ask one {} question.\n", qt.as_str()));
        }
        (Some((qt, q)), _) => user.push_str(&format!("Question ({}): {q}\n", qt.as_str())),
        (None, _) => {}
    }
    vec![
        ChatMessage {
            role: "system".into(),
            content: system,
        },
        ChatMessage {
            role: "user".into(),
            content: user.trim_end().to_string(),
        },
    ]
}

pub fn prompt_text(messages: &[ChatMessage]) -> String {
    messages
        .iter()
        .map(|m| format!("<{}>\n{}", m.role, m.content))
        .collect::<Vec<_>>()
        .join("\n")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentResponse {
    pub text: String,
    pub tokens_in: u64,
    pub tokens_out: u64,
    /// Transport attempts, 1 for mocks.
    pub attempts: u32,
}

/// One backend call as stored in the run artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallRecord {
    pub role: Role,
    pub agent_id: String,
    pub round: usize,
    pub prompt: String,
    pub response: String,
    pub tokens_in: u64,
    pub tokens_out: u64,
    pub attempts: u32,
}

/// A language-model backend shared by every agent of a run.
pub trait AgentBackend: Send + Sync {
    fn identity(&self) -> BackendIdentity;

    /// Run-level reachability check.
    fn available(&self) -> Result<()> {
        Ok(())
    }

    fn complete(&self, req: &AgentRequest, messages: &[ChatMessage]) -> Result<AgentResponse>;
}

/// Render, call and record.
pub fn call(backend: &dyn AgentBackend, req: &AgentRequest) -> Result<(AgentResponse, CallRecord)> {
    let messages = render_prompt(req);
    let resp = backend.complete(req, &messages)?;
    let rec = CallRecord {
        role: req.role,
        agent_id: req.agent_id.clone(),
        round: req.round,
        prompt: prompt_text(&messages),
        response: resp.text.clone(),
        tokens_in: resp.tokens_in,
        tokens_out: resp.tokens_out,
        attempts: resp.attempts,
    };
    Ok((resp, rec))
}

static VERDICT_LINE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?im)^\s*(?:final\s+)?verdict\s*:\s*(SUPPORTS?|REFUTES?|NOT[-_ ]ENOUGH[-_ ]INFO|NEI)\b(?:[^\n]*?confidence\s*[:=]?\s*([01](?:\.\d+)?))?")
        .expect("static pattern")
});

/// Last `Verdict: LABEL (confidence x)` line of a response; confidence
/// defaults to 0.5 when absent.
pub fn parse_verdict(text: &str) -> Option<(Verdict, f64)> {
    let caps = VERDICT_LINE.captures_iter(text).last()?;
    let label = caps[1].replace([' ', '_'], "-");
    let verdict = label.parse::<Verdict>().ok()?;
    let conf = caps
        .get(2)
        .and_then(|m| m.as_str().parse::<f64>().ok())
        .map_or(0.5, |c| c.clamp(0.0, 1.0));
    Some((verdict, conf))
}

pub fn verdict_line(v: Verdict, confidence: f64) -> String {
    format!("Verdict: {} (confidence {:.2})", v.as_str(), confidence)
}

/// Whitespace token count used for mock accounting.
pub fn count_tokens(s: &str) -> u64 {
    s.split_whitespace().count() as u64
}
