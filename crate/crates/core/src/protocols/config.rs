use serde::{Deserialize, Serialize};

use super::egsr::QuestionType;
use super::mock::MockProfile;
use super::{ProtocolError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    None,
    MajorityVote,
    Summary,
    ConformityVote,
    DebaterJudge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvidencePolicy {
    OnceAtT0,
    ReinjectEveryRound,
    RetrievalPerQuestion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RoleStructure {
    Symmetric,
    DebaterQuestionerChecker,
    Unilateral,
}

/// What a round-`t+1` prompt may see of earlier rounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContextWindow {
    #[default]
    PreviousRound,
    FullHistory,
}

/// One experimental condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    pub condition_id: String,
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub agent_count: usize,
    pub max_rounds: usize,
    pub aggregation: Aggregation,
    pub evidence_policy: EvidencePolicy,
    pub role_structure: RoleStructure,
    #[serde(default)]
    pub context_window: ContextWindow,
    /// False when some role runs on different parameters (e.g. a smaller
    /// checker model).
    #[serde(default = "yes")]
    pub shared_parameters: bool,
    /// Independent samples per agent; vote aggregation over a single agent
    /// needs at least two.
    #[serde(default = "one")]
    pub samples: usize,
    /// Passages shown at t=0, chosen by similarity to the claim; all when unset.
    #[serde(default)]
    pub retrieve_k: Option<usize>,
    /// Contradicting passages injected into the evidence the agents see.
    #[serde(default)]
    pub adversarial_passages: usize,
    #[serde(default = "default_prompt_version")]
    pub prompt_version: String,
    #[serde(default)]
    pub egsr: Option<EgsrConfig>,
    #[serde(default)]
    pub mock: MockProfile,
}

fn yes() -> bool {
    true
}

fn one() -> usize {
    1
}

fn default_prompt_version() -> String {
    "v1".into()
}

impl ProtocolConfig {
    pub fn from_toml(src: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(src).map_err(|e| ProtocolError::Config(format!("condition config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(ProtocolError::Config(format!("{}: {m}", self.condition_id)));
        if self.condition_id.trim().is_empty() {
            return Err(ProtocolError::Config("empty condition_id".into()));
        }
        if self.agent_count == 0 {
            return bad("agent_count must be at least 1".into());
        }
        if self.samples == 0 {
            return bad("samples must be at least 1".into());
        }
        let voters = self.agent_count * self.samples;
        if matches!(
            self.aggregation,
            Aggregation::MajorityVote | Aggregation::ConformityVote
        ) && voters < 2
        {
            return bad("vote aggregation needs at least two voters".into());
        }
        if self.retrieve_k == Some(0) {
            return bad("retrieve_k must be at least 1".into());
        }
        let socratic = self.role_structure == RoleStructure::DebaterQuestionerChecker;
        if socratic != self.egsr.is_some() {
            return bad("an [egsr] table is required exactly for debater-questioner-checker".into());
        }
        if self.evidence_policy == EvidencePolicy::RetrievalPerQuestion && !socratic {
            return bad("retrieval-per-question needs the debater-questioner-checker roles".into());
        }
        if let Some(e) = &self.egsr {
            e.validate().map_err(|e| match e {
                ProtocolError::Config(m) => ProtocolError::Config(format!("{}: {m}", self.condition_id)),
                other => other,
            })?;
        }
        self.mock
            .validate()
            .map_err(|m| ProtocolError::Config(format!("{}: {m}", self.condition_id)))
    }

    pub fn is_socratic(&self) -> bool {
        self.egsr.is_some()
    }

    pub fn voters(&self) -> usize {
        self.agent_count * self.samples
    }
}

/// Convergence rule: at least `required` of the three criteria.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceRule {
    pub required: usize,
}

impl Default for ConvergenceRule {
    fn default() -> Self {
        Self { required: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EgsrConfig {
    #[serde(default = "default_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_question_types")]
    pub question_types: Vec<QuestionType>,
    #[serde(default = "default_questions_per_iteration")]
    pub questions_per_iteration: usize,
    #[serde(default = "default_retrieve_k")]
    pub retrieve_k: usize,
    #[serde(default = "default_gate")]
    pub gate_threshold: f64,
    #[serde(default = "default_ess")]
    pub ess_threshold: f64,
    #[serde(default = "default_gap")]
    pub confidence_gap: f64,
    #[serde(default)]
    pub convergence: ConvergenceRule,
    /// When false, every sub-answer is appended without the checker gate.
    #[serde(default = "yes")]
    pub verify: bool,
}

fn default_iterations() -> usize {
    3
}

fn default_question_types() -> Vec<QuestionType> {
    QuestionType::ALL.to_vec()
}

fn default_questions_per_iteration() -> usize {
    1
}

fn default_retrieve_k() -> usize {
    5
}

fn default_gate() -> f64 {
    crate::faithfulness::DEFAULT_TAU
}

fn default_ess() -> f64 {
    0.75
}

fn default_gap() -> f64 {
    0.20
}

impl Default for EgsrConfig {
    fn default() -> Self {
        Self {
            max_iterations: default_iterations(),
            question_types: default_question_types(),
            questions_per_iteration: default_questions_per_iteration(),
            retrieve_k: default_retrieve_k(),
            gate_threshold: default_gate(),
            ess_threshold: default_ess(),
            confidence_gap: default_gap(),
            convergence: ConvergenceRule::default(),
            verify: true,
        }
    }
}

impl EgsrConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        let msg = if self.max_iterations == 0 {
            Some("max_iterations must be at least 1")
        } else if self.retrieve_k == 0 {
            Some("retrieve_k must be at least 1")
        } else if self.questions_per_iteration == 0 {
            Some("questions_per_iteration must be at least 1")
        } else if self.question_types.is_empty() {
            Some("question_types is empty")
        } else if !(unit(self.gate_threshold) && unit(self.ess_threshold) && unit(self.confidence_gap)) {
            Some("thresholds must lie in [0, 1]")
        } else if !(1..=3).contains(&self.convergence.required) {
            Some("convergence.required must be 1, 2 or 3")
        } else {
            None
        };
        match msg {
            Some(m) => Err(ProtocolError::Config(m.into())),
            None => Ok(()),
        }
    }

    /// Question type of the `j`-th question overall, cycling through the list.
    pub fn question_type(&self, j: usize) -> QuestionType {
        self.question_types[j % self.question_types.len()]
    }
}

/// The sixteen shipped condition configs, in condition-id order.
pub fn builtin_conditions() -> Vec<ProtocolConfig> {
    crate::fixtures::CONDITIONS
        .iter()
        .map(|(id, src)| ProtocolConfig::from_toml(src).unwrap_or_else(|e| panic!("shipped condition {id}: {e}")))
        .collect()
}

pub fn builtin_condition(id: &str) -> Option<ProtocolConfig> {
    builtin_conditions()
        .into_iter()
        .find(|c| c.condition_id.eq_ignore_ascii_case(id))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_conditions_load() {
        let all = builtin_conditions();
        assert_eq!(all.len(), 16);
        for (i, c) in all.iter().enumerate() {
            assert_eq!(c.condition_id, format!("C{}", i + 1));
        }
        let c8 = builtin_condition("c8").unwrap();
        let e = c8.egsr.unwrap();
        assert_eq!((e.max_iterations, e.retrieve_k, e.question_types.len()), (3, 5, 6));
        assert_eq!(e.convergence.required, 2);
    }

    #[test]
    fn validation() {
        let mut c = builtin_condition("C15").unwrap();
        c.agent_count = 1;
        assert!(matches!(c.validate(), Err(ProtocolError::Config(_))));
        c.samples = 3;
        assert!(c.validate().is_ok());
        let mut c = builtin_condition("C1").unwrap();
        c.egsr = Some(EgsrConfig::default());
        assert!(c.validate().is_err());
        assert!(ProtocolConfig::from_toml("condition_id = \"X\"").is_err());
        let round = ProtocolConfig::from_toml(&builtin_condition("C8").unwrap().to_toml()).unwrap();
        assert_eq!(round, builtin_condition("C8").unwrap());
    }
}
