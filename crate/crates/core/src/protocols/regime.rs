use serde::{Deserialize, Serialize};

use super::config::{Aggregation, ContextWindow, EvidencePolicy, ProtocolConfig, RoleStructure};

/// The four closure conditions under which a protocol is a Markov chain in the
/// evidence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClosureCondition {
    /// Shared parameters across steps.
    I,
    /// Evidence provided once at t=0.
    Ii,
    /// Step t+1 depends only on step t and the parameters.
    Iii,
    /// Symmetric aggregation.
    Iv,
}

impl ClosureCondition {
    pub fn as_str(&self) -> &'static str {
        match self {
            ClosureCondition::I => "i",
            ClosureCondition::Ii => "ii",
            ClosureCondition::Iii => "iii",
            ClosureCondition::Iv => "iv",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProtocolRegime {
    /// All four conditions hold.
    Closed,
    /// Evidence re-enters after t=0.
    Open,
    /// Evidence is not re-injected but another condition fails; neither bound
    /// applies.
    Unclassified,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegimeLabel {
    pub regime: ProtocolRegime,
    /// The final output is a K-way tally.
    pub vote_floor: bool,
    pub violated_conditions: Vec<ClosureCondition>,
}

impl RegimeLabel {
    pub fn summary(&self) -> String {
        let base = match self.regime {
            ProtocolRegime::Closed => "closed",
            ProtocolRegime::Open => "open",
            ProtocolRegime::Unclassified => "unclassified",
        };
        let mut s = base.to_string();
        if self.vote_floor {
            s.push_str("+vote-floor");
        }
        if !self.violated_conditions.is_empty() {
            let v: Vec<&str> = self.violated_conditions.iter().map(|c| c.as_str()).collect();
            s.push_str(&format!(" (violates {})", v.join(",")));
        }
        s
    }
}

pub fn classify_protocol(cfg: &ProtocolConfig) -> RegimeLabel {
    let mut violated = Vec::new();
    if !cfg.shared_parameters {
        violated.push(ClosureCondition::I);
    }
    if cfg.evidence_policy != EvidencePolicy::OnceAtT0 {
        violated.push(ClosureCondition::Ii);
    }
    if cfg.context_window == ContextWindow::FullHistory {
        violated.push(ClosureCondition::Iii);
    }
    if cfg.role_structure == RoleStructure::Unilateral || cfg.aggregation == Aggregation::DebaterJudge {
        violated.push(ClosureCondition::Iv);
    }
    let regime = if violated.is_empty() {
        ProtocolRegime::Closed
    } else if violated.contains(&ClosureCondition::Ii) {
        ProtocolRegime::Open
    } else {
        ProtocolRegime::Unclassified
    };
    RegimeLabel {
        regime,
        vote_floor: cfg.aggregation == Aggregation::MajorityVote,
        violated_conditions: violated,
    }
}
