//! Offline agent backends.
//!
//! Mock agents write traces out of two kinds of sentence: restatements of a
//! visible passage (token-identical to it, so they are fully supported) and
//! fabricated sentences drawn from a pseudo-word vocabulary that shares no
//! token with any real text. Every fabricated content token starts with `q`
//! followed by a letter other than `u`, which is how a mock recognizes its own
//! fabrications in later rounds.
//!
//! The scripted mock is a pure function of the request fields. The
//! distributional mock also draws from the per-call seed.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::backend::{
    count_tokens, verdict_line, AgentBackend, AgentRequest, AgentResponse, BackendIdentity, BackendKind, ChatMessage,
    Role,
};
use super::egsr::QuestionType;
use super::Result;
use crate::faithfulness::{LexicalSimilarity, Passage, RoundOutput, SimilarityBackend, Verdict};
use crate::rng::{derive_seed, hash_str, mix64, rng_from};
use crate::text::content_tokens;

/// Behaviour knobs of a mock agent for one condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockProfile {
    /// Probability that a fresh verdict is the gold label.
    #[serde(default = "d_accuracy")]
    pub accuracy: f64,
    /// Passage restatements in a fresh trace.
    #[serde(default = "d_grounded")]
    pub grounded: usize,
    /// Fabricated sentences in a fresh trace.
    #[serde(default = "d_fabricated")]
    pub fabricated: usize,
    /// Per-round loss rate of carried restatements when evidence is not visible.
    #[serde(default)]
    pub decay: f64,
    /// Fabricated sentences added per exchange round.
    #[serde(default)]
    pub elaboration: usize,
    /// Probability of adopting the peer-majority position.
    #[serde(default)]
    pub copy_rate: f64,
    /// Probability that a sub-question answer restates the top passage.
    #[serde(default = "d_fidelity")]
    pub hfsv_fidelity: f64,
    #[serde(default = "d_confidence")]
    pub confidence: f64,
}

fn d_accuracy() -> f64 {
    0.6
}

fn d_grounded() -> usize {
    4
}

fn d_fabricated() -> usize {
    2
}

fn d_fidelity() -> f64 {
    1.0
}

fn d_confidence() -> f64 {
    0.7
}

impl Default for MockProfile {
    fn default() -> Self {
        Self {
            accuracy: d_accuracy(),
            grounded: d_grounded(),
            fabricated: d_fabricated(),
            decay: 0.0,
            elaboration: 0,
            copy_rate: 0.0,
            hfsv_fidelity: d_fidelity(),
            confidence: d_confidence(),
        }
    }
}

impl MockProfile {
    pub fn validate(&self) -> std::result::Result<(), String> {
        for (name, v) in [
            ("accuracy", self.accuracy),
            ("decay", self.decay),
            ("copy_rate", self.copy_rate),
            ("hfsv_fidelity", self.hfsv_fidelity),
            ("confidence", self.confidence),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(format!("mock.{name} must lie in [0, 1], got {v}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MockMode {
    Scripted,
    Distributional,
}

/// Mock backend. The answer key stands in for the parametric knowledge of a
/// real model; it is only consulted when a verdict is formed from scratch.
#[derive(Debug, Clone)]
pub struct MockBackend {
    pub mode: MockMode,
    pub profile: MockProfile,
    answer_key: BTreeMap<String, Verdict>,
}

impl MockBackend {
    pub fn new(mode: MockMode, profile: MockProfile, answer_key: BTreeMap<String, Verdict>) -> Self {
        Self {
            mode,
            profile,
            answer_key,
        }
    }

    fn scripted(&self) -> bool {
        self.mode == MockMode::Scripted
    }

    /// Bernoulli draw; the scripted mock thresholds a hash of `label` instead.
    fn draw(&self, p: f64, seed: u64, label: &str) -> bool {
        if self.scripted() {
            unit(mix64(hash_str(label))) < p
        } else {
            rng_from(derive_seed(seed, &[hash_str(label)])).random_bool(p.clamp(0.0, 1.0))
        }
    }

    fn fresh_verdict(&self, req: &AgentRequest) -> Verdict {
        let gold = self
            .answer_key
            .get(&req.claim_id)
            .copied()
            .unwrap_or(Verdict::NotEnoughInfo);
        // scripted agents share one draw per claim, distributional agents draw
        // independently
        let label = if self.scripted() {
            format!("verdict/{}", req.claim_id)
        } else {
            format!("verdict/{}/{}", req.agent_id, req.round)
        };
        if self.draw(self.profile.accuracy, req.seed, &label) {
            return gold;
        }
        let wrong: Vec<Verdict> = Verdict::ALL.into_iter().filter(|v| *v != gold).collect();
        let pick = if self.scripted() {
            (mix64(hash_str(&format!("wrong/{}", req.claim_id))) % 2) as usize
        } else {
            rng_from(derive_seed(req.seed, &[7])).random_range(0..2)
        };
        wrong[pick]
    }

    fn fresh_trace(&self, req: &AgentRequest) -> Vec<String> {
        let mut visible: Vec<&Passage> = req.evidence.iter().collect();
        if !self.scripted() {
            visible.shuffle(&mut rng_from(derive_seed(req.seed, &[1])));
        }
        let mut out: Vec<String> = visible
            .iter()
            .take(self.profile.grounded)
            .map(|p| restate(&p.text))
            .collect();
        for i in 0..self.profile.fabricated {
            out.push(fabricate(derive_seed(self.text_seed(req), &[100 + i as u64])));
        }
        out
    }

    /// Seed for fabricated wording. Scripted wording depends on the request
    /// identity only.
    fn text_seed(&self, req: &AgentRequest) -> u64 {
        if self.scripted() {
            hash_str(&format!("{}/{}/{}", req.claim_id, req.agent_id, req.round))
        } else {
            req.seed
        }
    }

    fn decayed(&self, req: &AgentRequest, base: &[String]) -> Vec<String> {
        let grounded = base.iter().filter(|s| !is_fabricated(s)).count();
        let keep_scripted = if self.profile.decay > 0.0 && grounded > 0 {
            ((grounded as f64 * (1.0 - self.profile.decay)).round() as usize).min(grounded - 1)
        } else {
            grounded
        };
        let mut rng = rng_from(derive_seed(req.seed, &[2]));
        let mut kept_grounded = 0;
        let mut out = Vec::new();
        for s in base {
            if is_fabricated(s) {
                out.push(s.clone());
                continue;
            }
            let keep = if self.scripted() {
                kept_grounded < keep_scripted
            } else {
                rng.random_bool(1.0 - self.profile.decay)
            };
            if keep {
                kept_grounded += 1;
                out.push(s.clone());
            }
        }
        out
    }

    fn exchange(&self, req: &AgentRequest) -> (Vec<String>, Verdict, f64) {
        let latest = latest_round(&req.history);
        let own = latest.iter().find(|o| o.agent_id == req.agent_id).copied();
        let peers: Vec<&RoundOutput> = latest.iter().copied().filter(|o| o.agent_id != req.agent_id).collect();
        let mut confidence = self.profile.confidence;
        let (base, mut verdict) = match own {
            Some(o) => (o.text.as_str(), o.verdict.unwrap_or(Verdict::NotEnoughInfo)),
            None => (latest.first().map_or("", |o| o.text.as_str()), self.fresh_verdict(req)),
        };
        let mut base = base;
        if let Some(maj) = majority(&peers) {
            if self.draw(
                self.profile.copy_rate,
                req.seed,
                &format!("copy/{}/{}", req.claim_id, req.agent_id),
            ) {
                verdict = maj;
                confidence = (confidence + 0.1).min(0.99);
                if let Some(p) = peers.iter().find(|p| p.verdict == Some(maj)) {
                    base = &p.text;
                }
            }
        }
        let mut sentences = if req.evidence.is_empty() {
            self.decayed(req, &split_sentences(base))
        } else {
            // evidence in view: restatements are rebuilt from the passages
            let mut fresh = self.fresh_trace(req);
            fresh.retain(|s| !is_fabricated(s));
            fresh.extend(split_sentences(base).into_iter().filter(|s| is_fabricated(s)));
            fresh
        };
        for i in 0..self.profile.elaboration {
            sentences.push(fabricate(derive_seed(self.text_seed(req), &[200 + i as u64])));
        }
        (sentences, verdict, confidence)
    }

    fn aggregate(&self, req: &AgentRequest) -> (Vec<String>, Verdict, f64) {
        let latest = latest_round(&req.history);
        let verdict = majority(&latest).unwrap_or(Verdict::NotEnoughInfo);
        let base = latest
            .iter()
            .find(|o| o.verdict == Some(verdict))
            .or(latest.first())
            .map_or("", |o| o.text.as_str());
        (
            self.decayed(req, &split_sentences(base)),
            verdict,
            self.profile.confidence,
        )
    }

    fn question(&self, req: &AgentRequest) -> String {
        let qt = req.question.as_ref().map_or(QuestionType::Clarification, |q| q.0);
        let trace = req.trace.as_deref().unwrap_or("");
        let target = if req.evidence.is_empty() {
            // no evidence in view: probe the most recent statement
            split_sentences(trace).pop().unwrap_or_default()
        } else {
            least_covered(trace, &req.prior_questions, &req.evidence).text.clone()
        };
        format!("{} {}?", qt.stem(), target.trim_end_matches('.'))
    }

    fn answer(&self, req: &AgentRequest) -> String {
        let top = match req.evidence.first() {
            Some(p) => p,
            None => return fabricate(derive_seed(self.text_seed(req), &[300])),
        };
        if self.draw(
            self.profile.hfsv_fidelity,
            req.seed,
            &format!("hfsv/{}/{}", req.claim_id, req.round),
        ) {
            top.text.clone()
        } else {
            fabricate(derive_seed(self.text_seed(req), &[301]))
        }
    }
}

impl AgentBackend for MockBackend {
    fn identity(&self) -> BackendIdentity {
        let (name, kind) = match self.mode {
            MockMode::Scripted => ("scripted-mock", BackendKind::ScriptedMock),
            MockMode::Distributional => ("distributional-mock", BackendKind::DistributionalMock),
        };
        BackendIdentity {
            name: name.into(),
            kind,
            model: None,
            deterministic: true,
        }
    }

    fn complete(&self, req: &AgentRequest, messages: &[ChatMessage]) -> Result<AgentResponse> {
        let text = match req.role {
            Role::Agent | Role::Debater => {
                let (sentences, verdict, conf) = if req.history.is_empty() {
                    (self.fresh_trace(req), self.fresh_verdict(req), self.profile.confidence)
                } else {
                    self.exchange(req)
                };
                compose(&sentences, verdict, conf)
            }
            Role::Summarizer | Role::Judge => {
                let (sentences, verdict, conf) = self.aggregate(req);
                compose(&sentences, verdict, conf)
            }
            Role::Questioner => self.question(req),
            Role::Answerer => self.answer(req),
        };
        let tokens_in = messages.iter().map(|m| count_tokens(&m.content)).sum();
        Ok(AgentResponse {
            tokens_out: count_tokens(&text),
            text,
            tokens_in,
            attempts: 1,
        })
    }
}

fn unit(h: u64) -> f64 {
    (h >> 11) as f64 / (1u64 << 53) as f64
}

fn latest_round(history: &[RoundOutput]) -> Vec<&RoundOutput> {
    let last = history.iter().map(|o| o.round_index).max();
    history.iter().filter(|o| Some(o.round_index) == last).collect()
}

/// Plurality verdict; exact ties resolve to NOT-ENOUGH-INFO.
fn majority(outputs: &[&RoundOutput]) -> Option<Verdict> {
    let mut counts = [0usize; 3];
    for o in outputs {
        if let Some(v) = o.verdict {
            counts[v.index()] += 1;
        }
    }
    let top = *counts.iter().max()?;
    if top == 0 {
        return None;
    }
    let winners: Vec<Verdict> = Verdict::ALL.into_iter().filter(|v| counts[v.index()] == top).collect();
    Some(if winners.len() == 1 {
        winners[0]
    } else {
        Verdict::NotEnoughInfo
    })
}

fn least_covered<'a>(trace: &str, asked: &[String], evidence: &'a [Passage]) -> &'a Passage {
    let sim = LexicalSimilarity;
    let mut sentences = split_sentences(trace);
    sentences.extend(asked.iter().cloned());
    let coverage = |p: &Passage| sentences.iter().map(|s| sim.similarity(s, &p.text)).fold(0.0, f64::max);
    let mut best = &evidence[0];
    let mut best_cov = coverage(best);
    for p in &evidence[1..] {
        let c = coverage(p);
        if c < best_cov {
            best = p;
            best_cov = c;
        }
    }
    best
}

/// Passage text with a stopword lead-in, so the sentence carries the same
/// content tokens without repeating the passage string verbatim.
pub fn restate(passage: &str) -> String {
    let mut chars = passage.trim().chars();
    let body = match chars.next() {
        Some(c) => c.to_lowercase().chain(chars).collect::<String>(),
        None => String::new(),
    };
    let body = body.trim_end_matches('.');
    format!("Also, {body}.")
}

const SYLLABLES: &[&str] = &[
    "or", "ve", "lin", "tar", "mex", "dan", "bro", "sil", "kan", "tep", "ram", "zo", "fi", "gen", "pa", "rix", "mol",
    "ter", "vas", "nel",
];

fn pseudo_word(rng: &mut impl Rng) -> String {
    let n = rng.random_range(2..=3);
    let mut w = String::from("q");
    for _ in 0..n {
        w.push_str(SYLLABLES[rng.random_range(0..SYLLABLES.len())]);
    }
    w
}

/// A sentence of 6 to 9 pseudo-words.
pub fn fabricate(seed: u64) -> String {
    let mut rng = rng_from(seed);
    let n = rng.random_range(6..=9);
    let words: Vec<String> = (0..n).map(|_| pseudo_word(&mut rng)).collect();
    let mut s = words.join(" ");
    s.replace_range(0..1, "Q");
    s.push('.');
    s
}

pub fn is_fabricated(sentence: &str) -> bool {
    let toks = content_tokens(sentence);
    !toks.is_empty()
        && toks.iter().all(|t| {
            let mut c = t.chars();
            c.next() == Some('q') && c.next().is_some_and(|d| d != 'u')
        })
}

/// Trace sentences, excluding verdict and vote lines.
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for line in text.lines() {
        let l = line.trim();
        let lower = l.to_ascii_lowercase();
        if l.is_empty() || lower.starts_with("verdict:") || lower.starts_with("final vote:") {
            continue;
        }
        for piece in l.split_inclusive(". ") {
            let p = piece.trim();
            if p.is_empty() {
                continue;
            }
            let p = if p.ends_with('.') {
                p.to_string()
            } else {
                format!("{p}.")
            };
            out.push(p);
        }
    }
    out
}

pub fn compose(sentences: &[String], verdict: Verdict, confidence: f64) -> String {
    let mut text = sentences.join(" ");
    if !text.is_empty() {
        text.push('\n');
    }
    text.push_str(&verdict_line(verdict, confidence));
    text
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::faithfulness::{EvidenceSet, SfsEngine};

    fn evidence() -> Vec<Passage> {
        vec![
            Passage::new("p1", "Metformin lowered fasting glucose in diabetic adults."),
            Passage::new("p2", "Statins reduced LDL cholesterol within twelve weeks."),
            Passage::new("p3", "Zinc lozenges shortened common cold duration."),
        ]
    }

    fn key() -> BTreeMap<String, Verdict> {
        [("c1".to_string(), Verdict::Supports)].into()
    }

    #[test]
    fn sentence_kinds() {
        for s in 0..50 {
            let f = fabricate(s);
            assert!(is_fabricated(&f), "{f}");
            assert!(content_tokens(&f).len() >= 2);
        }
        let r = restate("Metformin lowered fasting glucose.");
        assert_eq!(r, "Also, metformin lowered fasting glucose.");
        assert!(!is_fabricated(&r));
        assert_eq!(content_tokens(&r), content_tokens("Metformin lowered fasting glucose."));
        assert_eq!(
            split_sentences("A b c. D e f.\nVerdict: SUPPORTS (confidence 0.70)").len(),
            2
        );
    }

    #[test]
    fn scripted_trace_scores_as_constructed() {
        let m = MockBackend::new(
            MockMode::Scripted,
            MockProfile {
                grounded: 2,
                fabricated: 2,
                ..MockProfile::default()
            },
            key(),
        );
        let mut req = AgentRequest::new(Role::Agent, "C1", "c1", "a0", 0, 9);
        req.evidence = evidence();
        let text = m.complete(&req, &[]).unwrap().text;
        let ev = EvidenceSet::new("c1", evidence()).unwrap();
        let r = SfsEngine::default().sfs(&text, &ev, None, None, None).unwrap();
        assert_eq!((r.claim_count, r.sfs), (4, 0.5));
        assert_eq!(m.complete(&req, &[]).unwrap().text, text);
    }

    #[test]
    fn decay_strictly_shrinks_restatements() {
        let m = MockBackend::new(
            MockMode::Scripted,
            MockProfile {
                grounded: 3,
                fabricated: 1,
                decay: 0.2,
                ..MockProfile::default()
            },
            key(),
        );
        let mut req = AgentRequest::new(Role::Agent, "C3", "c1", "a0", 0, 1);
        req.evidence = evidence();
        let mut text = m.complete(&req, &[]).unwrap().text;
        let mut grounded = 3;
        for t in 1..4 {
            let mut next = AgentRequest::new(Role::Agent, "C3", "c1", "a0", t, 1);
            next.history = vec![RoundOutput {
                round_index: t - 1,
                agent_id: "a0".into(),
                text: text.clone(),
                verdict: Some(Verdict::Supports),
                confidence: 0.7,
            }];
            text = m.complete(&next, &[]).unwrap().text;
            let g = split_sentences(&text).iter().filter(|s| !is_fabricated(s)).count();
            assert!(g < grounded);
            grounded = g;
        }
    }

    #[test]
    fn majority_ties_are_nei() {
        let o = |v| RoundOutput {
            round_index: 0,
            agent_id: "x".into(),
            text: String::new(),
            verdict: Some(v),
            confidence: 0.5,
        };
        let (s, r) = (o(Verdict::Supports), o(Verdict::Refutes));
        assert_eq!(majority(&[&s, &r]), Some(Verdict::NotEnoughInfo));
        assert_eq!(majority(&[&s, &s, &r]), Some(Verdict::Supports));
        assert_eq!(majority(&[]), None);
    }
}
