//! Evidence-grounded Socratic reasoning.
//!
//! A debater writes an initial trace `O^0`. Each iteration a questioner asks
//! sub-questions about the current trace, each sub-question is answered from
//! the top retrieved passages alone (the answerer never sees the claim or the
//! trace), and a checker scores every answer against the evidence. `O^t` is
//! `O^{t-1}` followed by the answers that pass the checker; nothing is ever
//! removed, so a trace whose appended claims are fully supported cannot lose
//! supported mass.
//!
//! ESS and the verdict confidence have no published formula. ESS is the mean,
//! over the iteration's sub-questions, of the best per-passage support product
//! of the answer. Confidence is the margin between the two leading running
//! verdict scores, normalized by their total.

use serde::{Deserialize, Serialize};

use super::backend::{call, parse_verdict, AgentBackend, AgentRequest, CallRecord, Role};
use super::config::EgsrConfig;
use super::mock::split_sentences;
use super::{ProtocolError, Result};
use crate::faithfulness::{
    EmptyPolicy, EvidenceSet, FaithfulnessTrajectory, Passage, RoundOutput, SfsEngine, SimilarityBackend, Verdict,
};
use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuestionType {
    Clarification,
    AssumptionProbing,
    EvidenceDemanding,
    CounterExampleSeeking,
    ImplicationExploring,
    MetaEvaluation,
}

impl QuestionType {
    pub const ALL: [QuestionType; 6] = [
        QuestionType::Clarification,
        QuestionType::AssumptionProbing,
        QuestionType::EvidenceDemanding,
        QuestionType::CounterExampleSeeking,
        QuestionType::ImplicationExploring,
        QuestionType::MetaEvaluation,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            QuestionType::Clarification => "clarification",
            QuestionType::AssumptionProbing => "assumption-probing",
            QuestionType::EvidenceDemanding => "evidence-demanding",
            QuestionType::CounterExampleSeeking => "counter-example-seeking",
            QuestionType::ImplicationExploring => "implication-exploring",
            QuestionType::MetaEvaluation => "meta-evaluation",
        }
    }

    /// Lead-in used by the mock questioner.
    pub fn stem(&self) -> &'static str {
        match self {
            QuestionType::Clarification => "What exactly is meant by the statement that",
            QuestionType::AssumptionProbing => "Which assumption lies behind the statement that",
            QuestionType::EvidenceDemanding => "Which passage shows that",
            QuestionType::CounterExampleSeeking => "Is there a passage contradicting that",
            QuestionType::ImplicationExploring => "What follows if",
            QuestionType::MetaEvaluation => "How reliable is the report that",
        }
    }
}

/// Up to `k` passages by decreasing similarity to `question`; ties go to the
/// lower passage id.
pub fn retrieve_topk<'a>(
    question: &str,
    evidence: &'a [Passage],
    sim: &dyn SimilarityBackend,
    k: usize,
) -> Vec<(&'a Passage, f64)> {
    let mut scored: Vec<(&Passage, f64)> = evidence
        .iter()
        .map(|p| (p, sim.similarity(question, &p.text)))
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.passage_id.cmp(&b.0.passage_id)));
    scored.truncate(k);
    scored
}

/// Evidence sufficiency: mean per-question support. Empty input scores 0.
pub fn egsr_ess(support: &[f64]) -> f64 {
    if support.is_empty() {
        0.0
    } else {
        support.iter().sum::<f64>() / support.len() as f64
    }
}

/// Answers `question` from `retrieved` alone.
pub fn hfsv_answer(
    backend: &dyn AgentBackend,
    base: &AgentRequest,
    question: (QuestionType, String),
    retrieved: &[Passage],
) -> Result<(String, CallRecord)> {
    if retrieved.is_empty() {
        return Err(ProtocolError::RetrievalEmpty(base.claim_id.clone()));
    }
    let mut req = AgentRequest::new(
        Role::Answerer,
        &base.condition_id,
        &base.claim_id,
        "answerer",
        base.round,
        base.seed,
    );
    req.evidence = retrieved.to_vec();
    req.question = Some(question);
    let (resp, rec) = call(backend, &req)?;
    Ok((resp.text.trim().to_string(), rec))
}

/// Running verdict scores accumulated from verified sub-answers.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct VerdictScores(pub [f64; 3]);

impl VerdictScores {
    pub fn add(&mut self, v: Verdict, mass: f64) {
        self.0[v.index()] += mass;
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    /// Unique leader, if any mass has been recorded.
    pub fn leader(&self) -> Option<Verdict> {
        if self.total() <= 0.0 {
            return None;
        }
        let top = self.0.iter().copied().fold(f64::MIN, f64::max);
        let leaders: Vec<Verdict> = Verdict::ALL.into_iter().filter(|v| self.0[v.index()] == top).collect();
        (leaders.len() == 1).then(|| leaders[0])
    }

    /// `(top1 - top2) / total`, 0 without mass.
    pub fn gap(&self) -> f64 {
        let t = self.total();
        if t <= 0.0 {
            return 0.0;
        }
        let mut s = self.0;
        s.sort_by(|a, b| b.total_cmp(a));
        (s[0] - s[1]) / t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvergenceCheck {
    pub ess: bool,
    pub stable_verdict: bool,
    pub confidence_gap: bool,
}

impl ConvergenceCheck {
    pub fn evaluate(ess: f64, previous: Option<Verdict>, current: Option<Verdict>, gap: f64, cfg: &EgsrConfig) -> Self {
        Self {
            ess: ess >= cfg.ess_threshold,
            stable_verdict: current.is_some() && previous == current,
            confidence_gap: gap > cfg.confidence_gap,
        }
    }

    pub fn satisfied(&self) -> usize {
        [self.ess, self.stable_verdict, self.confidence_gap]
            .into_iter()
            .filter(|b| *b)
            .count()
    }

    pub fn converged(&self, cfg: &EgsrConfig) -> bool {
        self.satisfied() >= cfg.convergence.required
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubAnswer {
    pub question_type: QuestionType,
    pub question: String,
    pub retrieved: Vec<String>,
    pub answer: String,
    /// Per-passage support product of the answer, in evidence order.
    pub gate_scores: Vec<f64>,
    pub support: f64,
    pub verified: bool,
    pub polarity: Option<Verdict>,
    /// The top retrieved passage was injected adversarially.
    pub adversarial: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EgsrIteration {
    pub iteration: usize,
    pub sub_answers: Vec<SubAnswer>,
    pub ess: f64,
    pub running_verdict: Option<Verdict>,
    pub confidence: f64,
    pub convergence: ConvergenceCheck,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    GatePassed,
    Converged,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EgsrTrace {
    pub initial_verdict: Option<Verdict>,
    pub iterations: Vec<EgsrIteration>,
    pub termination: Termination,
    pub verdict: Verdict,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EgsrOutcome {
    pub trace: EgsrTrace,
    /// Composed trace after each iteration, round 0 being the debater's.
    pub rounds: Vec<RoundOutput>,
    pub trajectory: FaithfulnessTrajectory,
    pub calls: Vec<CallRecord>,
}

/// Inputs of one EGSR trial.
#[derive(Debug, Clone, Copy)]
pub struct EgsrTask<'a> {
    pub condition_id: &'a str,
    pub claim_id: &'a str,
    pub claim_text: &'a str,
    /// Evidence in the agents' view.
    pub evidence: &'a [Passage],
    /// With open evidence the questioner and retriever consult `evidence`;
    /// otherwise they work from the trace alone and nothing is checked.
    pub open: bool,
    pub seed: u64,
}

pub fn egsr_run(
    task: EgsrTask<'_>,
    backend: &dyn AgentBackend,
    checker: &SfsEngine,
    cfg: &EgsrConfig,
) -> Result<EgsrOutcome> {
    if task.evidence.is_empty() {
        return Err(ProtocolError::RetrievalEmpty(task.claim_id.to_string()));
    }
    let mut calls = Vec::new();
    let mut debater = AgentRequest::new(
        Role::Debater,
        task.condition_id,
        task.claim_id,
        "debater",
        0,
        derive_seed(task.seed, &[0]),
    );
    debater.claim_text = Some(task.claim_text.to_string());
    debater.evidence = task.evidence.to_vec();
    let (resp, rec) = call(backend, &debater)?;
    calls.push(rec);
    let initial = parse_verdict(&resp.text);
    let mut sentences = split_sentences(&resp.text);
    let mut rounds = vec![RoundOutput {
        round_index: 0,
        agent_id: "egsr".into(),
        text: resp.text.clone(),
        verdict: initial.map(|v| v.0),
        confidence: initial.map_or(0.0, |v| v.1),
    }];

    let checking = task.open && cfg.verify;
    let mut scores = VerdictScores::default();
    let mut previous: Option<Verdict> = None;
    let mut iterations = Vec::new();
    let mut termination = Termination::MaxIterations;
    let mut asked = 0usize;
    for it in 1..=cfg.max_iterations {
        let trace = sentences.join(" ");
        let pool: Vec<Passage> = if task.open {
            task.evidence.to_vec()
        } else {
            sentences
                .iter()
                .enumerate()
                .map(|(i, s)| Passage::new(format!("s{}", i + 1), s.clone()))
                .collect()
        };
        let mut subs = Vec::new();
        let mut prior = Vec::new();
        for j in 0..cfg.questions_per_iteration {
            let qt = cfg.question_type(asked);
            asked += 1;
            let seed = derive_seed(task.seed, &[it as u64, j as u64]);
            let mut qreq = AgentRequest::new(
                Role::Questioner,
                task.condition_id,
                task.claim_id,
                "questioner",
                it,
                seed,
            );
            qreq.claim_text = Some(task.claim_text.to_string());
            qreq.trace = Some(trace.clone());
            qreq.question = Some((qt, String::new()));
            qreq.prior_questions = prior.clone();
            if task.open {
                qreq.evidence = task.evidence.to_vec();
            }
            let (q, rec) = call(backend, &qreq)?;
            calls.push(rec);
            let question = q.text.trim().to_string();
            prior.push(question.clone());

            let top: Vec<Passage> = retrieve_topk(&question, &pool, checker.similarity.as_ref(), cfg.retrieve_k)
                .into_iter()
                .map(|(p, _)| p.clone())
                .collect();
            let (answer, rec) = hfsv_answer(backend, &qreq, (qt, question.clone()), &top)?;
            calls.push(rec);

            let (gate_scores, support, polarity) = if checking {
                let gs: Vec<f64> = task
                    .evidence
                    .iter()
                    .map(|p| {
                        let sim = checker.similarity.similarity(&answer, &p.text).clamp(0.0, 1.0);
                        let pass = checker.entailment.judge(&p.text, &answer).entail >= cfg.gate_threshold;
                        if pass {
                            sim
                        } else {
                            0.0
                        }
                    })
                    .collect();
                let s = gs.iter().copied().fold(0.0, f64::max);
                // stance counts only for answers about the claim itself
                let on_claim = checker.similarity.similarity(&answer, task.claim_text) >= cfg.gate_threshold;
                let pol = (s > 0.0 && on_claim).then(|| checker.entailment.polarity(&answer, task.claim_text));
                (gs, s, pol)
            } else {
                (Vec::new(), 0.0, None)
            };
            let verified = !checking || support >= cfg.gate_threshold;
            subs.push(SubAnswer {
                question_type: qt,
                question,
                retrieved: top.iter().map(|p| p.passage_id.clone()).collect(),
                adversarial: top
                    .first()
                    .is_some_and(|p| p.passage_id.starts_with(ADVERSARIAL_PREFIX)),
                answer,
                gate_scores,
                support,
                verified,
                polarity,
            });
        }

        for s in &subs {
            if s.verified {
                sentences.extend(split_sentences(&s.answer));
                if let Some(p) = s.polarity {
                    scores.add(p, s.support);
                }
            }
        }
        let ess = egsr_ess(&subs.iter().map(|s| s.support).collect::<Vec<_>>());
        let leader = scores.leader();
        let gap = scores.gap();
        let check = ConvergenceCheck::evaluate(ess, previous, leader, gap, cfg);
        let gate_passed = checking && subs.iter().all(|s| s.support >= cfg.gate_threshold);
        let shown = leader.or(initial.map(|v| v.0)).unwrap_or(Verdict::NotEnoughInfo);
        let shown_conf = if leader.is_some() {
            gap
        } else {
            initial.map_or(0.0, |v| v.1)
        };
        rounds.push(RoundOutput {
            round_index: it,
            agent_id: "egsr".into(),
            text: super::mock::compose(&sentences, shown, shown_conf),
            verdict: Some(shown),
            confidence: shown_conf,
        });
        iterations.push(EgsrIteration {
            iteration: it,
            sub_answers: subs,
            ess,
            running_verdict: leader,
            confidence: gap,
            convergence: check,
        });
        previous = leader;
        if gate_passed {
            termination = Termination::GatePassed;
            break;
        }
        if check.converged(cfg) {
            termination = Termination::Converged;
            break;
        }
    }

    let last = rounds.last().expect("round 0 exists");
    let trace = EgsrTrace {
        initial_verdict: initial.map(|v| v.0),
        iterations,
        termination,
        verdict: last.verdict.unwrap_or(Verdict::NotEnoughInfo),
        confidence: last.confidence,
    };
    let scorer = checker.clone().with_empty_policy(EmptyPolicy::ScoreZero);
    let ev =
        EvidenceSet::new(task.claim_id, task.evidence.to_vec()).map_err(|e| ProtocolError::Config(e.to_string()))?;
    let per_round: Vec<Vec<RoundOutput>> = rounds.iter().map(|r| vec![r.clone()]).collect();
    let trajectory = scorer
        .sfs_trajectory(task.condition_id, &per_round, &ev)
        .map_err(|e| ProtocolError::Config(e.to_string()))?;
    Ok(EgsrOutcome {
        trace,
        rounds,
        trajectory,
        calls,
    })
}

/// Id prefix of injected adversarial passages.
pub const ADVERSARIAL_PREFIX: &str = "adv-";

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::faithfulness::LexicalSimilarity;
    use crate::protocols::mock::{MockBackend, MockMode, MockProfile};

    fn passages(v: &[(&str, &str)]) -> Vec<Passage> {
        v.iter().map(|(i, t)| Passage::new(*i, *t)).collect()
    }

    #[test]
    fn retrieval_ranking() {
        let ev = passages(&[("p3", "gamma delta"), ("p1", "alpha beta gamma"), ("p2", "alpha beta")]);
        let s = LexicalSimilarity;
        let got = retrieve_topk("alpha beta gamma", &ev, &s, 5);
        assert_eq!(got.len(), 3);
        // p1 and p2 tie at 1.0 (overlap coefficient), p3 has 1/2
        let ids: Vec<&str> = got.iter().map(|(p, _)| p.passage_id.as_str()).collect();
        assert_eq!(ids, ["p1", "p2", "p3"]);
        assert_eq!(got[2].1, 0.5);
        let got = retrieve_topk("alpha beta gamma delta epsilon zeta", &ev, &s, 1);
        assert_eq!(got[0].0.passage_id, "p1");
    }

    #[test]
    fn ess_and_convergence() {
        assert_eq!(egsr_ess(&[1.0, 1.0]), 1.0);
        assert_eq!(egsr_ess(&[0.0]), 0.0);
        assert_eq!(egsr_ess(&[1.0, 0.5]), 0.75);
        let cfg = EgsrConfig::default();
        let c = ConvergenceCheck::evaluate(0.8, Some(Verdict::Supports), Some(Verdict::Supports), 0.25, &cfg);
        assert_eq!(c.satisfied(), 3);
        assert!(c.converged(&cfg));
        let c = ConvergenceCheck::evaluate(0.8, None, Some(Verdict::Supports), 0.1, &cfg);
        assert!(!c.converged(&cfg));
        let c = ConvergenceCheck::evaluate(0.5, Some(Verdict::Refutes), Some(Verdict::Refutes), 0.25, &cfg);
        assert!(c.converged(&cfg));
        let mut v = VerdictScores::default();
        assert_eq!((v.leader(), v.gap()), (None, 0.0));
        v.add(Verdict::Supports, 0.75);
        v.add(Verdict::Refutes, 0.25);
        assert_eq!((v.leader(), v.gap()), (Some(Verdict::Supports), 0.5));
    }

    fn evidence() -> Vec<Passage> {
        passages(&[
            ("p1", "Metformin lowered fasting glucose in diabetic adults."),
            ("p2", "Fasting glucose fell within six weeks of metformin therapy."),
            (
                "p3",
                "Gastrointestinal complaints were the commonest metformin side effect.",
            ),
        ])
    }

    fn task(ev: &[Passage]) -> EgsrTask<'_> {
        EgsrTask {
            condition_id: "C8",
            claim_id: "c1",
            claim_text: "Metformin lowers fasting glucose.",
            evidence: ev,
            open: true,
            seed: 3,
        }
    }

    fn mock(profile: MockProfile) -> MockBackend {
        MockBackend::new(
            MockMode::Scripted,
            profile,
            BTreeMap::from([("c1".to_string(), Verdict::Supports)]),
        )
    }

    #[test]
    fn single_iteration_when_answers_pass() {
        let ev = evidence();
        let m = mock(MockProfile {
            grounded: 1,
            ..MockProfile::default()
        });
        let out = egsr_run(task(&ev), &m, &SfsEngine::default(), &EgsrConfig::default()).unwrap();
        assert_eq!(out.trace.iterations.len(), 1);
        assert_eq!(out.trace.termination, Termination::GatePassed);
        assert!(out.trajectory.is_non_decreasing(0.0));
        assert!(out.trajectory.per_round_sfs[1] > out.trajectory.per_round_sfs[0]);
        // the answerer prompt carries neither the claim nor the trace
        for c in out.calls.iter().filter(|c| c.role == Role::Answerer) {
            assert!(!c.prompt.contains("Claim:"));
            assert!(!c.prompt.contains("Reasoning under review"));
        }
    }

    #[test]
    fn runs_all_iterations_when_nothing_passes() {
        let ev = evidence();
        let m = mock(MockProfile {
            hfsv_fidelity: 0.0,
            ..MockProfile::default()
        });
        let out = egsr_run(task(&ev), &m, &SfsEngine::default(), &EgsrConfig::default()).unwrap();
        assert_eq!(out.trace.iterations.len(), 3);
        assert_eq!(out.trace.termination, Termination::MaxIterations);
        assert!(out.trace.iterations.iter().all(|i| i.ess == 0.0));
        assert_eq!(out.rounds.len(), 4);
        assert!(out.trajectory.is_non_decreasing(0.0));
        assert!(matches!(
            egsr_run(task(&[]), &m, &SfsEngine::default(), &EgsrConfig::default()),
            Err(ProtocolError::RetrievalEmpty(_))
        ));
    }
}
