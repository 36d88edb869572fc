use std::time::Instant;

use rayon::prelude::*;

use super::artifact::{FailureReason, RunArtifact, RunManifest, TrialFailure, TrialRecord, SCHEMA_VERSION};
use super::backend::{call, parse_verdict, AgentBackend, AgentRequest, CallRecord, Role};
use super::config::{Aggregation, ContextWindow, EvidencePolicy, ProtocolConfig, RoleStructure};
use super::egsr::{egsr_run, retrieve_topk, EgsrTask, ADVERSARIAL_PREFIX};
use super::mock::split_sentences;
use super::regime::classify_protocol;
use super::{ProtocolError, Result};
use crate::corpus::ClaimRecord;
use crate::faithfulness::{Passage, RoundOutput, SfsEngine, Verdict};
use crate::rng::{derive_seed, hash_str};

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub seed: u64,
    /// Worker threads for trials.
    pub jobs: usize,
    /// Gate used by the EGSR checker.
    pub checker: SfsEngine,
    pub dataset_name: String,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            jobs: 1,
            checker: SfsEngine::default(),
            dataset_name: "dataset".into(),
        }
    }
}

/// Claim-level inputs shared by every call of one trial.
#[derive(Debug, Clone)]
pub struct TrialContext {
    pub condition_id: String,
    pub claim_id: String,
    pub claim_text: String,
    /// Evidence in the agents' view at t=0.
    pub evidence: Vec<Passage>,
    pub seed: u64,
}

/// Majority verdict and tally line. Exact ties give NOT-ENOUGH-INFO;
/// outputs without a verdict abstain.
pub fn aggregate_votes(outputs: &[RoundOutput]) -> (Verdict, String) {
    let mut counts = [0usize; 3];
    for o in outputs {
        if let Some(v) = o.verdict {
            counts[v.index()] += 1;
        }
    }
    let cast: usize = counts.iter().sum();
    let top = counts.iter().copied().max().unwrap_or(0);
    let leaders: Vec<Verdict> = Verdict::ALL.into_iter().filter(|v| counts[v.index()] == top).collect();
    let verdict = if top > 0 && leaders.len() == 1 {
        leaders[0]
    } else {
        Verdict::NotEnoughInfo
    };
    let mut sorted = counts.to_vec();
    sorted.sort_by(|a, b| b.cmp(a));
    while sorted.len() > 2 && sorted.last() == Some(&0) {
        sorted.pop();
    }
    let split: Vec<String> = sorted.iter().map(usize::to_string).collect();
    (
        verdict,
        format!("Final vote: {} ({cast} votes: {})", verdict.as_str(), split.join("-")),
    )
}

fn agent_ids(cfg: &ProtocolConfig) -> Vec<String> {
    let mut ids = Vec::with_capacity(cfg.voters());
    for a in 0..cfg.agent_count {
        for s in 0..cfg.samples {
            ids.push(if cfg.samples == 1 {
                format!("a{a}")
            } else {
                format!("a{a}.{s}")
            });
        }
    }
    ids
}

fn to_output(round: usize, agent: &str, text: String) -> RoundOutput {
    let parsed = parse_verdict(&text);
    RoundOutput {
        round_index: round,
        agent_id: agent.to_string(),
        text,
        verdict: parsed.map(|p| p.0),
        confidence: parsed.map_or(0.0, |p| p.1),
    }
}

fn round_seed(ctx: &TrialContext, round: usize, agent: &str) -> u64 {
    derive_seed(ctx.seed, &[round as u64, hash_str(agent)])
}

fn initial_round(
    cfg: &ProtocolConfig,
    ctx: &TrialContext,
    backend: &dyn AgentBackend,
) -> Result<(Vec<RoundOutput>, Vec<CallRecord>)> {
    let mut outs = Vec::new();
    let mut calls = Vec::new();
    for id in agent_ids(cfg) {
        let mut req = AgentRequest::new(
            Role::Agent,
            &ctx.condition_id,
            &ctx.claim_id,
            &id,
            0,
            round_seed(ctx, 0, &id),
        );
        req.claim_text = Some(ctx.claim_text.clone());
        req.evidence = ctx.evidence.clone();
        let (resp, rec) = call(backend, &req)?;
        calls.push(rec);
        outs.push(to_output(0, &id, resp.text));
    }
    Ok((outs, calls))
}

/// One exchange round: every agent sees the peers' outputs of the previous
/// round (or all rounds with a full-history window) and the claim text.
/// Evidence is visible only when the policy re-injects it.
pub fn mad_step(
    cfg: &ProtocolConfig,
    ctx: &TrialContext,
    history: &[Vec<RoundOutput>],
    backend: &dyn AgentBackend,
) -> Result<(Vec<RoundOutput>, Vec<CallRecord>)> {
    let t = history.len();
    let prev = history
        .last()
        .ok_or_else(|| ProtocolError::Config("mad_step needs a previous round".into()))?;
    let visible: Vec<RoundOutput> = match cfg.context_window {
        ContextWindow::PreviousRound => prev.clone(),
        ContextWindow::FullHistory => history.iter().flatten().cloned().collect(),
    };
    let mut outs = Vec::new();
    let mut calls = Vec::new();
    for (i, id) in agent_ids(cfg).iter().enumerate() {
        if cfg.role_structure == RoleStructure::Unilateral && i > 0 {
            // only the proponent revises; the others stand by their output
            let mut kept = prev[i].clone();
            kept.round_index = t;
            outs.push(kept);
            continue;
        }
        let mut req = AgentRequest::new(
            Role::Agent,
            &ctx.condition_id,
            &ctx.claim_id,
            id,
            t,
            round_seed(ctx, t, id),
        );
        req.claim_text = Some(ctx.claim_text.clone());
        req.history = visible.clone();
        if cfg.evidence_policy == EvidencePolicy::ReinjectEveryRound {
            req.evidence = ctx.evidence.clone();
        }
        let (resp, rec) = call(backend, &req)?;
        calls.push(rec);
        outs.push(to_output(t, id, resp.text));
    }
    Ok((outs, calls))
}

fn finalize(
    cfg: &ProtocolConfig,
    ctx: &TrialContext,
    rounds: &[Vec<RoundOutput>],
    backend: &dyn AgentBackend,
    calls: &mut Vec<CallRecord>,
) -> Result<RoundOutput> {
    let last = rounds.last().expect("round 0 exists");
    let t = rounds.len();
    match cfg.aggregation {
        Aggregation::None => Ok(last[0].clone()),
        Aggregation::MajorityVote => {
            let (v, tally) = aggregate_votes(last);
            Ok(RoundOutput {
                round_index: t,
                agent_id: "tally".into(),
                text: tally,
                verdict: Some(v),
                confidence: vote_share(last, v),
            })
        }
        Aggregation::ConformityVote => {
            let (v, tally) = aggregate_votes(last);
            let lead = last.iter().find(|o| o.verdict == Some(v)).unwrap_or(&last[0]);
            let body = split_sentences(&lead.text).join(" ");
            let text = if body.is_empty() {
                tally
            } else {
                format!("{body}\n{tally}")
            };
            Ok(RoundOutput {
                round_index: t,
                agent_id: "tally".into(),
                text,
                verdict: Some(v),
                confidence: vote_share(last, v),
            })
        }
        Aggregation::Summary | Aggregation::DebaterJudge => {
            let (role, id) = if cfg.aggregation == Aggregation::Summary {
                (Role::Summarizer, "summarizer")
            } else {
                (Role::Judge, "judge")
            };
            let mut req = AgentRequest::new(role, &ctx.condition_id, &ctx.claim_id, id, t, round_seed(ctx, t, id));
            req.claim_text = Some(ctx.claim_text.clone());
            req.history = match cfg.context_window {
                ContextWindow::PreviousRound => last.clone(),
                ContextWindow::FullHistory => rounds.iter().flatten().cloned().collect(),
            };
            let (resp, rec) = call(backend, &req)?;
            calls.push(rec);
            Ok(to_output(t, id, resp.text))
        }
    }
}

fn vote_share(outputs: &[RoundOutput], v: Verdict) -> f64 {
    if outputs.is_empty() {
        return 0.0;
    }
    outputs.iter().filter(|o| o.verdict == Some(v)).count() as f64 / outputs.len() as f64
}

/// Contradicting copies of the first `n` passages, with ids `adv-1`, `adv-2`, ...
pub fn adversarial_passages(evidence: &[Passage], n: usize) -> Vec<Passage> {
    evidence
        .iter()
        .take(n)
        .enumerate()
        .map(|(i, p)| {
            let mut chars = p.text.trim().chars();
            let body: String = match chars.next() {
                Some(c) => c.to_lowercase().chain(chars).collect(),
                None => String::new(),
            };
            Passage::new(
                format!("{ADVERSARIAL_PREFIX}{}", i + 1),
                format!("It is not the case that {}.", body.trim_end_matches('.')),
            )
        })
        .collect()
}

/// Passages in the agents' view at t=0.
pub fn visible_evidence(
    cfg: &ProtocolConfig,
    claim: &ClaimRecord,
    checker: &SfsEngine,
) -> (Vec<Passage>, Vec<Passage>) {
    let injected = adversarial_passages(&claim.evidence, cfg.adversarial_passages);
    let mut pool = claim.evidence.clone();
    pool.extend(injected.iter().cloned());
    let view = match cfg.retrieve_k {
        Some(k) => retrieve_topk(&claim.claim_text, &pool, checker.similarity.as_ref(), k)
            .into_iter()
            .map(|(p, _)| p.clone())
            .collect(),
        None => pool,
    };
    (view, injected)
}

pub fn run_trial(
    cfg: &ProtocolConfig,
    claim: &ClaimRecord,
    index: usize,
    backend: &dyn AgentBackend,
    opts: &RunOptions,
) -> Result<TrialRecord> {
    let start = Instant::now();
    let (evidence, injected) = visible_evidence(cfg, claim, &opts.checker);
    let ctx = TrialContext {
        condition_id: cfg.condition_id.clone(),
        claim_id: claim.claim_id.clone(),
        claim_text: claim.claim_text.clone(),
        evidence,
        seed: derive_seed(opts.seed, &[hash_str(&cfg.condition_id), hash_str(&claim.claim_id)]),
    };
    let mut calls = Vec::new();
    let (rounds, final_out, egsr) = if let Some(ecfg) = &cfg.egsr {
        let task = EgsrTask {
            condition_id: &ctx.condition_id,
            claim_id: &ctx.claim_id,
            claim_text: &ctx.claim_text,
            evidence: &ctx.evidence,
            open: cfg.evidence_policy != EvidencePolicy::OnceAtT0,
            seed: ctx.seed,
        };
        let out = egsr_run(task, backend, &opts.checker, ecfg)?;
        calls.extend(out.calls);
        let last = out.rounds.last().cloned().expect("round 0 exists");
        let rounds = out.rounds.into_iter().map(|r| vec![r]).collect();
        (rounds, last, Some(out.trace))
    } else {
        let (r0, c0) = initial_round(cfg, &ctx, backend)?;
        calls.extend(c0);
        let mut rounds = vec![r0];
        for _ in 0..cfg.max_rounds {
            let (r, c) = mad_step(cfg, &ctx, &rounds, backend)?;
            calls.extend(c);
            rounds.push(r);
        }
        let fin = finalize(cfg, &ctx, &rounds, backend, &mut calls)?;
        (rounds, fin, None)
    };
    let verdict = final_out.verdict.unwrap_or(Verdict::NotEnoughInfo);
    let deterministic = backend.identity().deterministic;
    Ok(TrialRecord {
        index,
        claim_id: claim.claim_id.clone(),
        claim_text: claim.claim_text.clone(),
        gold_label: claim.gold_label,
        rounds,
        final_text: final_out.text.clone(),
        final_verdict: verdict,
        final_confidence: final_out.confidence,
        correct: verdict == claim.gold_label,
        injected_passages: injected,
        egsr,
        tokens_in: calls.iter().map(|c| c.tokens_in).sum(),
        tokens_out: calls.iter().map(|c| c.tokens_out).sum(),
        calls,
        wall_ms: (!deterministic).then(|| start.elapsed().as_millis() as u64),
    })
}

/// Runs every claim of `dataset` under `cfg`. Trial failures are recorded in
/// the manifest and never abort the run; trial order follows the dataset.
pub fn run_condition(
    cfg: &ProtocolConfig,
    dataset: &[ClaimRecord],
    backend: &dyn AgentBackend,
    opts: &RunOptions,
) -> Result<RunArtifact> {
    cfg.validate()?;
    backend.available()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs.max(1))
        .build()
        .map_err(|e| ProtocolError::Config(format!("worker pool: {e}")))?;
    let results: Vec<Result<TrialRecord>> = pool.install(|| {
        dataset
            .par_iter()
            .enumerate()
            .map(|(i, c)| run_trial(cfg, c, i, backend, opts))
            .collect()
    });
    let mut trials = Vec::new();
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(t) => trials.push(t),
            Err(e) => {
                tracing::warn!(claim = %dataset[i].claim_id, error = %e, "trial failed");
                failures.push(TrialFailure {
                    index: i,
                    claim_id: dataset[i].claim_id.clone(),
                    reason: FailureReason::of(&e),
                    message: e.to_string(),
                });
            }
        }
    }
    Ok(RunArtifact {
        manifest: RunManifest {
            schema_version: SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            condition: cfg.clone(),
            regime: classify_protocol(cfg),
            seed: opts.seed,
            backend: backend.identity(),
            dataset: opts.dataset_name.clone(),
            dataset_size: dataset.len(),
            trial_count: trials.len(),
            failures,
        },
        trials,
    })
}
