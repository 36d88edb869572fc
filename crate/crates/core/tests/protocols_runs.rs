use std::collections::BTreeMap;

use groundlab_core::corpus::{parse_claims, ClaimRecord};
use groundlab_core::faithfulness::{SfsEngine, Verdict};
use groundlab_core::fixtures;
use groundlab_core::protocols::{
    builtin_condition, builtin_conditions, classify_protocol, run_condition, Aggregation, ClosureCondition,
    EvidencePolicy, MockBackend, MockMode, ProtocolConfig, ProtocolRegime, Role, RunArtifact, RunOptions,
};

fn claims() -> Vec<ClaimRecord> {
    parse_claims(fixtures::CLAIMS.as_bytes()).unwrap()
}

fn run(cfg: &ProtocolConfig, mode: MockMode, dataset: &[ClaimRecord], seed: u64) -> RunArtifact {
    let key: BTreeMap<String, Verdict> = dataset.iter().map(|c| (c.claim_id.clone(), c.gold_label)).collect();
    let backend = MockBackend::new(mode, cfg.mock.clone(), key);
    let opts = RunOptions {
        seed,
        jobs: 2,
        ..RunOptions::default()
    };
    run_condition(cfg, dataset, &backend, &opts).unwrap()
}

fn cond(id: &str) -> ProtocolConfig {
    builtin_condition(id).unwrap()
}

#[test]
fn single_shot_has_one_round_per_trial() {
    let data: Vec<_> = claims().into_iter().take(3).collect();
    let a = run(&cond("C1"), MockMode::Scripted, &data, 7);
    assert_eq!(a.trials.len(), 3);
    assert!(a.manifest.failures.is_empty());
    for t in &a.trials {
        assert_eq!(t.rounds.len(), 1);
    }
}

#[test]
fn vote_condition_ends_in_a_tally() {
    let data = claims();
    let a = run(&cond("C15"), MockMode::Scripted, &data, 7);
    assert_eq!(a.trials.len(), data.len());
    for t in &a.trials {
        assert!(t.final_text.starts_with("Final vote:"), "{}", t.final_text);
        assert_eq!(t.rounds.len(), 4);
    }
    let engine = SfsEngine::default().with_empty_policy(groundlab_core::faithfulness::EmptyPolicy::ScoreZero);
    let mean: f64 = a
        .trials
        .iter()
        .map(|t| engine.score_text(&t.final_text, &data[t.index].evidence_set()).unwrap())
        .sum::<f64>()
        / a.trials.len() as f64;
    assert!(mean < 0.05, "mean {mean}");
}

#[test]
fn closed_mad_prompts_never_show_evidence_after_t0() {
    let data: Vec<_> = claims().into_iter().take(10).collect();
    for cfg in builtin_conditions() {
        if cfg.egsr.is_some() || cfg.evidence_policy != EvidencePolicy::OnceAtT0 {
            continue;
        }
        let a = run(&cfg, MockMode::Scripted, &data, 3);
        for t in &a.trials {
            for c in &t.calls {
                if c.round == 0 {
                    assert!(c.prompt.contains("Passages:"), "{} round 0", cfg.condition_id);
                } else {
                    assert!(
                        !c.prompt.contains("Passages:"),
                        "{} round {}",
                        cfg.condition_id,
                        c.round
                    );
                }
            }
        }
    }
}

#[test]
fn reinjection_puts_evidence_in_every_round() {
    let mut cfg = cond("C3");
    cfg.condition_id = "C3-reinject".into();
    cfg.evidence_policy = EvidencePolicy::ReinjectEveryRound;
    let data: Vec<_> = claims().into_iter().take(5).collect();
    let a = run(&cfg, MockMode::Scripted, &data, 3);
    for t in &a.trials {
        assert!(t.calls.iter().any(|c| c.round > 0));
        for c in &t.calls {
            assert!(c.prompt.contains("Passages:"), "round {}", c.round);
        }
    }
}

#[test]
fn closed_egsr_consults_only_the_trace() {
    let data: Vec<_> = claims().into_iter().take(10).collect();
    for id in ["C5", "C10"] {
        let a = run(&cond(id), MockMode::Scripted, &data, 3);
        for t in &a.trials {
            for c in t.calls.iter().filter(|c| c.round > 0) {
                assert!(!c.prompt.contains("[p"), "{id}: {}", c.prompt);
            }
        }
    }
    let a = run(&cond("C8"), MockMode::Scripted, &data, 3);
    assert!(a
        .trials
        .iter()
        .flat_map(|t| &t.calls)
        .any(|c| c.round > 0 && c.prompt.contains("[p")));
}

#[test]
fn answerer_never_sees_claim_or_trace() {
    let data: Vec<_> = claims().into_iter().take(10).collect();
    let a = run(&cond("C8"), MockMode::Scripted, &data, 3);
    let answers: Vec<_> = a
        .trials
        .iter()
        .flat_map(|t| t.calls.iter().map(move |c| (t, c)))
        .filter(|(_, c)| c.role == Role::Answerer)
        .collect();
    assert!(!answers.is_empty());
    for (t, c) in answers {
        assert!(!c.prompt.contains(&t.claim_text));
        assert!(!c.prompt.contains("Claim:"));
        assert!(!c.prompt.contains("Reasoning under review"));
    }
}

#[test]
fn distributional_mock_replays_by_seed() {
    let data: Vec<_> = claims().into_iter().take(12).collect();
    for id in ["C3", "C8", "C15"] {
        let cfg = cond(id);
        let a = run(&cfg, MockMode::Distributional, &data, 11);
        let b = run(&cfg, MockMode::Distributional, &data, 11);
        let c = run(&cfg, MockMode::Distributional, &data, 12);
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap(),
            "{id}"
        );
        assert_ne!(a.trials, c.trials, "{id}");
    }
}

#[test]
fn shipped_conditions_classify_by_their_policies() {
    for cfg in builtin_conditions() {
        let l = classify_protocol(&cfg);
        let open = cfg.evidence_policy != EvidencePolicy::OnceAtT0;
        assert_eq!(l.regime == ProtocolRegime::Open, open, "{}", cfg.condition_id);
        assert_eq!(
            open,
            l.violated_conditions.contains(&ClosureCondition::Ii),
            "{}",
            cfg.condition_id
        );
        assert_eq!(
            l.regime == ProtocolRegime::Closed,
            l.violated_conditions.is_empty(),
            "{}",
            cfg.condition_id
        );
        assert_eq!(
            l.vote_floor,
            cfg.aggregation == Aggregation::MajorityVote,
            "{}",
            cfg.condition_id
        );
    }
    let c15 = classify_protocol(&cond("C15"));
    assert_eq!((c15.regime, c15.vote_floor), (ProtocolRegime::Closed, true));
    let c8 = classify_protocol(&cond("C8"));
    assert_eq!(c8.regime, ProtocolRegime::Open);
    assert_eq!(c8.violated_conditions, vec![ClosureCondition::Ii]);
    let c1 = classify_protocol(&cond("C1"));
    assert_eq!(c1.regime, ProtocolRegime::Closed);
    assert!(c1.violated_conditions.is_empty() && !c1.vote_floor);
}

fn trajectories(a: &RunArtifact, data: &[ClaimRecord]) -> Vec<Vec<f64>> {
    let engine = SfsEngine::default().with_empty_policy(groundlab_core::faithfulness::EmptyPolicy::ScoreZero);
    a.trials
        .iter()
        .map(|t| {
            engine
                .sfs_trajectory(a.condition_id(), &t.rounds, &data[t.index].evidence_set())
                .unwrap()
                .per_round_sfs
        })
        .collect()
}

#[test]
fn egsr_composition_never_lowers_a_trial_score() {
    let data = claims();
    let a = run(&cond("C8"), MockMode::Scripted, &data, 7);
    for (t, traj) in a.trials.iter().zip(trajectories(&a, &data)) {
        assert!(
            traj.windows(2).all(|w| w[1] >= w[0] - 1e-12),
            "{}: {traj:?}",
            t.claim_id
        );
    }
}

#[test]
fn decay_mock_loses_grounding_every_round() {
    let data = claims();
    let a = run(&cond("C3"), MockMode::Scripted, &data, 7);
    let trs = trajectories(&a, &data);
    let len = trs[0].len();
    assert_eq!(len, 3);
    let mean: Vec<f64> = (0..len)
        .map(|r| trs.iter().map(|t| t[r]).sum::<f64>() / trs.len() as f64)
        .collect();
    assert!(mean.windows(2).all(|w| w[1] < w[0]), "{mean:?}");
}
