use std::sync::Arc;

use groundlab_core::faithfulness::{
    ClauseDecomposer, Decomposer, EmptyPolicy, EvidenceSet, Passage, SentenceDecomposer, SfsEngine, Verdict,
};
use groundlab_core::fixtures;
use groundlab_core::stats::{pearson, spearman};
use proptest::prelude::*;
use serde::Deserialize;

#[derive(Deserialize)]
struct Axioms {
    evidence_sensitivity: EvidenceSensitivity,
    same_verdict: SameVerdict,
    polarity_flip: PolarityFlip,
}

#[derive(Deserialize)]
struct EvidenceSensitivity {
    trace: String,
    evidence_a: Vec<Passage>,
    evidence_b: Vec<Passage>,
}

#[derive(Deserialize)]
struct SameVerdict {
    verdict: Verdict,
    trace_a: String,
    trace_b: String,
    evidence: Vec<Passage>,
}

#[derive(Deserialize)]
struct PolarityFlip {
    claim: String,
    evidence: Vec<Passage>,
}

fn axioms() -> Axioms {
    toml::from_str(fixtures::AXIOMS).unwrap()
}

fn ev(passages: &[Passage]) -> EvidenceSet {
    EvidenceSet::new("fixture", passages.to_vec()).unwrap()
}

const PASSAGES: [&str; 6] = [
    "Zinc lozenges shorten the duration of the common cold.",
    "Metformin lowers fasting glucose in adults with type 2 diabetes.",
    "Statin therapy reduces cardiovascular events in high risk patients.",
    "Regular aerobic exercise improves insulin sensitivity in older adults.",
    "Helicobacter pylori infection increases gastric ulcer risk.",
    "Vitamin D supplementation reduces fracture risk in elderly women.",
];

/// Word counts match the passage in the same slot.
const FABRICATED: [&str; 6] = [
    "Qorvan tablets cure the zelbar syndrome in most sailors.",
    "Blue quartz bracelets double marathon stamina in runners with feet.",
    "Moonlight exposure regrows damaged knee cartilage in young athletes.",
    "Plinth extract erases seasonal migraine permanently in older adults.",
    "Copper socks halve the incidence of gout.",
    "Tarvel root tea reverses hearing loss in young teenagers.",
];

fn evidence() -> EvidenceSet {
    ev(&PASSAGES
        .iter()
        .enumerate()
        .map(|(i, t)| Passage::new(format!("p{}", i + 1), *t))
        .collect::<Vec<_>>())
}

#[test]
fn evidence_sensitivity_fixture() {
    let a = axioms().evidence_sensitivity;
    let engine = SfsEngine::default();
    let under_a = engine.score_text(&a.trace, &ev(&a.evidence_a)).unwrap();
    let under_b = engine.score_text(&a.trace, &ev(&a.evidence_b)).unwrap();
    assert_eq!(under_a, 1.0);
    assert_eq!(under_b, 0.5);
}

#[test]
fn same_verdict_different_grounding_fixture() {
    let s = axioms().same_verdict;
    let engine = SfsEngine::default();
    let e = ev(&s.evidence);
    let a = engine.sfs(&s.trace_a, &e, Some(s.verdict), None, None).unwrap();
    let b = engine.sfs(&s.trace_b, &e, Some(s.verdict), None, None).unwrap();
    assert!(a.sfs - b.sfs > 0.05, "{} vs {}", a.sfs, b.sfs);
    // trace_a: both claims supported; trace_b: one of two
    assert_eq!(b.sfs, 0.5);
    assert!((a.sfs - b.sfs - 0.5).abs() < 0.15);
}

#[test]
fn polarity_flip_closes_the_gate() {
    let p = axioms().polarity_flip;
    let engine = SfsEngine::default();
    let e = ev(&p.evidence);
    let scores = engine
        .score_claims(&engine.decompose(&p.claim).unwrap(), &e, None)
        .unwrap();
    assert_eq!(scores.len(), 1);
    assert!(scores[0].similarity >= 0.7);
    assert_eq!(scores[0].gate, 0);
    assert_eq!(scores[0].support_mass, 0.0);
}

#[test]
fn reports_are_byte_identical_across_engines() {
    let text = format!("{} {} {}", PASSAGES[0], FABRICATED[1], PASSAGES[3]);
    let a = SfsEngine::default()
        .sfs(&text, &evidence(), Some(Verdict::Supports), Some(PASSAGES[0]), None)
        .unwrap()
        .to_json();
    let b = SfsEngine::default()
        .sfs(&text, &evidence(), Some(Verdict::Supports), Some(PASSAGES[0]), None)
        .unwrap()
        .to_json();
    assert_eq!(a, b);
}

/// Sentence picks: `true` restates a passage, `false` fabricates.
fn trace(picks: &[(bool, usize)]) -> String {
    picks
        .iter()
        .map(|&(grounded, i)| if grounded { PASSAGES[i % 6] } else { FABRICATED[i % 6] })
        .collect::<Vec<_>>()
        .join(" ")
}

fn picks() -> impl Strategy<Value = Vec<(bool, usize)>> {
    prop::collection::vec((any::<bool>(), 0usize..6), 1..8)
}

proptest! {
    #[test]
    fn supported_claims_never_lower_support_mass(base in picks(), extra in 0usize..6) {
        let engine = SfsEngine::default();
        let before = engine.sfs(&trace(&base), &evidence(), None, None, None).unwrap();
        let mut more = base.clone();
        more.push((true, extra));
        let after = engine.sfs(&trace(&more), &evidence(), None, None, None).unwrap();
        prop_assert_eq!(after.claim_count, before.claim_count + 1);
        prop_assert!(after.total_support_mass() >= before.total_support_mass());
    }

    #[test]
    fn fabrications_strictly_lower_a_positive_score(base in picks(), extra in 0usize..6) {
        let engine = SfsEngine::default();
        let before = engine.sfs(&trace(&base), &evidence(), None, None, None).unwrap();
        prop_assume!(before.sfs > 0.0);
        let mut more = base.clone();
        more.push((false, extra));
        let after = engine.sfs(&trace(&more), &evidence(), None, None, None).unwrap();
        prop_assert!(after.sfs < before.sfs);
    }

    #[test]
    fn score_is_the_grounded_share(base in picks()) {
        // restatements score 1 and fabrications 0 under the lexical backends
        let expected = base.iter().filter(|p| p.0).count() as f64 / base.len() as f64;
        let got = SfsEngine::default().score_text(&trace(&base), &evidence()).unwrap();
        prop_assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn reruns_serialize_identically(base in picks()) {
        let e = SfsEngine::default().with_empty_policy(EmptyPolicy::ScoreZero);
        let a = e.sfs(&trace(&base), &evidence(), Some(Verdict::Refutes), Some(PASSAGES[2]), None).unwrap();
        let b = e.clone().sfs(&trace(&base), &evidence(), Some(Verdict::Refutes), Some(PASSAGES[2]), None).unwrap();
        prop_assert_eq!(a.to_json(), b.to_json());
    }
}

#[test]
fn decomposers_agree_on_claim_counts_across_the_shipped_texts() {
    let texts: Vec<&str> = fixtures::DECOMPOSER_TEXTS
        .lines()
        .filter(|l| !l.trim().is_empty())
        .collect();
    assert_eq!(texts.len(), 150);
    let count = |d: &dyn Decomposer, t: &str| d.decompose(t).map_or(0.0, |c| c.len() as f64);
    let a: Vec<f64> = texts.iter().map(|t| count(&ClauseDecomposer, t)).collect();
    let b: Vec<f64> = texts.iter().map(|t| count(&SentenceDecomposer, t)).collect();
    assert_ne!(a, b, "decomposers must be distinct");
    let rho = spearman(&a, &b).unwrap();
    assert!(rho >= 0.5, "rho {rho}");
}

/// Base traces of four claims with k grounded and slot-matched lengths, each
/// padded by 0..=3 methodology sentences that carry no claims.
#[test]
fn verbosity_does_not_track_the_score() {
    const FILLER: [&str; 3] = [
        "Let me think about the evidence carefully.",
        "I will reason step by step before answering.",
        "In summary, I need to weigh each passage in turn.",
    ];
    let engine = SfsEngine::default().with_decomposer(Arc::new(ClauseDecomposer));
    let (mut len, mut sfs) = (Vec::new(), Vec::new());
    for k in 0..=4usize {
        for rot in 0..6usize {
            let base: Vec<(bool, usize)> = (0..4).map(|i| (i < k, rot + i)).collect();
            for pad in 0..=3usize {
                let mut t = trace(&base);
                for f in FILLER.iter().take(pad) {
                    t.push(' ');
                    t.push_str(f);
                }
                let r = engine.sfs(&t, &evidence(), None, None, None).unwrap();
                assert_eq!(r.claim_count, 4);
                len.push(t.split_whitespace().count() as f64);
                sfs.push(r.sfs);
            }
        }
    }
    let r = pearson(&len, &sfs).unwrap();
    assert!(r.abs() <= 0.15, "pearson {r}");
}
