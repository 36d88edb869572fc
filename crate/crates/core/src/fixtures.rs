//! Shipped fixtures, embedded at compile time.

/// Condition configs `C1`..`C16`, in order.
pub const CONDITIONS: [(&str, &str); 16] = [
    ("C1", include_str!("../fixtures/conditions/C1.toml")),
    ("C2", include_str!("../fixtures/conditions/C2.toml")),
    ("C3", include_str!("../fixtures/conditions/C3.toml")),
    ("C4", include_str!("../fixtures/conditions/C4.toml")),
    ("C5", include_str!("../fixtures/conditions/C5.toml")),
    ("C6", include_str!("../fixtures/conditions/C6.toml")),
    ("C7", include_str!("../fixtures/conditions/C7.toml")),
    ("C8", include_str!("../fixtures/conditions/C8.toml")),
    ("C9", include_str!("../fixtures/conditions/C9.toml")),
    ("C10", include_str!("../fixtures/conditions/C10.toml")),
    ("C11", include_str!("../fixtures/conditions/C11.toml")),
    ("C12", include_str!("../fixtures/conditions/C12.toml")),
    ("C13", include_str!("../fixtures/conditions/C13.toml")),
    ("C14", include_str!("../fixtures/conditions/C14.toml")),
    ("C15", include_str!("../fixtures/conditions/C15.toml")),
    ("C16", include_str!("../fixtures/conditions/C16.toml")),
];

/// Fifty claims with five passages each, JSONL.
pub const CLAIMS: &str = include_str!("../fixtures/claims.jsonl");

/// Rating file with a four-rater panel (one high-agreement pair) and a
/// three-rater cohort rating independently at random.
pub const RATINGS: &str = include_str!("../fixtures/ratings.csv");

pub const HYPOTHESES: &str = include_str!("../fixtures/hypotheses.toml");

/// 150 reasoning texts, one per line, mixing simple and compound sentences.
pub const DECOMPOSER_TEXTS: &str = include_str!("../fixtures/decomposer_texts.txt");

/// Scoring fixtures: evidence sensitivity, same verdict with different
/// grounding, and a polarity-flipped paraphrase.
pub const AXIOMS: &str = include_str!("../fixtures/axioms.toml");

/// Chain specs, by name.
pub const CHAINS: [(&str, &str); 4] = [
    ("closed-random", include_str!("../fixtures/chains/closed-random.toml")),
    (
        "debate-then-vote",
        include_str!("../fixtures/chains/debate-then-vote.toml"),
    ),
    ("fixed-identity", include_str!("../fixtures/chains/fixed-identity.toml")),
    (
        "noisy-reinjection",
        include_str!("../fixtures/chains/noisy-reinjection.toml"),
    ),
];

pub fn chain_spec(name: &str) -> Option<&'static str> {
    CHAINS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}
