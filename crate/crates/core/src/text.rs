//! Tokenization shared by the lexical backends and the decomposers.

use std::collections::BTreeSet;

const STOPWORDS: &[&str] = &[
    "a",
    "about",
    "after",
    "all",
    "also",
    "although",
    "an",
    "and",
    "any",
    "are",
    "as",
    "at",
    "be",
    "because",
    "been",
    "being",
    "both",
    "but",
    "by",
    "can",
    "could",
    "did",
    "do",
    "does",
    "each",
    "for",
    "from",
    "had",
    "has",
    "have",
    "he",
    "hence",
    "her",
    "here",
    "his",
    "how",
    "however",
    "i",
    "if",
    "in",
    "into",
    "is",
    "it",
    "its",
    "may",
    "might",
    "more",
    "most",
    "of",
    "on",
    "or",
    "our",
    "over",
    "she",
    "should",
    "since",
    "so",
    "some",
    "such",
    "than",
    "that",
    "the",
    "their",
    "them",
    "then",
    "there",
    "therefore",
    "these",
    "they",
    "this",
    "those",
    "though",
    "through",
    "thus",
    "to",
    "under",
    "up",
    "upon",
    "was",
    "we",
    "were",
    "what",
    "when",
    "where",
    "whereas",
    "which",
    "while",
    "who",
    "whom",
    "why",
    "will",
    "with",
    "would",
    "you",
    "your",
];

const NEGATIONS: &[&str] = &[
    "not", "no", "never", "none", "cannot", "neither", "nor", "without", "nothing", "fails", "fail", "failed", "lacks",
    "absent",
];

pub fn is_stopword(t: &str) -> bool {
    STOPWORDS.binary_search(&t).is_ok()
}

pub fn is_negation(t: &str) -> bool {
    NEGATIONS.contains(&t)
}

/// Lowercased alphanumeric tokens, with `n't` expanded to `not`.
pub fn tokens(text: &str) -> Vec<String> {
    let lowered = text.to_lowercase().replace("n't", " not").replace("cannot", "can not");
    lowered
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// Suffix-stripping stem; stems shorter than three characters are left alone.
pub fn stem(token: &str) -> String {
    for suffix in ["ing", "ed", "es", "s", "e"] {
        if let Some(base) = token.strip_suffix(suffix) {
            if suffix == "s" && token.ends_with("ss") {
                continue;
            }
            if base.chars().count() >= 3 {
                return base.to_string();
            }
        }
    }
    token.to_string()
}

/// Stemmed tokens that are neither stopwords nor negations.
pub fn content_tokens(text: &str) -> Vec<String> {
    tokens(text)
        .into_iter()
        .filter(|t| !is_stopword(t) && !is_negation(t) && t != "can")
        .map(|t| stem(&t))
        .collect()
}

pub fn content_set(text: &str) -> BTreeSet<String> {
    content_tokens(text).into_iter().collect()
}

/// Number of negation tokens.
pub fn negation_count(text: &str) -> usize {
    tokens(text).iter().filter(|t| is_negation(t)).count()
}

/// True when the text carries an odd number of negations.
pub fn is_negated(text: &str) -> bool {
    negation_count(text) % 2 == 1
}
