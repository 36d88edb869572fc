//! Rule-based claim decomposers.
//!
//! Both decomposers split sentences, then split compound sentences at
//! connectives when each side keeps at least two content tokens. A clause is
//! excluded when it is a methodology statement ("I will...", "step by step"),
//! a verdict or tally line, or has fewer than two content tokens.

use std::sync::LazyLock;

use regex::Regex;

use super::{AtomicClaim, FaithError, Result};
use crate::text::content_tokens;

pub trait Decomposer: Send + Sync {
    fn name(&self) -> &str;
    fn decompose(&self, text: &str) -> Result<Vec<AtomicClaim>>;
}

/// Splits at every coordinating, causal and relative connective.
#[derive(Debug, Clone, Copy, Default)]
pub struct ClauseDecomposer;

/// Splits sentences and causal subordinate clauses only.
#[derive(Debug, Clone, Copy, Default)]
pub struct SentenceDecomposer;

const CLAUSE_CONNECTIVES: &[&str] = &[
    "because",
    "since",
    "although",
    "though",
    "whereas",
    "while",
    "but",
    "however",
    "therefore",
    "thus",
    "hence",
    "so",
    "which",
    "and",
];

const CAUSAL_CONNECTIVES: &[&str] = &["because", "since"];

const META_PHRASES: &[&str] = &[
    "i will",
    "i'll",
    "i am going to",
    "let me",
    "let's",
    "let us",
    "step by step",
    "in summary",
    "to summarize",
    "i think",
    "we need to",
    "i need to",
    "my answer",
    "first, i",
    "consider the",
];

static TALLY: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?i:\b(verdict|votes?|tally|final answer|confidence)\b)|\d+\s*-\s*\d+|\b(SUPPORTS|REFUTES|NOT-ENOUGH-INFO)\b",
    )
    .expect("static pattern")
});

const MIN_CONTENT_TOKENS: usize = 2;

impl Decomposer for ClauseDecomposer {
    fn name(&self) -> &str {
        "clause"
    }

    fn decompose(&self, text: &str) -> Result<Vec<AtomicClaim>> {
        decompose_with(text, CLAUSE_CONNECTIVES)
    }
}

impl Decomposer for SentenceDecomposer {
    fn name(&self) -> &str {
        "sentence"
    }

    fn decompose(&self, text: &str) -> Result<Vec<AtomicClaim>> {
        decompose_with(text, CAUSAL_CONNECTIVES)
    }
}

pub fn decomposer_by_name(name: &str) -> Result<Box<dyn Decomposer>> {
    match name {
        "clause" => Ok(Box::new(ClauseDecomposer)),
        "sentence" => Ok(Box::new(SentenceDecomposer)),
        other => Err(FaithError::UnknownDecomposer(other.into())),
    }
}

fn decompose_with(text: &str, connectives: &[&str]) -> Result<Vec<AtomicClaim>> {
    let mut claims = Vec::new();
    for (s, e) in sentence_spans(text) {
        let mut parts = Vec::new();
        split_clauses(text, s, e, connectives, &mut parts);
        for (a, b) in parts {
            let (a, b) = trim_span(text, a, b);
            if a >= b {
                continue;
            }
            let clause = &text[a..b];
            if is_excluded(clause) {
                continue;
            }
            claims.push(AtomicClaim {
                text: clause.to_string(),
                source_span: Some((a, b)),
            });
        }
    }
    if claims.is_empty() {
        Err(FaithError::EmptyDecomposition)
    } else {
        Ok(claims)
    }
}

fn is_excluded(clause: &str) -> bool {
    let lower = clause.to_lowercase();
    META_PHRASES.iter().any(|m| lower.contains(m))
        || TALLY.is_match(clause)
        || content_tokens(clause).len() < MIN_CONTENT_TOKENS
}

/// Sentence byte spans; boundaries are `.`, `!`, `?`, `;` followed by
/// whitespace or end of text, and newlines.
fn sentence_spans(text: &str) -> Vec<(usize, usize)> {
    let bytes = text.as_bytes();
    let mut spans = Vec::new();
    let mut start = 0;
    for (i, &b) in bytes.iter().enumerate() {
        let boundary = match b {
            b'\n' => true,
            b'.' | b'!' | b'?' | b';' => bytes.get(i + 1).is_none_or(|n| n.is_ascii_whitespace()),
            _ => false,
        };
        if boundary {
            spans.push((start, i));
            start = i + 1;
        }
    }
    spans.push((start, bytes.len()));
    spans
        .into_iter()
        .map(|(a, b)| trim_span(text, a, b))
        .filter(|(a, b)| a < b)
        .collect()
}

fn trim_span(text: &str, mut a: usize, mut b: usize) -> (usize, usize) {
    let bytes = text.as_bytes();
    let junk = |c: u8| c.is_ascii_whitespace() || matches!(c, b',' | b'.' | b';' | b':' | b'!' | b'?');
    while a < b && junk(bytes[a]) {
        a += 1;
    }
    while b > a && junk(bytes[b - 1]) {
        b -= 1;
    }
    (a, b)
}

/// Byte offset of the first whole-word, case-insensitive occurrence of `word`
/// in `text[a..b]` that is neither at the very start nor the very end.
fn find_word(text: &str, a: usize, b: usize, word: &str) -> Option<usize> {
    let hay = text[a..b].to_ascii_lowercase();
    let hb = hay.as_bytes();
    let is_word = |c: u8| c.is_ascii_alphanumeric() || c == b'\'';
    let mut from = 0;
    while let Some(off) = hay[from..].find(word) {
        let p = from + off;
        let q = p + word.len();
        let left_ok = p > 0 && !is_word(hb[p - 1]);
        let right_ok = q < hb.len() && !is_word(hb[q]);
        if left_ok && right_ok {
            return Some(a + p);
        }
        from = p + 1;
    }
    None
}

fn split_clauses(text: &str, a: usize, b: usize, connectives: &[&str], out: &mut Vec<(usize, usize)>) {
    for conn in connectives {
        let mut search_from = a;
        while let Some(p) = find_word(text, search_from, b, conn) {
            let left = trim_span(text, a, p);
            let right = trim_span(text, p + conn.len(), b);
            let ok = content_tokens(&text[left.0..left.1]).len() >= MIN_CONTENT_TOKENS
                && content_tokens(&text[right.0..right.1]).len() >= MIN_CONTENT_TOKENS;
            if ok {
                split_clauses(text, left.0, left.1, connectives, out);
                split_clauses(text, right.0, right.1, connectives, out);
                return;
            }
            search_from = p + conn.len();
        }
    }
    out.push((a, b));
}
