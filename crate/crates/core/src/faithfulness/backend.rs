use crate::text::{content_set, is_negated};

use super::Verdict;

/// Graded semantic similarity in `[0, 1]`.
pub trait SimilarityBackend: Send + Sync {
    fn name(&self) -> &str;
    fn deterministic(&self) -> bool {
        true
    }
    /// Backends that cannot take concurrent calls return true; batch scoring
    /// then runs sequentially.
    fn single_flight(&self) -> bool {
        false
    }
    fn similarity(&self, a: &str, b: &str) -> f64;
}

/// Entailment and contradiction scores in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntailmentJudgment {
    pub entail: f64,
    pub contradict: f64,
}

/// Directional verifier `premise |= hypothesis`, thresholded by the engine
/// into a gate bit.
pub trait EntailmentBackend: Send + Sync {
    fn name(&self) -> &str;
    fn deterministic(&self) -> bool {
        true
    }
    fn single_flight(&self) -> bool {
        false
    }
    fn judge(&self, premise: &str, hypothesis: &str) -> EntailmentJudgment;
    /// Stance of `statement` toward `reference`: supporting when they agree in
    /// polarity.
    fn polarity(&self, statement: &str, reference: &str) -> Verdict {
        if is_negated(statement) == is_negated(reference) {
            Verdict::Supports
        } else {
            Verdict::Refutes
        }
    }
}

/// Overlap coefficient `|A n B| / min(|A|, |B|)` over stemmed content tokens.
#[derive(Debug, Clone, Copy, Default)]
pub struct LexicalSimilarity;

impl SimilarityBackend for LexicalSimilarity {
    fn name(&self) -> &str {
        "lexical-overlap"
    }

    fn similarity(&self, a: &str, b: &str) -> f64 {
        let (sa, sb) = (content_set(a), content_set(b));
        let denom = sa.len().min(sb.len());
        if denom == 0 {
            return 0.0;
        }
        sa.intersection(&sb).count() as f64 / denom as f64
    }
}

/// Share of the hypothesis' content tokens found in the premise. The score is
/// routed to `entail` when both sides have the same negation parity and to
/// `contradict` otherwise.
#[derive(Debug, Clone, Copy, Default)]
pub struct LexicalEntailment;

impl EntailmentBackend for LexicalEntailment {
    fn name(&self) -> &str {
        "lexical-containment"
    }

    fn judge(&self, premise: &str, hypothesis: &str) -> EntailmentJudgment {
        let (p, h) = (content_set(premise), content_set(hypothesis));
        if h.is_empty() {
            return EntailmentJudgment {
                entail: 0.0,
                contradict: 0.0,
            };
        }
        let c = h.intersection(&p).count() as f64 / h.len() as f64;
        if is_negated(premise) == is_negated(hypothesis) {
            EntailmentJudgment {
                entail: c,
                contradict: 0.0,
            }
        } else {
            EntailmentJudgment {
                entail: 0.0,
                contradict: c,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexical_backends() {
        let s = LexicalSimilarity;
        assert_eq!(s.similarity("Aspirin reduces fever", "aspirin reduced the fever"), 1.0);
        assert_eq!(s.similarity("alpha beta", "gamma delta"), 0.0);
        assert_eq!(s.similarity("", "gamma"), 0.0);
        let e = LexicalEntailment;
        let j = e.judge("Aspirin reduces fever in adults", "aspirin reduces fever");
        assert_eq!((j.entail, j.contradict), (1.0, 0.0));
        let j = e.judge("Aspirin does not reduce fever", "aspirin reduces fever");
        assert_eq!((j.entail, j.contradict), (0.0, 1.0));
        assert_eq!(e.polarity("X does not cause Y", "X causes Y"), Verdict::Refutes);
    }
}
