use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::agreement::emc;
use super::{
    AtomicClaim, ClaimScore, ClauseDecomposer, Decomposer, EntailmentBackend, EvidenceSet, FaithError,
    FaithfulnessTrajectory, LexicalEntailment, LexicalSimilarity, Result, RoundOutput, SimilarityBackend, Verdict,
};

/// Default entailment-gate threshold; also the default citation threshold.
pub const DEFAULT_TAU: f64 = 0.7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmptyPolicy {
    /// Surface `EmptyDecomposition` to the caller.
    #[default]
    Error,
    /// Score an empty decomposition as 0 on every metric.
    ScoreZero,
}

/// Decomposer, similarity and gate backends plus thresholds.
#[derive(Clone)]
pub struct SfsEngine {
    pub decomposer: Arc<dyn Decomposer>,
    pub similarity: Arc<dyn SimilarityBackend>,
    pub entailment: Arc<dyn EntailmentBackend>,
    pub tau: f64,
    pub tau_cite: f64,
    pub empty_policy: EmptyPolicy,
}

impl Default for SfsEngine {
    fn default() -> Self {
        Self {
            decomposer: Arc::new(ClauseDecomposer),
            similarity: Arc::new(LexicalSimilarity),
            entailment: Arc::new(LexicalEntailment),
            tau: DEFAULT_TAU,
            tau_cite: DEFAULT_TAU,
            empty_policy: EmptyPolicy::Error,
        }
    }
}

impl std::fmt::Debug for SfsEngine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SfsEngine")
            .field("decomposer", &self.decomposer.name())
            .field("similarity", &self.similarity.name())
            .field("entailment", &self.entailment.name())
            .field("tau", &self.tau)
            .field("tau_cite", &self.tau_cite)
            .field("empty_policy", &self.empty_policy)
            .finish()
    }
}

/// Scored trace. Field order is the serialization order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SfsReport {
    pub sfs: f64,
    pub claim_count: usize,
    pub eur: f64,
    pub rcva: f64,
    pub emc: Option<f64>,
    pub empty_decomposition: bool,
    pub tau: f64,
    pub tau_cite: f64,
    pub decomposer: String,
    pub similarity_backend: String,
    pub entailment_backend: String,
    pub assumed_definitions: Vec<String>,
    pub claim_scores: Vec<ClaimScore>,
}

impl SfsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn total_support_mass(&self) -> f64 {
        self.claim_scores.iter().map(|c| c.support_mass).sum()
    }
}

impl SfsEngine {
    pub fn with_decomposer(mut self, d: Arc<dyn Decomposer>) -> Self {
        self.decomposer = d;
        self
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }

    pub fn with_tau_cite(mut self, tau_cite: f64) -> Self {
        self.tau_cite = tau_cite;
        self
    }

    pub fn with_empty_policy(mut self, p: EmptyPolicy) -> Self {
        self.empty_policy = p;
        self
    }

    pub fn decompose(&self, text: &str) -> Result<Vec<AtomicClaim>> {
        self.decomposer.decompose(text)
    }

    /// `sim(c, e) * gate(e |= c)` against one passage.
    fn product(&self, claim: &str, passage: &str) -> (f64, u8) {
        let sim = self.similarity.similarity(claim, passage).clamp(0.0, 1.0);
        let gate = u8::from(self.entailment.judge(passage, claim).entail >= self.tau);
        (sim, gate)
    }

    /// Best passage by support mass, then similarity; ties go to the lowest
    /// passage id.
    pub fn score_claim(
        &self,
        claim: &AtomicClaim,
        evidence: &EvidenceSet,
        reference: Option<&str>,
    ) -> Result<ClaimScore> {
        if evidence.is_empty() {
            return Err(FaithError::EmptyEvidence);
        }
        let mut best: Option<(f64, f64, u8, &str)> = None;
        for p in &evidence.passages {
            let (sim, gate) = self.product(&claim.text, &p.text);
            let mass = sim * f64::from(gate);
            let better = match best {
                None => true,
                Some((bm, bs, _, bid)) => {
                    mass > bm || (mass == bm && sim > bs) || (mass == bm && sim == bs && p.passage_id.as_str() < bid)
                }
            };
            if better {
                best = Some((mass, sim, gate, &p.passage_id));
            }
        }
        let (mass, sim, gate, id) = best.expect("non-empty evidence");
        let polarity = (gate == 1).then(|| match reference {
            Some(r) => self.entailment.polarity(&claim.text, r),
            None => self.entailment.polarity(&claim.text, ""),
        });
        Ok(ClaimScore {
            claim: claim.clone(),
            best_passage_id: id.to_string(),
            similarity: sim,
            gate,
            support_mass: mass,
            polarity,
        })
    }

    pub fn score_claims(
        &self,
        claims: &[AtomicClaim],
        evidence: &EvidenceSet,
        reference: Option<&str>,
    ) -> Result<Vec<ClaimScore>> {
        claims
            .iter()
            .map(|c| self.score_claim(c, evidence, reference))
            .collect()
    }

    fn empty_report(&self) -> SfsReport {
        self.report(0.0, 0.0, 0.0, None, true, Vec::new())
    }

    fn report(
        &self,
        sfs: f64,
        eur: f64,
        rcva: f64,
        emc: Option<f64>,
        empty: bool,
        claim_scores: Vec<ClaimScore>,
    ) -> SfsReport {
        SfsReport {
            sfs,
            claim_count: claim_scores.len(),
            eur,
            rcva,
            emc,
            empty_decomposition: empty,
            tau: self.tau,
            tau_cite: self.tau_cite,
            decomposer: self.decomposer.name().to_string(),
            similarity_backend: self.similarity.name().to_string(),
            entailment_backend: self.entailment.name().to_string(),
            assumed_definitions: vec!["rcva".into(), "emc".into()],
            claim_scores,
        }
    }

    /// Full report for one trace. `reference` is the claim under test, used
    /// for claim polarity; `rounds` enables EMC.
    pub fn sfs(
        &self,
        text: &str,
        evidence: &EvidenceSet,
        verdict: Option<Verdict>,
        reference: Option<&str>,
        rounds: Option<&[RoundOutput]>,
    ) -> Result<SfsReport> {
        if evidence.is_empty() {
            return Err(FaithError::EmptyEvidence);
        }
        let emc_value = match rounds {
            Some(r) => emc(r, self.similarity.as_ref()).ok(),
            None => None,
        };
        let claims = match self.decompose(text) {
            Ok(c) => c,
            Err(FaithError::EmptyDecomposition) if self.empty_policy == EmptyPolicy::ScoreZero => {
                let mut r = self.empty_report();
                r.emc = emc_value;
                return Ok(r);
            }
            Err(e) => return Err(e),
        };
        let scores = self.score_claims(&claims, evidence, reference)?;
        let sfs = scores.iter().map(|s| s.support_mass).sum::<f64>() / scores.len() as f64;
        let eur_value = eur_of(self, &claims, evidence);
        let rcva_value = verdict.map_or(0.0, |v| rcva(&scores, v));
        Ok(self.report(sfs, eur_value, rcva_value, emc_value, false, scores))
    }

    /// SFS alone.
    pub fn score_text(&self, text: &str, evidence: &EvidenceSet) -> Result<f64> {
        Ok(self.sfs(text, evidence, None, None, None)?.sfs)
    }

    /// One SFS value per round over that round's concatenated outputs.
    pub fn sfs_trajectory(
        &self,
        condition_id: &str,
        rounds: &[Vec<RoundOutput>],
        evidence: &EvidenceSet,
    ) -> Result<FaithfulnessTrajectory> {
        let per_round_sfs = rounds
            .iter()
            .map(|outs| {
                let text: Vec<&str> = outs.iter().map(|o| o.text.as_str()).collect();
                self.score_text(&text.join("\n"), evidence)
            })
            .collect::<Result<_>>()?;
        Ok(FaithfulnessTrajectory {
            condition_id: condition_id.to_string(),
            per_round_sfs,
        })
    }
}

fn eur_of(engine: &SfsEngine, claims: &[AtomicClaim], evidence: &EvidenceSet) -> f64 {
    let cited = evidence
        .passages
        .iter()
        .filter(|p| {
            claims.iter().any(|c| {
                let (sim, gate) = engine.product(&c.text, &p.text);
                sim * f64::from(gate) >= engine.tau_cite
            })
        })
        .count();
    cited as f64 / evidence.len() as f64
}

/// Share of evidence passages supported at `tau_cite` by at least one claim of
/// the trace. An empty decomposition cites nothing.
pub fn eur(engine: &SfsEngine, text: &str, evidence: &EvidenceSet) -> Result<f64> {
    if evidence.is_empty() {
        return Err(FaithError::EmptyEvidence);
    }
    match engine.decompose(text) {
        Ok(claims) => Ok(eur_of(engine, &claims, evidence)),
        Err(FaithError::EmptyDecomposition) => Ok(0.0),
        Err(e) => Err(e),
    }
}

/// Share of gate-passing claims whose polarity equals the final verdict; 0
/// without gate-passing claims. A NOT-ENOUGH-INFO verdict matches nothing.
pub fn rcva(scores: &[ClaimScore], verdict: Verdict) -> f64 {
    let passing: Vec<&ClaimScore> = scores.iter().filter(|s| s.gate == 1).collect();
    if passing.is_empty() {
        return 0.0;
    }
    let aligned = passing.iter().filter(|s| s.polarity == Some(verdict)).count();
    aligned as f64 / passing.len() as f64
}

/// One trace of a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchItem {
    pub trace_id: String,
    pub condition: String,
    pub text: String,
    pub evidence: EvidenceSet,
    pub verdict: Option<Verdict>,
    pub reference: Option<String>,
    pub rounds: Option<Vec<RoundOutput>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchRow {
    pub trace_id: String,
    pub condition: String,
    pub sfs: f64,
    pub eur: f64,
    pub rcva: f64,
    pub emc: Option<f64>,
    pub claim_count: usize,
}

/// Score every item, in parallel unless a backend is single-flight. Output
/// order follows input order.
pub fn score_batch(engine: &SfsEngine, items: &[BatchItem]) -> Result<Vec<(BatchRow, SfsReport)>> {
    let one = |item: &BatchItem| -> Result<(BatchRow, SfsReport)> {
        let r = engine.sfs(
            &item.text,
            &item.evidence,
            item.verdict,
            item.reference.as_deref(),
            item.rounds.as_deref(),
        )?;
        Ok((
            BatchRow {
                trace_id: item.trace_id.clone(),
                condition: item.condition.clone(),
                sfs: r.sfs,
                eur: r.eur,
                rcva: r.rcva,
                emc: r.emc,
                claim_count: r.claim_count,
            },
            r,
        ))
    };
    if engine.similarity.single_flight() || engine.entailment.single_flight() {
        items.iter().map(one).collect()
    } else {
        items.par_iter().map(one).collect()
    }
}

/// CSV with header `trace_id,condition,sfs,eur,rcva,emc,claim_count`; an
/// absent EMC is an empty cell.
pub fn write_batch_csv<W: Write>(w: W, rows: &[BatchRow]) -> std::io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["trace_id", "condition", "sfs", "eur", "rcva", "emc", "claim_count"])?;
    for r in rows {
        out.write_record([
            r.trace_id.clone(),
            r.condition.clone(),
            format!("{:.6}", r.sfs),
            format!("{:.6}", r.eur),
            format!("{:.6}", r.rcva),
            r.emc.map(|v| format!("{v:.6}")).unwrap_or_default(),
            r.claim_count.to_string(),
        ])?;
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::faithfulness::Passage;

    fn evidence() -> EvidenceSet {
        EvidenceSet::new(
            "c1",
            vec![
                Passage::new("p1", "Aspirin reduces fever in adults"),
                Passage::new("p2", "Statins lower LDL cholesterol"),
                Passage::new("p3", "Zinc shortens the common cold"),
                Passage::new("p4", "Iron deficiency causes anemia"),
                Passage::new("p5", "Vitamin C does not prevent colds"),
            ],
        )
        .unwrap()
    }

    #[test]
    fn claim_scores() {
        let e = SfsEngine::default();
        let s = e
            .score_claim(&AtomicClaim::new("Statins lower LDL cholesterol"), &evidence(), None)
            .unwrap();
        assert_eq!((s.similarity, s.gate, s.support_mass), (1.0, 1, 1.0));
        assert_eq!(s.best_passage_id, "p2");
        let s = e
            .score_claim(
                &AtomicClaim::new("Quantum tunnelling powers photosynthesis"),
                &evidence(),
                None,
            )
            .unwrap();
        assert_eq!(s.support_mass, 0.0);
        assert_eq!(s.best_passage_id, "p1");
        // flipped polarity: full similarity, failed gate
        let s = e
            .score_claim(
                &AtomicClaim::new("Statins do not lower LDL cholesterol"),
                &evidence(),
                None,
            )
            .unwrap();
        assert_eq!((s.similarity, s.gate, s.support_mass), (1.0, 0, 0.0));
        assert!(matches!(
            e.score_claim(&AtomicClaim::new("x y"), &EvidenceSet::new("c", vec![]).unwrap(), None),
            Err(FaithError::EmptyEvidence)
        ));
    }

    #[test]
    fn partial_overlap_oracle() {
        // claim content {alpha, beta, gamma, delta, epsilon}; passage shares
        // three of five -> overlap 3 / min(5, 6) = 0.6, containment 0.6
        let ev = EvidenceSet::new("c", vec![Passage::new("p", "alpha beta gamma zeta theta kappa")]).unwrap();
        let e = SfsEngine::default().with_tau(0.5);
        let s = e
            .score_claim(&AtomicClaim::new("alpha beta gamma delta epsilon"), &ev, None)
            .unwrap();
        assert!((s.support_mass - 0.6).abs() < 1e-12);
        assert_eq!(s.gate, 1);
    }

    #[test]
    fn sfs_and_eur() {
        let e = SfsEngine::default();
        let r = e
            .sfs(
                "Statins lower LDL cholesterol. Quantum tunnelling powers photosynthesis.",
                &evidence(),
                None,
                None,
                None,
            )
            .unwrap();
        assert_eq!(r.sfs, 0.5);
        assert_eq!(r.claim_count, 2);
        let cover = "Aspirin reduces fever in adults. Statins lower LDL cholesterol. Zinc shortens the common cold.";
        assert!((eur(&e, cover, &evidence()).unwrap() - 0.6).abs() < 1e-12);
        assert_eq!(
            eur(&e, "Quantum tunnelling powers photosynthesis", &evidence()).unwrap(),
            0.0
        );
        assert_eq!(e.score_text(cover, &evidence()).unwrap(), 1.0);

        let tally = "Final vote: SUPPORTS (3-0)";
        assert_eq!(
            e.sfs(tally, &evidence(), None, None, None),
            Err(FaithError::EmptyDecomposition)
        );
        let zero = e.clone().with_empty_policy(EmptyPolicy::ScoreZero);
        let r = zero
            .sfs(tally, &evidence(), Some(Verdict::Supports), None, None)
            .unwrap();
        assert_eq!((r.sfs, r.claim_count, r.empty_decomposition), (0.0, 0, true));
    }

    fn scored(gate: u8, polarity: Option<Verdict>) -> ClaimScore {
        ClaimScore {
            claim: AtomicClaim::new("x y"),
            best_passage_id: "p".into(),
            similarity: 1.0,
            gate,
            support_mass: f64::from(gate),
            polarity,
        }
    }

    #[test]
    fn rcva_counts() {
        let s = Some(Verdict::Supports);
        let r = Some(Verdict::Refutes);
        assert_eq!(rcva(&[scored(1, s), scored(1, s)], Verdict::Supports), 1.0);
        assert_eq!(rcva(&[scored(0, None)], Verdict::Supports), 0.0);
        let mixed = [scored(1, s), scored(1, s), scored(1, r), scored(1, s), scored(0, None)];
        assert_eq!(rcva(&mixed, Verdict::Supports), 0.75);
        assert_eq!(rcva(&mixed, Verdict::NotEnoughInfo), 0.0);
    }

    #[test]
    fn trajectory_per_round() {
        let e = SfsEngine::default();
        let out = |t: usize, text: &str| RoundOutput {
            round_index: t,
            agent_id: "a".into(),
            text: text.into(),
            verdict: None,
            confidence: 0.5,
        };
        let same = vec![vec![out(0, "Statins lower LDL cholesterol")]; 3];
        let tr = e.sfs_trajectory("C", &same, &evidence()).unwrap();
        assert_eq!(tr.per_round_sfs, vec![1.0; 3]);
    }
}
