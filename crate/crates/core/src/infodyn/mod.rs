//! Exact information dynamics of reasoning chains over finite alphabets.
//!
//! A chain starts from a joint table `p(e, x)` between an evidence symbol and
//! the current output state, and is pushed through three kinds of steps:
//!
//! - closed steps: a stochastic [`Channel`] acting on the state alone,
//! - open steps: an [`EvidenceAugmentChannel`] that emits an auxiliary symbol
//!   with access to the evidence and appends it to the state,
//! - vote steps: a [`VoteMap`] collapsing the state onto `K` verdicts.
//!
//! All quantities are in bits. Zero-probability cells contribute nothing to
//! entropy, mutual-information and KL sums.

mod chain;
pub mod random;
mod sim;
mod spec;
pub mod suite;

pub use chain::{run_chain, ChainTrajectory, Regime, Step, StepKind};
pub use sim::{
    hoeffding_bound, simulate_sfs_concentration, simulate_stopped_faithfulness, Concentration, StoppedFaithfulness,
    StoppingRule,
};
pub use spec::{ChainSpec, InitSpec, StepSpec};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance on probability sums.
pub const SUM_TOL: f64 = 1e-12;

/// Posterior mass above which an input symbol counts as a live pre-image.
pub const PREIMAGE_MASS: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InfoError {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid generator: {0}")]
    InvalidGenerator(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, InfoError>;

fn check_simplex(entries: &[f64], what: &str) -> Result<()> {
    if entries.is_empty() {
        return Err(InfoError::InvalidDistribution(format!("{what}: empty")));
    }
    if let Some(bad) = entries.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(InfoError::InvalidDistribution(format!(
            "{what}: entry {bad} is negative or not finite"
        )));
    }
    let total: f64 = entries.iter().sum();
    if (total - 1.0).abs() > SUM_TOL {
        return Err(InfoError::InvalidDistribution(format!(
            "{what}: entries sum to {total}"
        )));
    }
    Ok(())
}

fn xlog2x(p: f64) -> f64 {
    if p > 0.0 {
        p * p.log2()
    } else {
        0.0
    }
}

/// A finite probability distribution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        check_simplex(&entries, "probability vector")?;
        Ok(Self(entries))
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(InfoError::InvalidDistribution("uniform over empty alphabet".into()));
        }
        Ok(Self(vec![1.0 / n as f64; n]))
    }

    pub fn entries(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<'de> Deserialize<'de> for ProbVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let entries = Vec::<f64>::deserialize(d)?;
        ProbVector::new(entries).map_err(serde::de::Error::custom)
    }
}

/// Shannon entropy in bits.
pub fn entropy(p: &ProbVector) -> f64 {
    entropy_of(p.entries())
}

fn entropy_of(p: &[f64]) -> f64 {
    (-p.iter().map(|&v| xlog2x(v)).sum::<f64>()).max(0.0)
}

/// Exact joint table `p(e, x)`, stored row-major by evidence symbol.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteJoint {
    evidence_alphabet_size: usize,
    state_alphabet_size: usize,
    table: Vec<f64>,
}

impl DiscreteJoint {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let ne = rows.len();
        let ns = rows.first().map_or(0, Vec::len);
        if ne == 0 || ns == 0 {
            return Err(InfoError::InvalidDistribution("empty joint table".into()));
        }
        if rows.iter().any(|r| r.len() != ns) {
            return Err(InfoError::ShapeMismatch("ragged joint table".into()));
        }
        Self::from_flat(ne, ns, rows.into_iter().flatten().collect())
    }

    pub fn from_flat(evidence: usize, state: usize, table: Vec<f64>) -> Result<Self> {
        if evidence == 0 || state == 0 || table.len() != evidence * state {
            return Err(InfoError::ShapeMismatch(format!(
                "table of {} cells cannot be {evidence}x{state}",
                table.len()
            )));
        }
        check_simplex(&table, "joint table")?;
        Ok(Self {
            evidence_alphabet_size: evidence,
            state_alphabet_size: state,
            table,
        })
    }

    /// Product joint `p(e) p(x)`.
    pub fn independent(evidence: &ProbVector, state: &ProbVector) -> Self {
        let table = evidence
            .entries()
            .iter()
            .flat_map(|pe| state.entries().iter().map(move |px| pe * px))
            .collect();
        Self {
            evidence_alphabet_size: evidence.len(),
            state_alphabet_size: state.len(),
            table,
        }
    }

    /// Uniform mass on the diagonal of an `n x n` table (state = evidence).
    pub fn diagonal_uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(InfoError::InvalidDistribution("empty alphabet".into()));
        }
        let mut table = vec![0.0; n * n];
        for i in 0..n {
            table[i * n + i] = 1.0 / n as f64;
        }
        Ok(Self {
            evidence_alphabet_size: n,
            state_alphabet_size: n,
            table,
        })
    }

    pub fn evidence_alphabet_size(&self) -> usize {
        self.evidence_alphabet_size
    }

    pub fn state_alphabet_size(&self) -> usize {
        self.state_alphabet_size
    }

    pub fn get(&self, e: usize, x: usize) -> f64 {
        self.table[e * self.state_alphabet_size + x]
    }

    pub fn row(&self, e: usize) -> &[f64] {
        let ns = self.state_alphabet_size;
        &self.table[e * ns..(e + 1) * ns]
    }

    pub fn cells(&self) -> &[f64] {
        &self.table
    }

    pub fn evidence_marginal(&self) -> Vec<f64> {
        (0..self.evidence_alphabet_size)
            .map(|e| self.row(e).iter().sum())
            .collect()
    }

    pub fn state_marginal(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.state_alphabet_size];
        for e in 0..self.evidence_alphabet_size {
            for (acc, p) in m.iter_mut().zip(self.row(e)) {
                *acc += p;
            }
        }
        m
    }

    pub fn evidence_entropy(&self) -> f64 {
        entropy_of(&self.evidence_marginal())
    }

    pub fn state_entropy(&self) -> f64 {
        entropy_of(&self.state_marginal())
    }

    /// `p(e) p(x)` laid out like `self.cells()`.
    pub fn product_of_marginals(&self) -> Vec<f64> {
        let pe = self.evidence_marginal();
        let px = self.state_marginal();
        pe.iter().flat_map(|a| px.iter().map(move |b| a * b)).collect()
    }
}

/// `I(E; X)` in bits.
pub fn mutual_information(j: &DiscreteJoint) -> f64 {
    let pe = j.evidence_marginal();
    let px = j.state_marginal();
    let mut mi = 0.0;
    for (e, &pe_e) in pe.iter().enumerate() {
        for (x, &p) in j.row(e).iter().enumerate() {
            if p > 0.0 {
                mi += p * (p / (pe_e * px[x])).log2();
            }
        }
    }
    mi.max(0.0)
}

/// Row-stochastic matrix acting on the state symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Channel {
    inputs: usize,
    outputs: usize,
    rows: Vec<f64>,
}

impl Channel {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let inputs = rows.len();
        let outputs = rows.first().map_or(0, Vec::len);
        if inputs == 0 || outputs == 0 {
            return Err(InfoError::InvalidDistribution("empty channel".into()));
        }
        if rows.iter().any(|r| r.len() != outputs) {
            return Err(InfoError::ShapeMismatch("ragged channel rows".into()));
        }
        for (i, r) in rows.iter().enumerate() {
            check_simplex(r, &format!("channel row {i}"))?;
        }
        Ok(Self {
            inputs,
            outputs,
            rows: rows.into_iter().flatten().collect(),
        })
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::deterministic(&(0..n).collect::<Vec<_>>(), n)
    }

    /// Every input is sent to output `target`.
    pub fn constant(inputs: usize, outputs: usize, target: usize) -> Result<Self> {
        Self::deterministic(&vec![target; inputs], outputs)
    }

    pub fn deterministic(map: &[usize], outputs: usize) -> Result<Self> {
        if map.is_empty() || outputs == 0 {
            return Err(InfoError::InvalidDistribution("empty channel".into()));
        }
        if let Some(bad) = map.iter().find(|&&y| y >= outputs) {
            return Err(InfoError::ShapeMismatch(format!(
                "output {bad} outside alphabet of {outputs}"
            )));
        }
        let mut rows = vec![0.0; map.len() * outputs];
        for (x, &y) in map.iter().enumerate() {
            rows[x * outputs + y] = 1.0;
        }
        Ok(Self {
            inputs: map.len(),
            outputs,
            rows,
        })
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.rows[x * self.outputs + y]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.rows[x * self.outputs..(x + 1) * self.outputs]
    }
}

impl TryFrom<Vec<Vec<f64>>> for Channel {
    type Error = InfoError;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Channel::new(rows)
    }
}

impl From<Channel> for Vec<Vec<f64>> {
    fn from(c: Channel) -> Self {
        c.rows.chunks(c.outputs).map(<[f64]>::to_vec).collect()
    }
}

fn check_channel_input(j: &DiscreteJoint, c: &Channel) -> Result<()> {
    if c.inputs != j.state_alphabet_size {
        return Err(InfoError::ShapeMismatch(format!(
            "channel expects {} input symbols, joint has {} states",
            c.inputs, j.state_alphabet_size
        )));
    }
    Ok(())
}

/// Closed-system step: `p(e, y) = sum_x p(e, x) c[x][y]`.
pub fn apply_channel(j: &DiscreteJoint, c: &Channel) -> Result<DiscreteJoint> {
    check_channel_input(j, c)?;
    let ne = j.evidence_alphabet_size;
    let mut table = vec![0.0; ne * c.outputs];
    for e in 0..ne {
        let out = &mut table[e * c.outputs..(e + 1) * c.outputs];
        for (x, &p) in j.row(e).iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for (acc, q) in out.iter_mut().zip(c.row(x)) {
                *acc += p * q;
            }
        }
    }
    Ok(DiscreteJoint {
        evidence_alphabet_size: ne,
        state_alphabet_size: c.outputs,
        table,
    })
}

/// Auxiliary-symbol generator with direct access to the evidence.
///
/// Rows are indexed by `(e, x)` pairs in row-major order; each row is a
/// distribution over auxiliary symbols.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvidenceAugmentChannel {
    evidence: usize,
    state: usize,
    aux: usize,
    rows: Vec<f64>,
}

impl EvidenceAugmentChannel {
    pub fn new(evidence: usize, state: usize, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.len() != evidence * state {
            return Err(InfoError::ShapeMismatch(format!(
                "augment channel needs {} rows, got {}",
                evidence * state,
                rows.len()
            )));
        }
        let aux = rows.first().map_or(0, Vec::len);
        if aux == 0 {
            return Err(InfoError::InvalidDistribution("empty auxiliary alphabet".into()));
        }
        if rows.iter().any(|r| r.len() != aux) {
            return Err(InfoError::ShapeMismatch("ragged augment rows".into()));
        }
        for (i, r) in rows.iter().enumerate() {
            check_simplex(r, &format!("augment row {i}"))?;
        }
        Ok(Self {
            evidence,
            state,
            aux,
            rows: rows.into_iter().flatten().collect(),
        })
    }

    /// Build from a row function of `(e, x)`.
    pub fn from_fn(evidence: usize, state: usize, mut row: impl FnMut(usize, usize) -> Vec<f64>) -> Result<Self> {
        let rows = (0..evidence)
            .flat_map(|e| (0..state).map(move |x| (e, x)))
            .map(|(e, x)| row(e, x))
            .collect();
        Self::new(evidence, state, rows)
    }

    /// Auxiliary symbol is an exact copy of the evidence.
    pub fn evidence_copy(evidence: usize, state: usize) -> Result<Self> {
        Self::noisy_evidence_copy(evidence, state, 0.0)
    }

    /// Evidence through a symmetric channel: kept with probability
    /// `1 - flip`, otherwise replaced by one of the other symbols uniformly.
    pub fn noisy_evidence_copy(evidence: usize, state: usize, flip: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&flip) {
            return Err(InfoError::InvalidArgument(format!("flip probability {flip}")));
        }
        if evidence < 2 && flip > 0.0 {
            return Err(InfoError::InvalidArgument(
                "noisy copy needs at least two evidence symbols".into(),
            ));
        }
        let off = if evidence > 1 {
            flip / (evidence - 1) as f64
        } else {
            0.0
        };
        Self::from_fn(evidence, state, |e, _| {
            (0..evidence).map(|a| if a == e { 1.0 - flip } else { off }).collect()
        })
    }

    /// Auxiliary symbol drawn from `dist` regardless of `(e, x)`.
    pub fn independent(evidence: usize, state: usize, dist: &ProbVector) -> Result<Self> {
        Self::from_fn(evidence, state, |_, _| dist.entries().to_vec())
    }

    pub fn evidence_alphabet_size(&self) -> usize {
        self.evidence
    }

    pub fn state_alphabet_size(&self) -> usize {
        self.state
    }

    pub fn aux_alphabet_size(&self) -> usize {
        self.aux
    }

    pub fn row(&self, e: usize, x: usize) -> &[f64] {
        let i = e * self.state + x;
        &self.rows[i * self.aux..(i + 1) * self.aux]
    }
}

/// Open-system step: the new state is `(x, a)` with `a ~ A[(e, x)]`, encoded
/// as `x * aux + a`.
pub fn augment_open(j: &DiscreteJoint, a: &EvidenceAugmentChannel) -> Result<DiscreteJoint> {
    if a.evidence != j.evidence_alphabet_size || a.state != j.state_alphabet_size {
        return Err(InfoError::ShapeMismatch(format!(
            "augment channel indexed by {}x{} pairs, joint is {}x{}",
            a.evidence, a.state, j.evidence_alphabet_size, j.state_alphabet_size
        )));
    }
    let ne = j.evidence_alphabet_size;
    let ns = j.state_alphabet_size;
    let out_states = ns * a.aux;
    let mut table = vec![0.0; ne * out_states];
    for e in 0..ne {
        for x in 0..ns {
            let p = j.get(e, x);
            for (k, q) in a.row(e, x).iter().enumerate() {
                table[e * out_states + x * a.aux + k] = p * q;
            }
        }
    }
    Ok(DiscreteJoint {
        evidence_alphabet_size: ne,
        state_alphabet_size: out_states,
        table,
    })
}

/// Assignment of every state symbol to one of `verdict_arity` verdicts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoteMap {
    assignment: Vec<usize>,
    verdict_arity: usize,
}

impl VoteMap {
    pub fn new(assignment: Vec<usize>, verdict_arity: usize) -> Result<Self> {
        if verdict_arity < 2 {
            return Err(InfoError::InvalidArgument(format!(
                "vote needs at least two verdicts, got {verdict_arity}"
            )));
        }
        if assignment.is_empty() {
            return Err(InfoError::InvalidArgument("empty vote map".into()));
        }
        if let Some(bad) = assignment.iter().find(|&&v| v >= verdict_arity) {
            return Err(InfoError::ShapeMismatch(format!(
                "verdict {bad} outside arity {verdict_arity}"
            )));
        }
        Ok(Self {
            assignment,
            verdict_arity,
        })
    }

    /// `x -> x mod K`.
    pub fn modulo(states: usize, verdict_arity: usize) -> Result<Self> {
        Self::new((0..states).map(|x| x % verdict_arity.max(1)).collect(), verdict_arity)
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn verdict_arity(&self) -> usize {
        self.verdict_arity
    }

    pub fn as_channel(&self) -> Channel {
        Channel::deterministic(&self.assignment, self.verdict_arity).expect("vote map validated at construction")
    }
}

/// Collapse the state onto a `K`-way verdict tally.
pub fn vote_collapse(j: &DiscreteJoint, vote_map: &VoteMap) -> Result<DiscreteJoint> {
    if vote_map.assignment.len() != j.state_alphabet_size {
        return Err(InfoError::ShapeMismatch(format!(
            "vote map covers {} states, joint has {}",
            vote_map.assignment.len(),
            j.state_alphabet_size
        )));
    }
    let ne = j.evidence_alphabet_size;
    let k = vote_map.verdict_arity;
    let mut table = vec![0.0; ne * k];
    for e in 0..ne {
        for (x, &p) in j.row(e).iter().enumerate() {
            table[e * k + vote_map.assignment[x]] += p;
        }
    }
    Ok(DiscreteJoint {
        evidence_alphabet_size: ne,
        state_alphabet_size: k,
        table,
    })
}

/// Per-step information loss and its conditional-KL lower bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KlGap {
    /// `I(E; X) - I(E; Y)`.
    pub gap: f64,
    /// `E_{e,y} KL( P(x | e, y) || P(x | y) )` under the pre-update joint.
    pub lower_bound: f64,
}

pub fn kl_gap(j: &DiscreteJoint, c: &Channel) -> Result<KlGap> {
    check_channel_input(j, c)?;
    let out = apply_channel(j, c)?;
    let gap = mutual_information(j) - mutual_information(&out);

    let ne = j.evidence_alphabet_size;
    let ns = j.state_alphabet_size;
    let ny = c.outputs;
    // p(x, y) = sum_e p(e, x) c[x][y]
    let px = j.state_marginal();
    let mut pxy = vec![0.0; ns * ny];
    for x in 0..ns {
        for y in 0..ny {
            pxy[x * ny + y] = px[x] * c.prob(x, y);
        }
    }
    let py: Vec<f64> = (0..ny).map(|y| (0..ns).map(|x| pxy[x * ny + y]).sum()).collect();

    let mut bound = 0.0;
    for e in 0..ne {
        for y in 0..ny {
            let pey: f64 = (0..ns).map(|x| j.get(e, x) * c.prob(x, y)).sum();
            if pey <= 0.0 {
                continue;
            }
            let mut kl = 0.0;
            for x in 0..ns {
                let joint = j.get(e, x) * c.prob(x, y);
                if joint <= 0.0 {
                    continue;
                }
                let post_ey = joint / pey;
                let post_y = pxy[x * ny + y] / py[y];
                kl += post_ey * (post_ey / post_y).log2();
            }
            bound += pey * kl;
        }
    }
    Ok(KlGap {
        gap,
        lower_bound: bound.max(0.0),
    })
}

/// True when some output symbol has at least two input symbols carrying
/// posterior mass `>= PREIMAGE_MASS`, i.e. the step cannot be undone from the
/// output alone.
pub fn has_nondeterministic_preimage(j: &DiscreteJoint, c: &Channel) -> Result<bool> {
    check_channel_input(j, c)?;
    let px = j.state_marginal();
    for y in 0..c.outputs {
        let py: f64 = (0..c.inputs).map(|x| px[x] * c.prob(x, y)).sum();
        if py <= 0.0 {
            continue;
        }
        let live = (0..c.inputs)
            .filter(|&x| px[x] * c.prob(x, y) / py >= PREIMAGE_MASS)
            .count();
        if live >= 2 {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Convex generator of an f-divergence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum FGenerator {
    /// `t log2 t`; reproduces mutual information in bits.
    Kl,
    /// `|t - 1| / 2`.
    TotalVariation,
    /// `(t - 1)^2`.
    ChiSquared,
    /// `(sqrt t - 1)^2`.
    Hellinger,
    /// `(t^alpha - 1) / (alpha - 1)`.
    Renyi {
        #[serde(default = "default_renyi_alpha")]
        alpha: f64,
    },
}

fn default_renyi_alpha() -> f64 {
    2.0
}

impl FGenerator {
    pub fn renyi_default() -> Self {
        FGenerator::Renyi {
            alpha: default_renyi_alpha(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let FGenerator::Renyi { alpha } = *self {
            if !alpha.is_finite() || alpha <= 0.0 || alpha == 1.0 {
                return Err(InfoError::InvalidGenerator(format!(
                    "order-alpha generator needs alpha > 0 and alpha != 1, got {alpha}"
                )));
            }
        }
        Ok(())
    }

    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            FGenerator::Kl => xlog2x(t),
            FGenerator::TotalVariation => (t - 1.0).abs() / 2.0,
            FGenerator::ChiSquared => (t - 1.0).powi(2),
            FGenerator::Hellinger => (t.sqrt() - 1.0).powi(2),
            FGenerator::Renyi { alpha } => (t.powf(alpha) - 1.0) / (alpha - 1.0),
        }
    }

    pub fn label(&self) -> String {
        match self {
            FGenerator::Kl => "kl".into(),
            FGenerator::TotalVariation => "total-variation".into(),
            FGenerator::ChiSquared => "chi-squared".into(),
            FGenerator::Hellinger => "hellinger".into(),
            FGenerator::Renyi { alpha } => format!("renyi({alpha})"),
        }
    }
}

impl std::str::FromStr for FGenerator {
    type Err = InfoError;

    fn from_str(s: &str) -> Result<Self> {
        let g = match s {
            "kl" => FGenerator::Kl,
            "tv" | "total-variation" => FGenerator::TotalVariation,
            "chi2" | "chi-squared" => FGenerator::ChiSquared,
            "hellinger" => FGenerator::Hellinger,
            "renyi" => FGenerator::renyi_default(),
            other => match other.strip_prefix("renyi:") {
                Some(a) => FGenerator::Renyi {
                    alpha: a
                        .parse()
                        .map_err(|_| InfoError::InvalidGenerator(format!("bad order {a}")))?,
                },
                None => return Err(InfoError::InvalidGenerator(format!("unknown generator {s}"))),
            },
        };
        g.validate()?;
        Ok(g)
    }
}

/// `D_f(P_{E,X} || P_E x P_X)`.
pub fn f_divergence(j: &DiscreteJoint, g: FGenerator) -> Result<f64> {
    g.validate()?;
    let q = j.product_of_marginals();
    let value: f64 = j
        .cells()
        .iter()
        .zip(&q)
        .filter(|(_, &q)| q > 0.0)
        .map(|(&p, &q)| q * g.eval(p / q))
        .sum();
    Ok(value.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sample_joint() -> DiscreteJoint {
        DiscreteJoint::new(vec![vec![0.4, 0.1], vec![0.1, 0.4]]).unwrap()
    }

    // 4-term summation: 2 * 0.4 log2(0.4/0.25) + 2 * 0.1 log2(0.1/0.25)
    fn sample_mi_oracle() -> f64 {
        0.8 * (1.6f64).log2() + 0.2 * (0.4f64).log2()
    }

    #[test]
    fn entropy_examples() {
        assert_abs_diff_eq!(entropy(&ProbVector::uniform(4).unwrap()), 2.0, epsilon = 1e-12);
        assert_eq!(entropy(&ProbVector::new(vec![1.0, 0.0, 0.0]).unwrap()), 0.0);
        // -(0.25 log2 0.25 + 0.75 log2 0.75) = 0.5 + 0.311278...
        let h = entropy(&ProbVector::new(vec![0.25, 0.75]).unwrap());
        assert_abs_diff_eq!(h, 0.811_278_124_459_132_8, epsilon = 1e-12);
        assert_abs_diff_eq!(h, 0.8113, epsilon = 5e-5);
    }

    #[test]
    fn invalid_distributions_are_rejected() {
        assert!(matches!(
            ProbVector::new(vec![0.5, 0.6]),
            Err(InfoError::InvalidDistribution(_))
        ));
        assert!(ProbVector::new(vec![]).is_err());
        assert!(ProbVector::new(vec![1.5, -0.5]).is_err());
        assert!(DiscreteJoint::new(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).is_err());
        assert!(Channel::new(vec![vec![0.5, 0.4]]).is_err());
    }

    #[test]
    fn mutual_information_examples() {
        let indep = DiscreteJoint::independent(
            &ProbVector::new(vec![0.3, 0.7]).unwrap(),
            &ProbVector::new(vec![0.2, 0.5, 0.3]).unwrap(),
        );
        assert_abs_diff_eq!(mutual_information(&indep), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            mutual_information(&DiscreteJoint::diagonal_uniform(2).unwrap()),
            1.0,
            epsilon = 1e-12
        );
        let mi = mutual_information(&sample_joint());
        assert_abs_diff_eq!(mi, sample_mi_oracle(), epsilon = 1e-12);
        assert_abs_diff_eq!(mi, 0.278, epsilon = 1e-3);
    }

    #[test]
    fn channel_examples() {
        let j = sample_joint();
        let same = apply_channel(&j, &Channel::identity(2).unwrap()).unwrap();
        assert_eq!(same, j);
        let collapsed = apply_channel(&j, &Channel::constant(2, 2, 0).unwrap()).unwrap();
        assert_eq!(mutual_information(&collapsed), 0.0);
        let c = Channel::new(vec![vec![0.7, 0.2, 0.1], vec![0.25, 0.25, 0.5]]).unwrap();
        let out = apply_channel(&j, &c).unwrap();
        // brute force p(e, y) = sum_x p(e, x) c[x][y]
        for e in 0..2 {
            for y in 0..3 {
                let want: f64 = (0..2).map(|x| j.get(e, x) * c.prob(x, y)).sum();
                assert_abs_diff_eq!(out.get(e, y), want, epsilon = 1e-15);
            }
        }
        assert_eq!(out.evidence_marginal(), j.evidence_marginal());
        assert!(mutual_information(&out) <= sample_mi_oracle());
        assert!(matches!(
            apply_channel(&j, &Channel::identity(3).unwrap()),
            Err(InfoError::ShapeMismatch(_))
        ));
    }

    #[test]
    fn augment_examples() {
        let zero = DiscreteJoint::independent(&ProbVector::uniform(2).unwrap(), &ProbVector::uniform(2).unwrap());
        let copy = augment_open(&zero, &EvidenceAugmentChannel::evidence_copy(2, 2).unwrap()).unwrap();
        assert_abs_diff_eq!(mutual_information(&copy), 1.0, epsilon = 1e-12);
        assert_eq!(copy.state_alphabet_size(), 4);

        let j = sample_joint();
        let noise = EvidenceAugmentChannel::independent(2, 2, &ProbVector::new(vec![0.3, 0.7]).unwrap()).unwrap();
        assert_abs_diff_eq!(
            mutual_information(&augment_open(&j, &noise).unwrap()),
            mutual_information(&j),
            epsilon = 1e-12
        );

        // Binary symmetric channel closed form: 1 - H(0.2).
        let bsc = 1.0 + 0.2 * 0.2f64.log2() + 0.8 * 0.8f64.log2();
        let noisy = augment_open(&zero, &EvidenceAugmentChannel::noisy_evidence_copy(2, 2, 0.2).unwrap()).unwrap();
        assert_abs_diff_eq!(mutual_information(&noisy), bsc, epsilon = 1e-12);
        assert_abs_diff_eq!(bsc, 0.278, epsilon = 1e-3);

        assert!(matches!(
            augment_open(&j, &EvidenceAugmentChannel::evidence_copy(3, 2).unwrap()),
            Err(InfoError::ShapeMismatch(_))
        ));
    }

    #[test]
    fn vote_examples() {
        let diag4 = DiscreteJoint::diagonal_uniform(4).unwrap();
        let majority = VoteMap::new(vec![0, 0, 1, 1], 2).unwrap();
        let v = vote_collapse(&diag4, &majority).unwrap();
        // collapsed table is [[.25,0],[.25,0],[0,.25],[0,.25]]: I = H(V) = 1
        assert_abs_diff_eq!(mutual_information(&v), 1.0, epsilon = 1e-12);

        let relabel = VoteMap::new(vec![2, 0, 3, 1], 4).unwrap();
        assert_abs_diff_eq!(
            mutual_information(&vote_collapse(&diag4, &relabel).unwrap()),
            2.0,
            epsilon = 1e-12
        );

        let diag8 = DiscreteJoint::diagonal_uniform(8).unwrap();
        assert_abs_diff_eq!(diag8.evidence_entropy(), 3.0, epsilon = 1e-12);
        let two = VoteMap::modulo(8, 2).unwrap();
        assert!(mutual_information(&vote_collapse(&diag8, &two).unwrap()) <= 1.0 + 1e-12);

        assert!(VoteMap::new(vec![0, 1], 1).is_err());
        assert!(matches!(
            vote_collapse(&diag4, &VoteMap::modulo(3, 2).unwrap()),
            Err(InfoError::ShapeMismatch(_))
        ));
    }

    #[test]
    fn kl_gap_examples() {
        let j = sample_joint();
        let id = kl_gap(&j, &Channel::identity(2).unwrap()).unwrap();
        assert_eq!(id.gap, 0.0);
        assert_eq!(id.lower_bound, 0.0);

        let constant = kl_gap(&j, &Channel::constant(2, 1, 0).unwrap()).unwrap();
        assert_abs_diff_eq!(constant.gap, sample_mi_oracle(), epsilon = 1e-12);
        assert!(constant.lower_bound <= constant.gap + 1e-12);

        // 2x3 joint, merge states 1 and 2
        let j23 = DiscreteJoint::new(vec![vec![0.3, 0.15, 0.05], vec![0.1, 0.1, 0.3]]).unwrap();
        let merge = Channel::deterministic(&[0, 1, 1], 2).unwrap();
        let g = kl_gap(&j23, &merge).unwrap();
        assert!(g.lower_bound > 0.0);
        assert!(g.gap >= g.lower_bound - 1e-9);
        assert!(has_nondeterministic_preimage(&j23, &merge).unwrap());
        assert!(!has_nondeterministic_preimage(&j23, &Channel::identity(3).unwrap()).unwrap());
    }

    #[test]
    fn f_divergence_examples() {
        let indep = DiscreteJoint::independent(
            &ProbVector::new(vec![0.3, 0.7]).unwrap(),
            &ProbVector::uniform(3).unwrap(),
        );
        for g in [
            FGenerator::Kl,
            FGenerator::TotalVariation,
            FGenerator::ChiSquared,
            FGenerator::Hellinger,
            FGenerator::renyi_default(),
        ] {
            assert_abs_diff_eq!(f_divergence(&indep, g).unwrap(), 0.0, epsilon = 1e-12);
        }
        let j = sample_joint();
        assert_abs_diff_eq!(
            f_divergence(&j, FGenerator::Kl).unwrap(),
            mutual_information(&j),
            epsilon = 1e-12
        );
        // 1/2 sum |p - q|: diagonal cells |.5-.25|, off-diagonal |0-.25|
        let d2 = DiscreteJoint::diagonal_uniform(2).unwrap();
        assert_abs_diff_eq!(
            f_divergence(&d2, FGenerator::TotalVariation).unwrap(),
            0.5,
            epsilon = 1e-12
        );
        assert!(matches!(
            f_divergence(&j, FGenerator::Renyi { alpha: 1.0 }),
            Err(InfoError::InvalidGenerator(_))
        ));
        assert!(f_divergence(&j, FGenerator::Renyi { alpha: -1.0 }).is_err());
        assert_eq!("renyi".parse::<FGenerator>().unwrap(), FGenerator::Renyi { alpha: 2.0 });
        assert_eq!(
            "renyi:0.5".parse::<FGenerator>().unwrap(),
            FGenerator::Renyi { alpha: 0.5 }
        );
    }
}
