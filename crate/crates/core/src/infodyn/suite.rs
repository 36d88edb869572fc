//! Randomized invariant suites over seeded chain families.
//!
//! Each suite draws `instances` independent problems, instance `i` from the
//! seed `derive_seed(seed, [suite_tag, i])`, and counts violations of one
//! monotonicity or bound property. Offending instance seeds are kept so a
//! failure can be replayed in isolation with the matching `*_instance`
//! function.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::random::{
    random_augment, random_channel, random_deterministic_channel, random_joint, random_joint_with_uniform_evidence,
    random_vote_map,
};
use super::{
    apply_channel, f_divergence, has_nondeterministic_preimage, kl_gap, mutual_information, run_chain,
    simulate_sfs_concentration, simulate_stopped_faithfulness, ChainSpec, ChainTrajectory, Channel, DiscreteJoint,
    EvidenceAugmentChannel, FGenerator, InitSpec, ProbVector, Step, StepSpec, StoppingRule,
};
use crate::rng::{derive_seed, rng_from};

/// MI tolerance for monotonicity checks.
pub const TOL: f64 = 1e-9;
/// Minimum drop counted as a strict decrease.
pub const STRICT: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SuiteConfig {
    pub instances: usize,
    pub seed: u64,
    /// Flip the sign of every monotonicity comparison. Used to prove the
    /// harness can fail.
    pub negative_control: bool,
}

impl SuiteConfig {
    pub fn new(instances: usize, seed: u64) -> Self {
        Self {
            instances,
            seed,
            negative_control: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub instances: usize,
    pub violations: usize,
    pub offending_seeds: Vec<u64>,
    pub metrics: BTreeMap<String, f64>,
    pub passed: bool,
    #[serde(skip)]
    pub trajectories: Vec<(u64, ChainTrajectory)>,
}

impl SuiteReport {
    fn new(name: &str, instances: usize) -> Self {
        Self {
            name: name.to_string(),
            instances,
            violations: 0,
            offending_seeds: Vec::new(),
            metrics: BTreeMap::new(),
            passed: true,
            trajectories: Vec::new(),
        }
    }

    fn flag(&mut self, seed: u64) {
        self.violations += 1;
        if !self.offending_seeds.contains(&seed) {
            self.offending_seeds.push(seed);
        }
    }

    fn metric(&mut self, key: &str, value: f64) {
        self.metrics.insert(key.to_string(), value);
    }

    fn finish(mut self, extra_ok: bool) -> Self {
        self.passed = self.violations == 0 && extra_ok;
        self
    }

    pub fn summary_line(&self) -> String {
        format!(
            "{}: {} violations / {} instances{}",
            self.name,
            self.violations,
            self.instances,
            if self.passed { "" } else { " [FAILED]" }
        )
    }
}

fn instance_seeds(cfg: &SuiteConfig, tag: u64) -> Vec<u64> {
    (0..cfg.instances as u64)
        .map(|i| derive_seed(cfg.seed, &[tag, i]))
        .collect()
}

/// `after` moved against the allowed direction; the negative control flips
/// the comparison.
fn breaks_non_increase(before: f64, after: f64, negative_control: bool) -> bool {
    if negative_control {
        after < before - TOL
    } else {
        after > before + TOL
    }
}

fn breaks_non_decrease(before: f64, after: f64, negative_control: bool) -> bool {
    breaks_non_increase(after, before, negative_control)
}

/// Random injective map into `outputs >= inputs` symbols.
fn random_injective<R: Rng + ?Sized>(rng: &mut R, inputs: usize, outputs: usize) -> Channel {
    let mut targets: Vec<usize> = (0..outputs).collect();
    targets.shuffle(rng);
    Channel::deterministic(&targets[..inputs], outputs).expect("injective map in range")
}

/// One random closed step out of the current state alphabet: dense
/// Dirichlet rows, a surjective merging map, or an injective relabeling.
/// Output alphabets have at least two symbols.
fn random_closed_step<R: Rng + ?Sized>(rng: &mut R, inputs: usize) -> Channel {
    match rng.random_range(0..20) {
        0..=11 => {
            let outputs = rng.random_range(2..=8);
            random_channel(rng, inputs, outputs)
        }
        12..=16 => {
            let outputs = rng.random_range(2..=inputs.clamp(2, 8));
            random_vote_map(rng, inputs, outputs).as_channel()
        }
        _ => {
            let outputs = rng.random_range(inputs..=inputs.max(8));
            random_injective(rng, inputs, outputs)
        }
    }
}

/// Step record for the closed suite.
#[derive(Debug, Clone, Copy)]
struct ClosedStepFacts {
    before: f64,
    after: f64,
    nondeterministic: bool,
    gap: f64,
    bound: f64,
}

/// A random closed chain: evidence and state alphabets in `2..=8`, `1..=6`
/// steps.
pub fn closed_instance(seed: u64) -> (DiscreteJoint, Vec<Step>) {
    let mut rng = rng_from(seed);
    let ne = rng.random_range(2..=8);
    let ns = rng.random_range(2..=8);
    let t = rng.random_range(1..=6);
    let init = random_joint(&mut rng, ne, ns);
    let mut steps = Vec::with_capacity(t);
    let mut cur = ns;
    for _ in 0..t {
        let c = random_closed_step(&mut rng, cur);
        cur = c.outputs();
        steps.push(Step::Closed(c));
    }
    (init, steps)
}

/// DPI and strictness over random closed chains.
pub fn closed_dpi_suite(cfg: &SuiteConfig) -> SuiteReport {
    let seeds = instance_seeds(cfg, 1);
    let results: Vec<(u64, ChainTrajectory, Vec<ClosedStepFacts>)> = seeds
        .par_iter()
        .map(|&s| {
            let (init, steps) = closed_instance(s);
            let tr = run_chain(&init, &steps).expect("closed instance shapes agree");
            let mut facts = Vec::with_capacity(steps.len());
            let mut cur = init;
            for (t, step) in steps.iter().enumerate() {
                let Step::Closed(c) = step else { unreachable!() };
                let g = kl_gap(&cur, c).expect("shapes agree");
                facts.push(ClosedStepFacts {
                    before: tr.mi_per_round[t],
                    after: tr.mi_per_round[t + 1],
                    nondeterministic: has_nondeterministic_preimage(&cur, c).expect("shapes agree"),
                    gap: g.gap,
                    bound: g.lower_bound,
                });
                cur = apply_channel(&cur, c).expect("shapes agree");
            }
            (s, tr, facts)
        })
        .collect();

    let mut rep = SuiteReport::new("closed-dpi", cfg.instances);
    let (mut nondet, mut strict, mut bound_pos_nondet, mut bound_pos_det) = (0usize, 0, 0, 0);
    let (mut bound_gap_disagree, mut ceiling) = (0usize, 0usize);
    for (s, tr, facts) in &results {
        for f in facts {
            if breaks_non_increase(f.before, f.after, cfg.negative_control) {
                rep.flag(*s);
            }
            let bound_pos = f.bound > STRICT;
            if f.nondeterministic {
                nondet += 1;
                strict += usize::from(f.after < f.before - STRICT);
                bound_pos_nondet += usize::from(bound_pos);
            } else {
                bound_pos_det += usize::from(bound_pos);
            }
            bound_gap_disagree += usize::from(bound_pos != (f.gap > STRICT));
        }
        ceiling += tr
            .mi_per_round
            .iter()
            .filter(|&&m| m > tr.evidence_entropy + TOL)
            .count();
    }
    let steps: usize = results.iter().map(|r| r.2.len()).sum();
    let strict_rate = if nondet == 0 {
        1.0
    } else {
        strict as f64 / nondet as f64
    };
    let bound_rate = if nondet == 0 {
        1.0
    } else {
        bound_pos_nondet as f64 / nondet as f64
    };
    rep.metric("steps", steps as f64);
    rep.metric("nondeterministic_steps", nondet as f64);
    rep.metric("strict_decrease_rate", strict_rate);
    rep.metric("bound_positive_rate_nondeterministic", bound_rate);
    rep.metric("bound_positive_deterministic", bound_pos_det as f64);
    rep.metric("bound_gap_disagreements", bound_gap_disagree as f64);
    rep.metric("ceiling_violations", ceiling as f64);
    rep.trajectories = results.into_iter().map(|(s, tr, _)| (s, tr)).collect();
    let ok = strict_rate >= 0.99 && bound_rate >= 0.99 && bound_pos_det == 0 && ceiling == 0;
    rep.finish(ok)
}

/// Chain ending in a `K`-way vote. Half the instances have eight equiprobable
/// evidence symbols and `K = 2`.
pub fn vote_instance(seed: u64, index: u64) -> (DiscreteJoint, Vec<Step>, usize) {
    let mut rng = rng_from(seed);
    let high_entropy = index.is_multiple_of(2);
    let (init, k) = if high_entropy {
        let init = if rng.random_bool(0.5) {
            DiscreteJoint::diagonal_uniform(8).expect("n > 0")
        } else {
            let ns = rng.random_range(2..=8);
            random_joint_with_uniform_evidence(&mut rng, 8, ns)
        };
        (init, 2)
    } else {
        let ne = rng.random_range(2..=8);
        let ns = rng.random_range(2..=8);
        (random_joint(&mut rng, ne, ns), rng.random_range(2..=4))
    };
    let mut steps = Vec::new();
    let mut cur = init.state_alphabet_size();
    for _ in 0..rng.random_range(0..=4) {
        let c = random_closed_step(&mut rng, cur);
        cur = c.outputs();
        steps.push(Step::Closed(c));
    }
    steps.push(Step::Vote(random_vote_map(&mut rng, cur, k)));
    (init, steps, k)
}

pub fn vote_floor_suite(cfg: &SuiteConfig) -> SuiteReport {
    let seeds = instance_seeds(cfg, 2);
    let results: Vec<(u64, ChainTrajectory, usize)> = seeds
        .par_iter()
        .enumerate()
        .map(|(i, &s)| {
            let (init, steps, k) = vote_instance(s, i as u64);
            (s, run_chain(&init, &steps).expect("vote instance shapes agree"), k)
        })
        .collect();
    let mut rep = SuiteReport::new("vote-floor", cfg.instances);
    let mut high = 0usize;
    let mut max_slack = f64::NEG_INFINITY;
    for (s, tr, k) in &results {
        let last = *tr.mi_per_round.last().expect("non-empty");
        let floor = (*k as f64).log2();
        max_slack = max_slack.max(last - floor);
        let mut bad = if cfg.negative_control {
            last < floor - TOL
        } else {
            last > floor + TOL
        };
        for t in 0..tr.rounds {
            bad |= breaks_non_increase(tr.mi_per_round[t], tr.mi_per_round[t + 1], cfg.negative_control);
        }
        if bad {
            rep.flag(*s);
        }
        if tr.evidence_entropy >= 3.0 - TOL && *k == 2 {
            high += 1;
        }
    }
    rep.metric("high_entropy_k2_instances", high as f64);
    rep.metric("max_final_mi_minus_log2k", max_slack);
    rep.trajectories = results.into_iter().map(|(s, tr, _)| (s, tr)).collect();
    let ok = cfg.instances < 2 || high > 0;
    rep.finish(ok)
}

/// Random open chain of one to three augmentations with auxiliary alphabets of
/// two or three symbols.
pub fn open_instance(seed: u64) -> (DiscreteJoint, Vec<Step>) {
    let mut rng = rng_from(seed);
    let ne = rng.random_range(2..=8);
    let ns = rng.random_range(1..=4);
    let init = random_joint(&mut rng, ne, ns);
    let mut steps = Vec::new();
    let mut cur = ns;
    for _ in 0..rng.random_range(1..=3) {
        let a = match rng.random_range(0..4) {
            0 => EvidenceAugmentChannel::noisy_evidence_copy(ne, cur, rng.random_range(0.0..0.9)).expect("valid flip"),
            1 => {
                let aux = rng.random_range(2..=3);
                EvidenceAugmentChannel::independent(
                    ne,
                    cur,
                    &ProbVector::new(super::random::dirichlet_row(&mut rng, aux)).expect("row"),
                )
                .expect("valid")
            }
            _ => {
                let aux = rng.random_range(2..=3);
                random_augment(&mut rng, ne, cur, aux)
            }
        };
        cur *= a.aux_alphabet_size();
        steps.push(Step::Open(a));
    }
    (init, steps)
}

pub fn open_recovery_suite(cfg: &SuiteConfig) -> SuiteReport {
    let seeds = instance_seeds(cfg, 3);
    let results: Vec<(u64, ChainTrajectory, f64)> = seeds
        .par_iter()
        .map(|&s| {
            let (init, steps) = open_instance(s);
            let tr = run_chain(&init, &steps).expect("open instance shapes agree");
            // Full re-injection on top of the initial joint.
            let copy = EvidenceAugmentChannel::evidence_copy(init.evidence_alphabet_size(), init.state_alphabet_size())
                .expect("valid");
            let copied = super::augment_open(&init, &copy).expect("shapes agree");
            let err = (mutual_information(&copied) - init.evidence_entropy()).abs();
            (s, tr, err)
        })
        .collect();
    let mut rep = SuiteReport::new("open-recovery", cfg.instances);
    let mut max_copy_err = 0.0f64;
    let mut ceiling = 0usize;
    for (s, tr, err) in &results {
        let bad = (0..tr.rounds)
            .any(|t| breaks_non_decrease(tr.mi_per_round[t], tr.mi_per_round[t + 1], cfg.negative_control));
        if bad {
            rep.flag(*s);
        }
        max_copy_err = max_copy_err.max(*err);
        ceiling += tr
            .mi_per_round
            .iter()
            .filter(|&&m| m > tr.evidence_entropy + TOL)
            .count();
    }
    rep.metric("max_evidence_copy_error", max_copy_err);
    rep.metric("ceiling_violations", ceiling as f64);
    rep.trajectories = results.into_iter().map(|(s, tr, _)| (s, tr)).collect();
    let ok = max_copy_err <= TOL && ceiling == 0;
    rep.finish(ok)
}

/// Random `(joint, channel)` pair; one third of channels are injective.
pub fn kl_gap_instance(seed: u64) -> (DiscreteJoint, Channel, bool) {
    let mut rng = rng_from(seed);
    let ne = rng.random_range(2..=8);
    let ns = rng.random_range(2..=8);
    let j = random_joint(&mut rng, ne, ns);
    match rng.random_range(0..3) {
        0 => {
            let outputs = rng.random_range(1..=8);
            (j, random_channel(&mut rng, ns, outputs), false)
        }
        1 => {
            let outputs = rng.random_range(1..ns);
            (j, random_deterministic_channel(&mut rng, ns, outputs), false)
        }
        _ => {
            let outputs = rng.random_range(ns..=8);
            (j, random_injective(&mut rng, ns, outputs), true)
        }
    }
}

pub fn kl_gap_suite(cfg: &SuiteConfig) -> SuiteReport {
    let seeds = instance_seeds(cfg, 4);
    let results: Vec<(u64, f64, f64, bool)> = seeds
        .par_iter()
        .map(|&s| {
            let (j, c, injective) = kl_gap_instance(s);
            let g = kl_gap(&j, &c).expect("shapes agree");
            (s, g.gap, g.lower_bound, injective)
        })
        .collect();
    let mut rep = SuiteReport::new("kl-gap", cfg.instances);
    let (mut injective_n, mut max_eq_err, mut max_abs_diff) = (0usize, 0.0f64, 0.0f64);
    for &(s, gap, bound, injective) in &results {
        let below = if cfg.negative_control {
            gap > bound + TOL
        } else {
            gap < bound - TOL
        };
        let eq_err = (gap - bound).abs();
        max_abs_diff = max_abs_diff.max(eq_err);
        if injective {
            injective_n += 1;
            max_eq_err = max_eq_err.max(eq_err);
        }
        if below || (injective && eq_err > TOL) {
            rep.flag(s);
        }
    }
    rep.metric("injective_instances", injective_n as f64);
    rep.metric("max_injective_equality_error", max_eq_err);
    rep.metric("max_gap_minus_bound", max_abs_diff);
    rep.finish(true)
}

pub const DPI_GENERATORS: [FGenerator; 4] = [
    FGenerator::Kl,
    FGenerator::TotalVariation,
    FGenerator::ChiSquared,
    FGenerator::Hellinger,
];

pub fn f_divergence_suite(cfg: &SuiteConfig) -> SuiteReport {
    let mut rep = SuiteReport::new("f-divergence-dpi", cfg.instances * DPI_GENERATORS.len());
    let mut max_kl_err = 0.0f64;
    for (gi, g) in DPI_GENERATORS.iter().enumerate() {
        let seeds = instance_seeds(cfg, 50 + gi as u64);
        let results: Vec<(u64, f64, f64, f64)> = seeds
            .par_iter()
            .map(|&s| {
                let (j, c, _) = kl_gap_instance(s);
                let out = apply_channel(&j, &c).expect("shapes agree");
                let before = f_divergence(&j, *g).expect("valid generator");
                let after = f_divergence(&out, *g).expect("valid generator");
                let kl_err = (f_divergence(&j, FGenerator::Kl).expect("kl") - mutual_information(&j)).abs();
                (s, before, after, kl_err)
            })
            .collect();
        let mut bad = 0usize;
        for &(s, before, after, kl_err) in &results {
            max_kl_err = max_kl_err.max(kl_err);
            if breaks_non_increase(before, after, cfg.negative_control) {
                rep.flag(s);
                bad += 1;
            }
        }
        rep.metric(&format!("violations_{}", g.label()), bad as f64);
    }
    rep.metric("max_kl_vs_mi_error", max_kl_err);
    let ok = max_kl_err <= TOL;
    rep.finish(ok)
}

/// Exceedance settings `(n, eps, score grid size)` for the concentration
/// suite.
pub const CONCENTRATION_SETTINGS: [(usize, f64, usize); 6] = [
    (300, 0.10, 2),
    (300, 0.05, 2),
    (300, 0.05, 5),
    (100, 0.10, 2),
    (30, 0.20, 3),
    (1, 0.40, 2),
];

pub fn concentration_suite(trials: usize, seed: u64, negative_control: bool) -> SuiteReport {
    let mut rep = SuiteReport::new("hoeffding-concentration", CONCENTRATION_SETTINGS.len());
    for (i, &(n, eps, m)) in CONCENTRATION_SETTINGS.iter().enumerate() {
        let dist = ProbVector::uniform(m).expect("m > 0");
        let c = simulate_sfs_concentration(n, eps, trials, &dist, derive_seed(seed, &[6, i as u64]))
            .expect("valid settings");
        let ok = if negative_control {
            c.empirical_exceedance > c.bound
        } else {
            c.within_bound()
        };
        if !ok {
            rep.flag(i as u64);
        }
        let key = format!("n{n}_eps{eps}_m{m}");
        rep.metric(&format!("{key}_exceedance"), c.empirical_exceedance);
        rep.metric(&format!("{key}_bound"), c.bound);
    }
    rep.finish(true)
}

/// Open chain specs exercised by the optional-stopping suite, each with its
/// rule.
pub fn stopping_cases() -> Vec<(ChainSpec, StoppingRule)> {
    let copy = ChainSpec {
        name: "evidence-copy".into(),
        seed: None,
        init: InitSpec::Independent {
            evidence: vec![0.25; 4],
            state: vec![0.5, 0.5],
        },
        steps: vec![StepSpec::EvidenceCopy, StepSpec::EvidenceCopy],
    };
    let noisy_fixed = ChainSpec {
        name: "noisy-copy-fixed".into(),
        seed: None,
        init: InitSpec::Table {
            rows: vec![vec![0.3, 0.2], vec![0.2, 0.3]],
        },
        steps: vec![StepSpec::NoisyCopy { flip: 0.2 }; 3],
    };
    let noisy_random = ChainSpec {
        name: "noisy-copy-randomized".into(),
        seed: None,
        init: InitSpec::Random {
            evidence: 3,
            state: 2,
            uniform_evidence: false,
        },
        steps: vec![
            StepSpec::NoisyCopyRange {
                min_flip: 0.1,
                max_flip: 0.6,
            };
            3
        ],
    };
    let augment = ChainSpec {
        name: "random-augment".into(),
        seed: None,
        init: InitSpec::Random {
            evidence: 4,
            state: 2,
            uniform_evidence: true,
        },
        steps: vec![StepSpec::RandomAugment { aux: 3 }; 3],
    };
    vec![
        (copy.clone(), StoppingRule::MiThreshold { bits: 0.5 }),
        (copy, StoppingRule::FixedRounds { rounds: 2 }),
        (noisy_fixed.clone(), StoppingRule::FixedRounds { rounds: 3 }),
        (noisy_fixed, StoppingRule::MiThreshold { bits: 0.3 }),
        (noisy_random.clone(), StoppingRule::MiThreshold { bits: 0.5 }),
        (noisy_random, StoppingRule::FixedRounds { rounds: 2 }),
        (augment.clone(), StoppingRule::MiThreshold { bits: 0.4 }),
        (augment, StoppingRule::FixedRounds { rounds: 3 }),
    ]
}

pub fn stopping_suite(trials: usize, seed: u64, negative_control: bool) -> SuiteReport {
    let cases = stopping_cases();
    let mut rep = SuiteReport::new("optional-stopping", cases.len());
    for (i, (spec, rule)) in cases.iter().enumerate() {
        let r =
            simulate_stopped_faithfulness(spec, *rule, trials, derive_seed(seed, &[7, i as u64])).expect("open specs");
        let ok = if negative_control {
            r.mean_stopped_f < r.f0 - 3.0 * r.sigma
        } else {
            r.holds()
        };
        if !ok {
            rep.flag(i as u64);
        }
        let rule_name = match rule {
            StoppingRule::FixedRounds { rounds } => format!("fixed{rounds}"),
            StoppingRule::MiThreshold { bits } => format!("threshold{bits}"),
        };
        let key = format!("{}_{rule_name}", spec.name);
        rep.metric(&format!("{key}_mean_stopped_f"), r.mean_stopped_f);
        rep.metric(&format!("{key}_f0"), r.f0);
    }
    rep.finish(true)
}

/// All suites at the given size. Concentration and stopping run with fixed
/// trial counts (10000 and 1000).
pub fn run_all(cfg: &SuiteConfig) -> Vec<SuiteReport> {
    vec![
        closed_dpi_suite(cfg),
        vote_floor_suite(cfg),
        open_recovery_suite(cfg),
        kl_gap_suite(cfg),
        f_divergence_suite(cfg),
        concentration_suite(10_000, cfg.seed, cfg.negative_control),
        stopping_suite(1_000, cfg.seed, cfg.negative_control),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suites_pass_and_negative_control_fails() {
        let cfg = SuiteConfig::new(60, 11);
        for rep in [
            closed_dpi_suite(&cfg),
            vote_floor_suite(&cfg),
            open_recovery_suite(&cfg),
            kl_gap_suite(&cfg),
            f_divergence_suite(&cfg),
        ] {
            assert!(rep.passed, "{} {:?}", rep.summary_line(), rep.metrics);
        }
        let neg = SuiteConfig {
            negative_control: true,
            ..cfg
        };
        assert!(!closed_dpi_suite(&neg).passed);
        assert!(!open_recovery_suite(&neg).passed);
    }

    #[test]
    fn instances_replay_from_seed() {
        assert_eq!(closed_instance(99), closed_instance(99));
        assert_eq!(open_instance(5), open_instance(5));
    }
}
