use std::collections::BTreeMap;
use std::path::Path;

use groundlab_core::corpus::{
    condition_row, emit_report, load_run, parse_ratings, save_run, ConditionRow, Report, ReportFormat, TierRow,
};
use groundlab_core::faithfulness::{classify_tier, detect_trap, TierInput, TierThresholds};
use groundlab_core::fixtures;
use groundlab_core::protocols::{builtin_conditions, MockMode, RunArtifact};
use groundlab_core::stats::hypothesis::HypothesisSpec;
use groundlab_core::stats::spearman;
use serde::Serialize;

use crate::analyze::{agreement, correlations, formats, hypotheses, load_all_scored};
use crate::args::{Profile, ReportArgs};
use crate::score::{engine, mean_trajectory, pool, score_all, write_scores, ScoreOutput, TAU_SWEEP};
use crate::simulate::{simulate_suites, summary_lines, write_outcome};
use crate::{config, corpus, run, write_file, CliError, Result};

pub const BASELINE: &str = "C1";
pub const EGSR_MOCK: &str = "C8";
pub const DECAY_MOCK: &str = "C13";
pub const VOTE_MOCK: &str = "C15";
pub const TRAP_EPS: f64 = 0.08;
pub const TRAP_DELTA: f64 = 0.10;
pub const DESK_CHAINS: usize = 1000;

/// Trap flag and tier of every condition against `baseline`; conditions
/// missing from `rows` and a zero-SFS baseline produce no rows.
pub fn tier_rows(rows: &[ConditionRow], baseline: &str) -> Vec<TierRow> {
    let Some(base) = rows.iter().find(|r| r.condition == baseline) else {
        return Vec::new();
    };
    let b = TierInput {
        acc: base.acc,
        sfs: base.sfs,
    };
    rows.iter()
        .filter(|r| r.condition != baseline)
        .filter_map(|r| {
            let c = TierInput { acc: r.acc, sfs: r.sfs };
            let tier = classify_tier(b, c, TierThresholds::default()).ok()?;
            Some(TierRow {
                condition: r.condition.clone(),
                baseline: baseline.to_string(),
                acc_retention: if b.acc > 0.0 { c.acc / b.acc } else { 0.0 },
                sfs_retention: c.sfs / b.sfs,
                trap: detect_trap(b.acc, b.sfs, c.acc, c.sfs, TRAP_EPS, TRAP_DELTA),
                tier: tier.as_str().to_string(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, passed: bool, detail: String) -> Check {
    Check {
        name: name.to_string(),
        passed,
        detail,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DeskSummary {
    pub seed: u64,
    pub checks: Vec<Check>,
    /// Mean per-round SFS of the EGSR mock.
    pub egsr_trajectory: Vec<f64>,
}

impl DeskSummary {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn sfs_of(rows: &[ConditionRow]) -> BTreeMap<&str, f64> {
    rows.iter().map(|r| (r.condition.as_str(), r.sfs)).collect()
}

/// Ranks agree when the rank correlation of condition SFS means is 1.
fn same_ranking(a: &[ConditionRow], b: &[ConditionRow]) -> (bool, f64) {
    let x: Vec<f64> = a.iter().map(|r| r.sfs).collect();
    let y: Vec<f64> = b.iter().map(|r| r.sfs).collect();
    let rho = spearman(&x, &y).unwrap_or(f64::NAN);
    ((rho - 1.0).abs() < 1e-12, rho)
}

fn structural_checks(
    clause: &ScoreOutput,
    sentence: &ScoreOutput,
    sweep: &[(f64, ScoreOutput)],
    tiers: &[TierRow],
    egsr_traj: &[f64],
) -> Vec<Check> {
    let sfs = sfs_of(&clause.conditions);
    let get = |c: &str| sfs.get(c).copied().unwrap_or(f64::NAN);
    let (e, b, d, v) = (get(EGSR_MOCK), get(BASELINE), get(DECAY_MOCK), get(VOTE_MOCK));
    let mut checks = vec![
        check(
            "sfs-ordering",
            e > b && b > d && d > v && v < 0.05,
            format!("{EGSR_MOCK} {e:.6} > {BASELINE} {b:.6} > {DECAY_MOCK} {d:.6} > {VOTE_MOCK} {v:.6}"),
        ),
        check(
            "egsr-non-decreasing",
            !egsr_traj.is_empty() && egsr_traj.windows(2).all(|w| w[1] >= w[0] - 1e-12),
            format!("{egsr_traj:.6?}"),
        ),
    ];
    let tier = |c: &str| tiers.iter().find(|t| t.condition == c);
    let decay = tier(DECAY_MOCK);
    checks.push(check(
        "decay-trap",
        decay.is_some_and(|t| t.trap && t.tier == "trap-proper"),
        decay.map_or("missing".into(), |t| format!("trap {} tier {}", t.trap, t.tier)),
    ));
    let vote = tier(VOTE_MOCK);
    checks.push(check(
        "vote-elimination",
        vote.is_some_and(|t| t.tier == "elimination"),
        vote.map_or("missing".into(), |t| format!("tier {}", t.tier)),
    ));
    let (ok, rho) = same_ranking(&clause.conditions, &sentence.conditions);
    checks.push(check("decomposer-ranking", ok, format!("spearman {rho:.6}")));
    let mut tau_ok = true;
    let mut detail = Vec::new();
    for (t, out) in sweep {
        let (ok, rho) = same_ranking(&clause.conditions, &out.conditions);
        tau_ok &= ok;
        detail.push(format!("tau {t:.1}: spearman {rho:.6}"));
    }
    checks.push(check("tau-ranking", tau_ok, detail.join("; ")));
    checks
}

/// Every suite, every shipped condition on the scripted mock, scoring under
/// both decomposers and the tau sweep, then analysis on the shipped
/// hypotheses and ratings. Outputs are byte-identical for a fixed seed.
pub fn run_desk(seed: u64, jobs: usize, out: &Path, fmts: &[ReportFormat]) -> Result<DeskSummary> {
    let sim = simulate_suites(DESK_CHAINS, seed, false, jobs)?;
    write_outcome(&sim, &out.join("simulate"))?;
    let mut checks: Vec<Check> = sim
        .reports
        .iter()
        .map(|r| check(&format!("suite:{}", r.name), r.passed, r.summary_line()))
        .collect();

    let dataset = corpus(None)?;
    let mut artifacts: Vec<RunArtifact> = Vec::new();
    for cfg in builtin_conditions() {
        let backend = run::mock_backend(MockMode::Scripted, &cfg, &dataset);
        let a = run::execute_run(&cfg, &dataset, &backend, seed, jobs, "shipped-claims")?;
        save_run(&a, &out.join("runs").join(&cfg.condition_id)).map_err(config)?;
        artifacts.push(a);
    }

    let pool = pool(jobs)?;
    let clause = score_all(&engine("clause", 0.7, true)?, &artifacts, &dataset, &pool)?;
    let sweep = TAU_SWEEP
        .iter()
        .map(|&t| Ok((t, score_all(&engine("clause", t, true)?, &artifacts, &dataset, &pool)?)))
        .collect::<Result<Vec<_>>>()?;
    let sentence = score_all(&engine("sentence", 0.7, true)?, &artifacts, &dataset, &pool)?;
    write_scores(&out.join("scores").join("clause"), &clause, &sweep, &artifacts)?;
    write_scores(&out.join("scores").join("sentence"), &sentence, &[], &artifacts)?;

    let rows = clause.rows();
    let spec = HypothesisSpec::from_toml(fixtures::HYPOTHESES).map_err(config)?;
    let ratings = parse_ratings(fixtures::RATINGS.as_bytes()).map_err(config)?;
    let (agreement, kappa) = agreement(&ratings);
    let tiers = tier_rows(&clause.conditions, BASELINE);
    let report = Report {
        conditions: clause.conditions.clone(),
        hypotheses: hypotheses(&spec, &rows, seed)?,
        agreement,
        kappa,
        correlations: correlations(&rows),
        tiers: tiers.clone(),
    };
    emit_report(&report, &out.join("report"), fmts).map_err(config)?;

    let egsr_traj = artifacts
        .iter()
        .position(|a| a.condition_id() == EGSR_MOCK)
        .map(|i| mean_trajectory(&clause.scored[i]))
        .unwrap_or_default();
    checks.extend(structural_checks(&clause, &sentence, &sweep, &tiers, &egsr_traj));
    let summary = DeskSummary {
        seed,
        checks,
        egsr_trajectory: egsr_traj,
    };
    let mut json = serde_json::to_string_pretty(&summary).map_err(config)?;
    json.push('\n');
    write_file(&out.join("desk_summary.json"), &json)?;
    for l in summary_lines(&sim.reports) {
        tracing::info!("{l}");
    }
    Ok(summary)
}

/// Condition and tier tables from persisted runs and their scored CSVs.
pub fn report_from_runs(runs: &[std::path::PathBuf], scores: &[std::path::PathBuf]) -> Result<Report> {
    let rows = load_all_scored(scores)?;
    let mut conditions = Vec::new();
    for p in runs {
        let a = load_run(p).map_err(|e| CliError::Failed(format!("{}: {e}", p.display())))?;
        let mine: Vec<_> = rows
            .iter()
            .filter(|r| r.condition == a.condition_id())
            .cloned()
            .collect();
        if mine.is_empty() {
            return Err(CliError::Config(format!(
                "no scored rows for condition {}",
                a.condition_id()
            )));
        }
        conditions.push(condition_row(&a, &mine));
    }
    Ok(Report {
        tiers: tier_rows(&conditions, BASELINE),
        correlations: correlations(&rows),
        conditions,
        ..Report::default()
    })
}

pub fn cmd_report(a: &ReportArgs, jobs: usize) -> Result<()> {
    let fmts = formats(&a.format);
    match a.profile {
        Some(Profile::Desk) => {
            let s = run_desk(a.seed, jobs, &a.out, &fmts)?;
            for c in &s.checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            if s.passed() {
                Ok(())
            } else {
                Err(CliError::Failed("desk checks failed".into()))
            }
        }
        None => {
            let report = report_from_runs(&a.runs, &a.scores)?;
            emit_report(&report, &a.out, &fmts).map_err(config)?;
            for c in &report.conditions {
                println!("{}: sfs {:.6} acc {:.6}", c.condition, c.sfs, c.acc);
            }
            Ok(())
        }
    }
}
