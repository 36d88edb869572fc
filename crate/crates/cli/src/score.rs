use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use groundlab_core::corpus::{condition_row, load_run, ClaimRecord, ConditionRow};
use groundlab_core::faithfulness::{
    decomposer_by_name, score_batch, write_batch_csv, BatchItem, BatchRow, EmptyPolicy, EvidenceSet, SfsEngine,
};
use groundlab_core::protocols::RunArtifact;

use crate::args::ScoreArgs;
use crate::{config, corpus, write_file, CliError, Result};

pub const TAU_SWEEP: [f64; 4] = [0.3, 0.5, 0.7, 0.9];

pub fn engine(decomposer: &str, tau: f64, empty_as_zero: bool) -> Result<SfsEngine> {
    let d = decomposer_by_name(decomposer).map_err(config)?;
    let policy = if empty_as_zero {
        EmptyPolicy::ScoreZero
    } else {
        EmptyPolicy::Error
    };
    Ok(SfsEngine::default()
        .with_decomposer(Arc::from(d))
        .with_tau(tau)
        .with_tau_cite(tau)
        .with_empty_policy(policy))
}

/// Scored trials of one run, keyed by claim id, with per-round SFS.
pub struct ScoredRun {
    pub rows: Vec<BatchRow>,
    pub rounds: Vec<Vec<f64>>,
}

fn evidence_index(dataset: &[ClaimRecord]) -> BTreeMap<&str, &ClaimRecord> {
    dataset.iter().map(|c| (c.claim_id.as_str(), c)).collect()
}

/// Trials are scored against the corpus evidence, never against injected
/// distractors.
pub fn score_run(engine: &SfsEngine, artifact: &RunArtifact, dataset: &[ClaimRecord]) -> Result<ScoredRun> {
    let index = evidence_index(dataset);
    let cond = artifact.condition_id();
    let mut items = Vec::with_capacity(artifact.trials.len());
    let mut evidence: Vec<EvidenceSet> = Vec::with_capacity(artifact.trials.len());
    for t in &artifact.trials {
        let claim = index
            .get(t.claim_id.as_str())
            .ok_or_else(|| CliError::Config(format!("{cond}: claim {} not in corpus", t.claim_id)))?;
        let ev = claim.evidence_set();
        evidence.push(ev.clone());
        items.push(BatchItem {
            trace_id: t.claim_id.clone(),
            condition: cond.to_string(),
            text: t.final_text.clone(),
            evidence: ev,
            verdict: Some(t.final_verdict),
            reference: Some(t.claim_text.clone()),
            rounds: Some(t.round_outputs()),
        });
    }
    let rows = score_batch(engine, &items)
        .map_err(|e| CliError::Failed(format!("{cond}: {e}")))?
        .into_iter()
        .map(|(row, _)| row)
        .collect();
    let rounds = artifact
        .trials
        .iter()
        .zip(&evidence)
        .map(|(t, ev)| {
            engine
                .sfs_trajectory(cond, &t.rounds, ev)
                .map(|tr| tr.per_round_sfs)
                .map_err(|e| CliError::Failed(format!("{cond}/{}: {e}", t.claim_id)))
        })
        .collect::<Result<_>>()?;
    Ok(ScoredRun { rows, rounds })
}

pub fn scores_csv(rows: &[BatchRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_batch_csv(&mut buf, rows).map_err(config)?;
    String::from_utf8(buf).map_err(config)
}

pub fn conditions_csv(rows: &[ConditionRow]) -> String {
    let mut s = String::from("condition,trials,failures,acc,sfs,eur,rcva,emc,cost\n");
    for r in rows {
        let emc = r.emc.map(|v| format!("{v:.6}")).unwrap_or_default();
        let _ = writeln!(
            s,
            "{},{},{},{:.6},{:.6},{:.6},{:.6},{emc},{:.6}",
            r.condition, r.trials, r.failures, r.acc, r.sfs, r.eur, r.rcva, r.cost
        );
    }
    s
}

pub fn rounds_csv(artifacts: &[RunArtifact], scored: &[ScoredRun]) -> String {
    let mut s = String::from("trace_id,condition,round,sfs\n");
    for (a, sc) in artifacts.iter().zip(scored) {
        for (t, traj) in a.trials.iter().zip(&sc.rounds) {
            for (r, v) in traj.iter().enumerate() {
                let _ = writeln!(s, "{},{},{r},{v:.6}", t.claim_id, a.condition_id());
            }
        }
    }
    s
}

/// Mean per-round SFS of one run; trials shorter than the longest are
/// averaged over the trials that reached each round.
pub fn mean_trajectory(sc: &ScoredRun) -> Vec<f64> {
    let len = sc.rounds.iter().map(Vec::len).max().unwrap_or(0);
    (0..len)
        .map(|r| {
            let vals: Vec<f64> = sc.rounds.iter().filter_map(|t| t.get(r).copied()).collect();
            vals.iter().sum::<f64>() / vals.len() as f64
        })
        .collect()
}

/// Everything one engine produces over a set of runs.
pub struct ScoreOutput {
    pub scored: Vec<ScoredRun>,
    pub conditions: Vec<ConditionRow>,
}

impl ScoreOutput {
    pub fn rows(&self) -> Vec<BatchRow> {
        self.scored.iter().flat_map(|s| s.rows.iter().cloned()).collect()
    }
}

pub fn score_all(
    engine: &SfsEngine,
    artifacts: &[RunArtifact],
    dataset: &[ClaimRecord],
    pool: &rayon::ThreadPool,
) -> Result<ScoreOutput> {
    let scored: Vec<ScoredRun> = pool.install(|| {
        artifacts
            .iter()
            .map(|a| score_run(engine, a, dataset))
            .collect::<Result<_>>()
    })?;
    let conditions = artifacts
        .iter()
        .zip(&scored)
        .map(|(a, s)| condition_row(a, &s.rows))
        .collect();
    Ok(ScoreOutput { scored, conditions })
}

pub fn tau_label(tau: f64) -> String {
    format!("tau{tau:.1}")
}

/// Writes scores, per-condition means and per-round trajectories, plus one
/// scores/conditions pair per swept tau.
pub fn write_scores(
    dir: &Path,
    main: &ScoreOutput,
    sweep: &[(f64, ScoreOutput)],
    artifacts: &[RunArtifact],
) -> Result<()> {
    write_file(&dir.join("scores.csv"), &scores_csv(&main.rows())?)?;
    write_file(&dir.join("conditions.csv"), &conditions_csv(&main.conditions))?;
    write_file(&dir.join("rounds.csv"), &rounds_csv(artifacts, &main.scored))?;
    for (tau, out) in sweep {
        let l = tau_label(*tau);
        write_file(&dir.join(format!("scores_{l}.csv")), &scores_csv(&out.rows())?)?;
        write_file(
            &dir.join(format!("conditions_{l}.csv")),
            &conditions_csv(&out.conditions),
        )?;
    }
    Ok(())
}

pub fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(config)
}

pub fn cmd_score(a: &ScoreArgs, jobs: usize) -> Result<()> {
    let dataset = corpus(a.corpus.as_deref())?;
    let artifacts = a
        .runs
        .iter()
        .map(|p| load_run(p).map_err(|e| CliError::Failed(format!("{}: {e}", p.display()))))
        .collect::<Result<Vec<_>>>()?;
    let pool = pool(jobs)?;
    let name = a.decomposer.name();
    let main = score_all(
        &engine(name, a.tau, a.score_empty_as_zero)?,
        &artifacts,
        &dataset,
        &pool,
    )?;
    let sweep = if a.tau_sweep {
        TAU_SWEEP
            .iter()
            .map(|&t| {
                Ok((
                    t,
                    score_all(&engine(name, t, a.score_empty_as_zero)?, &artifacts, &dataset, &pool)?,
                ))
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    write_scores(&a.out, &main, &sweep, &artifacts)?;
    for c in &main.conditions {
        println!(
            "{}: sfs {:.6} acc {:.6} over {} trials",
            c.condition, c.sfs, c.acc, c.trials
        );
    }
    Ok(())
}
