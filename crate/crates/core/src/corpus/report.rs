use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{io_err, CorpusError, Result};
use crate::faithfulness::BatchRow;
use crate::protocols::RunArtifact;
use crate::stats::hypothesis::HypothesisRow;
use crate::stats::KappaMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportFormat {
    Csv,
    Json,
    Markdown,
}

impl ReportFormat {
    pub const ALL: [ReportFormat; 3] = [ReportFormat::Csv, ReportFormat::Json, ReportFormat::Markdown];
}

/// Per-condition means over scored trials. `cost` is mean tokens per trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionRow {
    pub condition: String,
    pub trials: usize,
    pub failures: usize,
    pub acc: f64,
    pub sfs: f64,
    pub eur: f64,
    pub rcva: f64,
    pub emc: Option<f64>,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub name: String,
    pub method: String,
    pub n: usize,
    pub r: Option<f64>,
}

/// One condition against the baseline: trap flag and retention tier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TierRow {
    pub condition: String,
    pub baseline: String,
    pub acc_retention: f64,
    pub sfs_retention: f64,
    pub trap: bool,
    pub tier: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementRow {
    pub cohort: String,
    pub question: String,
    pub items: usize,
    pub raters: usize,
    pub fleiss_kappa: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Report {
    pub conditions: Vec<ConditionRow>,
    pub hypotheses: Vec<HypothesisRow>,
    pub agreement: Vec<AgreementRow>,
    pub kappa: Option<KappaMatrix>,
    pub correlations: Vec<CorrelationRow>,
    pub tiers: Vec<TierRow>,
}

/// `rows` are the scored trials of this artifact's condition.
pub fn condition_row(artifact: &RunArtifact, rows: &[BatchRow]) -> ConditionRow {
    let n = rows.len();
    let mean = |f: &dyn Fn(&BatchRow) -> f64| {
        if n == 0 {
            0.0
        } else {
            rows.iter().map(f).sum::<f64>() / n as f64
        }
    };
    let emcs: Vec<f64> = rows.iter().filter_map(|r| r.emc).collect();
    let trials = artifact.trials.len();
    ConditionRow {
        condition: artifact.condition_id().to_string(),
        trials,
        failures: artifact.manifest.failures.len(),
        acc: artifact.accuracy(),
        sfs: mean(&|r| r.sfs),
        eur: mean(&|r| r.eur),
        rcva: mean(&|r| r.rcva),
        emc: (!emcs.is_empty()).then(|| emcs.iter().sum::<f64>() / emcs.len() as f64),
        cost: if trials == 0 {
            0.0
        } else {
            artifact.trials.iter().map(|t| t.total_tokens()).sum::<u64>() as f64 / trials as f64
        },
    }
}

pub fn load_scored(path: &Path) -> Result<Vec<BatchRow>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| CorpusError::Parse {
        line: 0,
        message: format!("{}: {e}", path.display()),
    })?;
    rdr.deserialize()
        .map(|r| {
            r.map_err(|e: csv::Error| CorpusError::Parse {
                line: e.position().map_or(0, |p| p.line() as usize),
                message: e.to_string(),
            })
        })
        .collect()
}

struct Table {
    name: &'static str,
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn num(v: f64) -> String {
    // adding zero folds -0.0 into 0.0
    format!("{:.6}", v + 0.0)
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn tables(r: &Report) -> Vec<Table> {
    let h = |names: &[&str]| names.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let conditions = Table {
        name: "conditions",
        headers: h(&[
            "condition",
            "trials",
            "failures",
            "acc",
            "sfs",
            "eur",
            "rcva",
            "emc",
            "cost",
        ]),
        rows: r
            .conditions
            .iter()
            .map(|c| {
                vec![
                    c.condition.clone(),
                    c.trials.to_string(),
                    c.failures.to_string(),
                    num(c.acc),
                    num(c.sfs),
                    num(c.eur),
                    num(c.rcva),
                    opt(c.emc),
                    num(c.cost),
                ]
            })
            .collect(),
    };
    let hypotheses = Table {
        name: "hypotheses",
        headers: h(&[
            "id",
            "family",
            "metric",
            "condition_a",
            "condition_b",
            "n",
            "statistic",
            "p",
            "d",
            "ci_low",
            "ci_high",
            "holm_threshold",
            "reject",
        ]),
        rows: r
            .hypotheses
            .iter()
            .map(|x| {
                vec![
                    x.id.clone(),
                    x.family.clone(),
                    x.metric.clone(),
                    x.condition_a.clone(),
                    x.condition_b.clone(),
                    x.n.to_string(),
                    num(x.statistic),
                    num(x.p_value),
                    opt(x.d),
                    opt(x.ci_low),
                    opt(x.ci_high),
                    num(x.holm_threshold),
                    x.reject.to_string(),
                ]
            })
            .collect(),
    };
    let agreement = Table {
        name: "agreement",
        headers: h(&["cohort", "question", "items", "raters", "fleiss_kappa"]),
        rows: r
            .agreement
            .iter()
            .map(|a| {
                vec![
                    a.cohort.clone(),
                    a.question.clone(),
                    a.items.to_string(),
                    a.raters.to_string(),
                    opt(a.fleiss_kappa),
                ]
            })
            .collect(),
    };
    let kappa = match &r.kappa {
        Some(k) => Table {
            name: "kappa",
            headers: std::iter::once("rater".to_string())
                .chain(k.raters.iter().cloned())
                .collect(),
            rows: k
                .raters
                .iter()
                .zip(&k.entries)
                .map(|(name, row)| {
                    std::iter::once(name.clone())
                        .chain(row.iter().map(|v| opt(*v)))
                        .collect()
                })
                .collect(),
        },
        None => Table {
            name: "kappa",
            headers: h(&["rater"]),
            rows: Vec::new(),
        },
    };
    let correlations = Table {
        name: "correlations",
        headers: h(&["name", "method", "n", "r"]),
        rows: r
            .correlations
            .iter()
            .map(|c| vec![c.name.clone(), c.method.clone(), c.n.to_string(), opt(c.r)])
            .collect(),
    };
    let tiers = Table {
        name: "tiers",
        headers: h(&[
            "condition",
            "baseline",
            "acc_retention",
            "sfs_retention",
            "trap",
            "tier",
        ]),
        rows: r
            .tiers
            .iter()
            .map(|t| {
                vec![
                    t.condition.clone(),
                    t.baseline.clone(),
                    num(t.acc_retention),
                    num(t.sfs_retention),
                    t.trap.to_string(),
                    t.tier.clone(),
                ]
            })
            .collect(),
    };
    vec![conditions, hypotheses, agreement, kappa, correlations, tiers]
}

fn markdown(t: &Table) -> String {
    let line = |cells: &[String]| {
        let esc: Vec<String> = cells.iter().map(|c| c.replace('|', "\\|")).collect();
        format!("| {} |\n", esc.join(" | "))
    };
    let mut s = line(&t.headers);
    s.push_str(&format!("|{}\n", "---|".repeat(t.headers.len())));
    for r in &t.rows {
        s.push_str(&line(r));
    }
    s
}

/// Headers and rows of a pipe-delimited table as written by [`emit_report`].
pub fn parse_markdown_table(src: &str) -> Option<(Vec<String>, Vec<Vec<String>>)> {
    let split = |l: &str| -> Vec<String> {
        let inner = l.trim().strip_prefix('|').unwrap_or(l).strip_suffix('|').unwrap_or(l);
        let mut cells = Vec::new();
        let mut cur = String::new();
        let mut chars = inner.chars().peekable();
        while let Some(c) = chars.next() {
            match c {
                '\\' if chars.peek() == Some(&'|') => {
                    cur.push('|');
                    chars.next();
                }
                '|' => cells.push(std::mem::take(&mut cur).trim().to_string()),
                _ => cur.push(c),
            }
        }
        cells.push(cur.trim().to_string());
        cells
    };
    let mut lines = src.lines().filter(|l| l.trim_start().starts_with('|'));
    let headers = split(lines.next()?);
    let sep = lines.next()?;
    if !sep.chars().all(|c| matches!(c, '|' | '-' | ':' | ' ')) {
        return None;
    }
    Some((headers, lines.map(split).collect()))
}

/// Writes `<table>.csv`, `<table>.md` and `report.json` under `dir` for the
/// requested formats. Empty sections produce header-only tables.
pub fn emit_report(report: &Report, dir: &Path, formats: &[ReportFormat]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();
    let tables = tables(report);
    for f in formats {
        match f {
            ReportFormat::Csv => {
                for t in &tables {
                    let path = dir.join(format!("{}.csv", t.name));
                    let mut w = csv::Writer::from_path(&path).map_err(|e| CorpusError::Io {
                        path: path.clone(),
                        source: e.into(),
                    })?;
                    let csv_err = |e: csv::Error| CorpusError::Io {
                        path: path.clone(),
                        source: e.into(),
                    };
                    w.write_record(&t.headers).map_err(csv_err)?;
                    for r in &t.rows {
                        w.write_record(r).map_err(csv_err)?;
                    }
                    w.flush().map_err(io_err(&path))?;
                    written.push(path);
                }
            }
            ReportFormat::Markdown => {
                for t in &tables {
                    let path = dir.join(format!("{}.md", t.name));
                    std::fs::write(&path, markdown(t)).map_err(io_err(&path))?;
                    written.push(path);
                }
            }
            ReportFormat::Json => {
                let path = dir.join("report.json");
                let mut s = serde_json::to_string_pretty(report).map_err(|e| CorpusError::Io {
                    path: path.clone(),
                    source: e.into(),
                })?;
                s.push('\n');
                std::fs::write(&path, s).map_err(io_err(&path))?;
                written.push(path);
            }
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        Report {
            conditions: vec![
                ConditionRow {
                    condition: "C1".into(),
                    trials: 10,
                    failures: 0,
                    acc: 0.7,
                    sfs: 0.333333,
                    eur: 0.5,
                    rcva: 1.0,
                    emc: None,
                    cost: 120.0,
                },
                ConditionRow {
                    condition: "C15".into(),
                    trials: 10,
                    failures: 1,
                    acc: 0.8,
                    sfs: 0.0,
                    eur: 0.0,
                    rcva: 0.0,
                    emc: Some(0.25),
                    cost: 900.5,
                },
            ],
            ..Default::default()
        }
    }

    #[test]
    fn markdown_parses_back_to_the_csv_values() {
        let dir = tempfile::tempdir().unwrap();
        emit_report(&sample(), dir.path(), &ReportFormat::ALL).unwrap();
        let md = std::fs::read_to_string(dir.path().join("conditions.md")).unwrap();
        let (headers, rows) = parse_markdown_table(&md).unwrap();
        let mut rdr = csv::Reader::from_path(dir.path().join("conditions.csv")).unwrap();
        let csv_headers: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
        let csv_rows: Vec<Vec<String>> = rdr
            .records()
            .map(|r| r.unwrap().iter().map(String::from).collect())
            .collect();
        assert_eq!(headers, csv_headers);
        assert_eq!(rows, csv_rows);
        assert_eq!(rows[1][7], "0.250000");
        assert_eq!(rows[0][7], "");
    }

    #[test]
    fn empty_report_writes_headers_only() {
        let dir = tempfile::tempdir().unwrap();
        let files = emit_report(&Report::default(), dir.path(), &[ReportFormat::Csv]).unwrap();
        assert_eq!(files.len(), 6);
        let s = std::fs::read_to_string(dir.path().join("hypotheses.csv")).unwrap();
        assert_eq!(s.lines().count(), 1);
        assert!(s.starts_with("id,family,metric"));
    }
}
