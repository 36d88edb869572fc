use std::collections::BTreeMap;

use groundlab_core::corpus::{
    emit_report, load_ratings, load_scored, AgreementRow, CorrelationRow, Ratings, Report, ReportFormat,
};
use groundlab_core::faithfulness::BatchRow;
use groundlab_core::stats::hypothesis::{evaluate, HypothesisRow, HypothesisSpec};
use groundlab_core::stats::{fleiss_kappa, kappa_matrix, pearson, spearman, KappaMatrix, RatingMatrix, Weighting};

use crate::args::{AnalyzeArgs, FormatChoice};
use crate::{config, CliError, Result};

pub fn formats(f: &[FormatChoice]) -> Vec<ReportFormat> {
    f.iter()
        .map(|c| match c {
            FormatChoice::Csv => ReportFormat::Csv,
            FormatChoice::Json => ReportFormat::Json,
            FormatChoice::Markdown => ReportFormat::Markdown,
        })
        .collect()
}

fn metric(row: &BatchRow, name: &str) -> Option<f64> {
    match name {
        "sfs" => Some(row.sfs),
        "eur" => Some(row.eur),
        "rcva" => Some(row.rcva),
        "emc" => row.emc,
        "claim_count" => Some(row.claim_count as f64),
        _ => None,
    }
}

/// Hypothesis rows over scored trials paired on trace id.
pub fn hypotheses(spec: &HypothesisSpec, rows: &[BatchRow], seed: u64) -> Result<Vec<HypothesisRow>> {
    if spec.hypotheses.is_empty() {
        return Ok(Vec::new());
    }
    evaluate(spec, seed, |cond, name| {
        let vals: BTreeMap<String, f64> = rows
            .iter()
            .filter(|r| r.condition == cond)
            .filter_map(|r| Some((r.trace_id.clone(), metric(r, name)?)))
            .collect();
        (!vals.is_empty()).then_some(vals)
    })
    .map_err(config)
}

fn agreement_row(cohort: &str, question: &str, m: &RatingMatrix) -> AgreementRow {
    AgreementRow {
        cohort: cohort.to_string(),
        question: question.to_string(),
        items: m.cells.len(),
        raters: m.raters.len(),
        fleiss_kappa: fleiss_kappa(m).ok().map(|r| r.kappa),
    }
}

/// Fleiss kappa per cohort and question, and the pairwise Cohen matrix on the
/// binary question over every rater.
pub fn agreement(r: &Ratings) -> (Vec<AgreementRow>, Option<KappaMatrix>) {
    let mut rows = Vec::new();
    for name in r.cohort_names() {
        let c = r.cohort(&name);
        rows.push(agreement_row(&name, "q1", &c.q1));
        rows.push(agreement_row(&name, "q2", &c.q2));
    }
    (rows, kappa_matrix(&r.q2, Weighting::None).ok())
}

/// Trial-level metric correlations; `sfs~claim_count` is the verbosity check.
pub fn correlations(rows: &[BatchRow]) -> Vec<CorrelationRow> {
    let mut out = Vec::new();
    for other in ["eur", "rcva", "claim_count"] {
        let (x, y): (Vec<f64>, Vec<f64>) = rows.iter().filter_map(|r| Some((r.sfs, metric(r, other)?))).unzip();
        for (method, f) in [("pearson", pearson as fn(&[f64], &[f64]) -> _), ("spearman", spearman)] {
            out.push(CorrelationRow {
                name: format!("sfs~{other}"),
                method: method.to_string(),
                n: x.len(),
                r: f(&x, &y).ok(),
            });
        }
    }
    out
}

pub fn load_all_scored(paths: &[std::path::PathBuf]) -> Result<Vec<BatchRow>> {
    let mut rows = Vec::new();
    for p in paths {
        rows.extend(load_scored(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?);
    }
    Ok(rows)
}

pub fn cmd_analyze(a: &AnalyzeArgs) -> Result<()> {
    let rows = load_all_scored(&a.scores)?;
    let spec = match &a.hypotheses {
        Some(p) => {
            let src = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            HypothesisSpec::from_toml(&src).map_err(config)?
        }
        None => HypothesisSpec::from_toml("").map_err(config)?,
    };
    let mut report = Report {
        hypotheses: hypotheses(&spec, &rows, a.seed)?,
        correlations: if rows.is_empty() {
            Vec::new()
        } else {
            correlations(&rows)
        },
        ..Report::default()
    };
    if let Some(p) = &a.ratings {
        let r = load_ratings(p).map_err(config)?;
        (report.agreement, report.kappa) = agreement(&r);
    }
    emit_report(&report, &a.out, &formats(&a.format)).map_err(config)?;
    for h in &report.hypotheses {
        println!(
            "{} {} {} vs {}: p {:.6} reject {}",
            h.id, h.metric, h.condition_a, h.condition_b, h.p_value, h.reject
        );
    }
    for g in &report.agreement {
        if let Some(k) = g.fleiss_kappa {
            println!("{} {}: fleiss kappa {k:.6}", g.cohort, g.question);
        }
    }
    Ok(())
}
