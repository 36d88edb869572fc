//! Claim corpora, rating files, run directories and report tables.
//!
//! Every parse failure names its location: a 1-based line for JSONL and CSV
//! input, a trial index for run directories.

mod claims;
mod ratings;
mod report;
mod run;

pub use claims::{load_claims, parse_claims, save_claims, write_claims, ClaimRecord};
pub use ratings::{load_ratings, parse_ratings, RatingRecord, Ratings};
pub use report::{
    condition_row, emit_report, load_scored, parse_markdown_table, AgreementRow, ConditionRow, CorrelationRow, Report,
    ReportFormat, TierRow,
};
pub use run::{load_run, save_run, MANIFEST_FILE, TRIALS_FILE};

use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: missing field `{field}`")]
    MissingField { line: usize, field: String },
    #[error("line {line}: duplicate id `{id}`")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: {field} = {value} is out of range")]
    OutOfRange { line: usize, field: String, value: String },
    #[error("manifest schema version {found}, expected {expected}")]
    ManifestVersionMismatch { found: u64, expected: u64 },
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("trial {index}: {message}")]
    TrialParse { index: usize, message: String },
}

pub type Result<T> = std::result::Result<T, CorpusError>;

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    }
}
