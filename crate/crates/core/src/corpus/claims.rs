use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{io_err, CorpusError, Result};
use crate::faithfulness::{EvidenceSet, Passage, Verdict};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClaimRecord {
    pub claim_id: String,
    pub claim_text: String,
    pub gold_label: Verdict,
    pub evidence: Vec<Passage>,
}

impl ClaimRecord {
    pub fn evidence_set(&self) -> EvidenceSet {
        // Passage ids are checked unique at load time.
        EvidenceSet {
            claim_id: self.claim_id.clone(),
            passages: self.evidence.clone(),
        }
    }
}

const REQUIRED: [&str; 4] = ["claim_id", "claim_text", "gold_label", "evidence"];

pub fn load_claims(path: &Path) -> Result<Vec<ClaimRecord>> {
    let f = std::fs::File::open(path).map_err(io_err(path))?;
    parse_claims(BufReader::new(f)).map_err(|e| match e {
        CorpusError::Io { source, .. } => CorpusError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => other,
    })
}

/// Blank lines are allowed; every other line must hold one record.
pub fn parse_claims<R: BufRead>(r: R) -> Result<Vec<ClaimRecord>> {
    let mut out = Vec::new();
    let mut ids = BTreeSet::new();
    for (i, line) in r.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|source| CorpusError::Io {
            path: Default::default(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let parse = |message: String| CorpusError::Parse { line: line_no, message };
        let v: serde_json::Value = serde_json::from_str(&line).map_err(|e| parse(e.to_string()))?;
        let obj = v.as_object().ok_or_else(|| parse("expected a JSON object".into()))?;
        if let Some(f) = REQUIRED.iter().find(|f| !obj.contains_key(**f)) {
            return Err(CorpusError::MissingField {
                line: line_no,
                field: f.to_string(),
            });
        }
        let rec: ClaimRecord = serde_json::from_value(v).map_err(|e| parse(e.to_string()))?;
        let mut pids = BTreeSet::new();
        if let Some(p) = rec.evidence.iter().find(|p| !pids.insert(p.passage_id.as_str())) {
            return Err(CorpusError::DuplicateId {
                line: line_no,
                id: p.passage_id.clone(),
            });
        }
        if !ids.insert(rec.claim_id.clone()) {
            return Err(CorpusError::DuplicateId {
                line: line_no,
                id: rec.claim_id,
            });
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn write_claims<W: Write>(mut w: W, claims: &[ClaimRecord]) -> std::io::Result<()> {
    for c in claims {
        serde_json::to_writer(&mut w, c)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn save_claims(path: &Path, claims: &[ClaimRecord]) -> Result<()> {
    let f = std::fs::File::create(path).map_err(io_err(path))?;
    write_claims(std::io::BufWriter::new(f), claims).map_err(io_err(path))
}
