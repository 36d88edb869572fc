//! Run directory layout: `manifest.json` (pretty JSON) and `trials.jsonl`
//! (one compact record per line, dataset order).

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{io_err, CorpusError, Result};
use crate::protocols::{RunArtifact, RunManifest, TrialRecord, SCHEMA_VERSION};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TRIALS_FILE: &str = "trials.jsonl";

pub fn save_run(artifact: &RunArtifact, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mpath = dir.join(MANIFEST_FILE);
    let mut manifest =
        serde_json::to_string_pretty(&artifact.manifest).map_err(|e| CorpusError::Manifest(e.to_string()))?;
    manifest.push('\n');
    std::fs::write(&mpath, manifest).map_err(io_err(&mpath))?;

    let tpath = dir.join(TRIALS_FILE);
    let f = std::fs::File::create(&tpath).map_err(io_err(&tpath))?;
    let mut w = BufWriter::new(f);
    for t in &artifact.trials {
        let line = serde_json::to_string(t).map_err(|e| CorpusError::TrialParse {
            index: t.index,
            message: e.to_string(),
        })?;
        writeln!(w, "{line}").map_err(io_err(&tpath))?;
    }
    w.flush().map_err(io_err(&tpath))
}

pub fn load_run(dir: &Path) -> Result<RunArtifact> {
    let mpath = dir.join(MANIFEST_FILE);
    let raw = std::fs::read_to_string(&mpath).map_err(io_err(&mpath))?;
    let v: serde_json::Value = serde_json::from_str(&raw).map_err(|e| CorpusError::Manifest(e.to_string()))?;
    let found = v
        .get("schema_version")
        .and_then(|s| s.as_u64())
        .ok_or_else(|| CorpusError::Manifest("missing schema_version".into()))?;
    if found != u64::from(SCHEMA_VERSION) {
        return Err(CorpusError::ManifestVersionMismatch {
            found,
            expected: u64::from(SCHEMA_VERSION),
        });
    }
    let manifest: RunManifest = serde_json::from_value(v).map_err(|e| CorpusError::Manifest(e.to_string()))?;

    let tpath = dir.join(TRIALS_FILE);
    let f = std::fs::File::open(&tpath).map_err(io_err(&tpath))?;
    let mut trials = Vec::with_capacity(manifest.trial_count);
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(io_err(&tpath))?;
        let t: TrialRecord = serde_json::from_str(&line).map_err(|e| CorpusError::TrialParse {
            index: i,
            message: e.to_string(),
        })?;
        trials.push(t);
    }
    if trials.len() != manifest.trial_count {
        return Err(CorpusError::TrialParse {
            index: trials.len(),
            message: format!(
                "manifest lists {} trials, file holds {}",
                manifest.trial_count,
                trials.len()
            ),
        });
    }
    Ok(RunArtifact { manifest, trials })
}
