use std::collections::BTreeMap;

use groundlab_core::corpus::{save_run, ClaimRecord};
use groundlab_core::protocols::{
    builtin_condition, run_condition, AgentBackend, FailureReason, HttpChatBackend, HttpChatConfig, MockBackend,
    MockMode, ProtocolConfig, RunArtifact, RunOptions,
};

use crate::args::{BackendChoice, RunArgs};
use crate::{config, corpus, CliError, Result};

pub const DEFAULT_BASE_URL: &str = "http://127.0.0.1:8000/v1";

pub fn load_condition(id: Option<&str>, path: Option<&std::path::Path>) -> Result<ProtocolConfig> {
    match (path, id) {
        (Some(p), _) => {
            let src = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            ProtocolConfig::from_toml(&src).map_err(config)
        }
        (None, Some(id)) => builtin_condition(id).ok_or_else(|| CliError::Config(format!("unknown condition {id}"))),
        (None, None) => Err(CliError::Config("no condition given".into())),
    }
}

pub fn answer_key(dataset: &[ClaimRecord]) -> BTreeMap<String, groundlab_core::faithfulness::Verdict> {
    dataset.iter().map(|c| (c.claim_id.clone(), c.gold_label)).collect()
}

pub fn mock_backend(mode: MockMode, cfg: &ProtocolConfig, dataset: &[ClaimRecord]) -> MockBackend {
    MockBackend::new(mode, cfg.mock.clone(), answer_key(dataset))
}

fn http_backend(a: &RunArgs) -> Result<HttpChatBackend> {
    let mut hc = match &a.http_config {
        Some(p) => {
            let src = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            toml::from_str::<HttpChatConfig>(&src).map_err(|e| CliError::Config(format!("http config: {e}")))?
        }
        None => HttpChatConfig::new(DEFAULT_BASE_URL, "default"),
    };
    if let Some(u) = &a.base_url {
        hc.base_url = u.clone();
    }
    if let Some(m) = &a.model {
        hc.model = m.clone();
    }
    HttpChatBackend::from_env(hc).map_err(config)
}

pub fn execute_run(
    cfg: &ProtocolConfig,
    dataset: &[ClaimRecord],
    backend: &dyn AgentBackend,
    seed: u64,
    jobs: usize,
    dataset_name: &str,
) -> Result<RunArtifact> {
    let opts = RunOptions {
        seed,
        jobs,
        dataset_name: dataset_name.to_string(),
        ..RunOptions::default()
    };
    run_condition(cfg, dataset, backend, &opts).map_err(config)
}

pub fn failure_lines(a: &RunArtifact) -> Vec<String> {
    let mut by_reason: BTreeMap<&'static str, usize> = BTreeMap::new();
    for f in &a.manifest.failures {
        let name = match f.reason {
            FailureReason::BackendUnavailable => "backend-unavailable",
            FailureReason::BudgetExhausted => "budget-exhausted",
            FailureReason::Transport => "transport",
            FailureReason::MalformedResponse => "malformed-response",
            FailureReason::RetrievalEmpty => "retrieval-empty",
            FailureReason::Internal => "internal",
        };
        *by_reason.entry(name).or_default() += 1;
    }
    let mut lines = vec![format!(
        "{}: {} trials, {} failures of {} claims ({})",
        a.condition_id(),
        a.trials.len(),
        a.manifest.failures.len(),
        a.manifest.dataset_size,
        a.manifest.regime.summary()
    )];
    lines.extend(by_reason.iter().map(|(r, n)| format!("  {r}: {n}")));
    lines
}

pub fn cmd_run(a: &RunArgs, jobs: usize) -> Result<()> {
    let cfg = load_condition(a.condition.as_deref(), a.config.as_deref())?;
    let mut dataset = corpus(a.corpus.as_deref())?;
    if let Some(n) = a.limit {
        dataset.truncate(n);
    }
    let name = a
        .corpus
        .as_ref()
        .map_or("shipped-claims".to_string(), |p| p.display().to_string());
    let backend: Box<dyn AgentBackend> = match a.backend {
        BackendChoice::ScriptedMock => Box::new(mock_backend(MockMode::Scripted, &cfg, &dataset)),
        BackendChoice::DistributionalMock => Box::new(mock_backend(MockMode::Distributional, &cfg, &dataset)),
        BackendChoice::HttpChat => Box::new(http_backend(a)?),
    };
    let artifact = execute_run(&cfg, &dataset, backend.as_ref(), a.seed, jobs, &name)?;
    save_run(&artifact, &a.out).map_err(config)?;
    for l in failure_lines(&artifact) {
        println!("{l}");
    }
    Ok(())
}
