use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub const DEFAULT_SEED: u64 = 7;

#[derive(Debug, Parser)]
#[command(
    name = "groundlab",
    version,
    about = "Information-flow simulation, protocol runs, faithfulness scoring and analysis"
)]
pub struct Cli {
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Log filter, overridden by GROUNDLAB_LOG.
    #[arg(long, global = true, default_value = "warn")]
    pub log_level: String,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the randomized information-flow invariant suites.
    Simulate(SimulateArgs),
    /// Run one condition over a claim corpus.
    Run(RunArgs),
    /// Score run directories.
    Score(ScoreArgs),
    /// Hypothesis tests, rater agreement and correlations over scored runs.
    Analyze(AnalyzeArgs),
    /// Condition tables from scored runs, or the whole desk pipeline.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Instances per suite.
    #[arg(long, default_value_t = 1000)]
    pub chains: usize,
    /// Numeric seed, or the name of a shipped chain spec to simulate.
    #[arg(long, default_value_t = SeedArg::Number(DEFAULT_SEED))]
    pub seed: SeedArg,
    /// Simulate one chain spec (shipped name or TOML path) instead of the suites.
    #[arg(long)]
    pub spec: Option<String>,
    /// Flip every monotonicity comparison; the run must then fail.
    #[arg(long, hide = true)]
    pub negative_control: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SeedArg {
    Number(u64),
    Spec(String),
}

impl std::str::FromStr for SeedArg {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(s.parse().map_or_else(|_| SeedArg::Spec(s.to_string()), SeedArg::Number))
    }
}

impl std::fmt::Display for SeedArg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SeedArg::Number(n) => write!(f, "{n}"),
            SeedArg::Spec(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendChoice {
    #[value(name = "mock", alias = "scripted-mock")]
    ScriptedMock,
    DistributionalMock,
    HttpChat,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Shipped condition id (C1..C16).
    #[arg(long, required_unless_present = "config")]
    pub condition: Option<String>,
    /// Condition config file, instead of a shipped id.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Claim corpus (JSONL); defaults to the shipped fixture.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Only the first N claims.
    #[arg(long)]
    pub limit: Option<usize>,
    #[arg(long, value_enum, default_value = "mock")]
    pub backend: BackendChoice,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// HTTP backend settings (TOML).
    #[arg(long)]
    pub http_config: Option<PathBuf>,
    #[arg(long)]
    pub base_url: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DecomposerChoice {
    Clause,
    Sentence,
}

impl DecomposerChoice {
    pub fn name(&self) -> &'static str {
        match self {
            DecomposerChoice::Clause => "clause",
            DecomposerChoice::Sentence => "sentence",
        }
    }
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Run directories.
    #[arg(long = "run", required = true, num_args = 1..)]
    pub runs: Vec<PathBuf>,
    /// Corpus holding the evidence; defaults to the shipped fixture.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Score traces without verifiable claims as 0 instead of failing.
    #[arg(long)]
    pub score_empty_as_zero: bool,
    /// Entailment gate threshold.
    #[arg(long, default_value_t = 0.7)]
    pub tau: f64,
    /// Score at every tau in {0.3, 0.5, 0.7, 0.9}.
    #[arg(long)]
    pub tau_sweep: bool,
    #[arg(long, value_enum, default_value = "clause")]
    pub decomposer: DecomposerChoice,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatChoice {
    Csv,
    Json,
    Markdown,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Scored trial CSVs.
    #[arg(long = "scores", num_args = 1..)]
    pub scores: Vec<PathBuf>,
    #[arg(long)]
    pub ratings: Option<PathBuf>,
    #[arg(long)]
    pub hypotheses: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, value_enum, num_args = 1.., default_values = ["csv", "json", "markdown"])]
    pub format: Vec<FormatChoice>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Profile {
    /// Every suite, condition and analysis on the shipped fixtures.
    Desk,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long, value_enum, conflicts_with_all = ["runs", "scores"])]
    pub profile: Option<Profile>,
    #[arg(long = "run", num_args = 1.., required_unless_present = "profile")]
    pub runs: Vec<PathBuf>,
    /// Scored trial CSVs covering the runs.
    #[arg(long = "scores", num_args = 1.., required_unless_present = "profile")]
    pub scores: Vec<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, value_enum, num_args = 1.., default_values = ["csv", "json", "markdown"])]
    pub format: Vec<FormatChoice>,
    #[arg(long)]
    pub out: PathBuf,
}
