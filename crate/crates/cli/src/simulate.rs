use std::fmt::Write as _;
use std::path::Path;

use groundlab_core::fixtures;
use groundlab_core::infodyn::suite::{run_all, SuiteConfig, SuiteReport, TOL};
use groundlab_core::infodyn::{run_chain, ChainSpec, ChainTrajectory, StepKind};
use groundlab_core::rng::{derive_seed, rng_from};

use crate::args::{SeedArg, SimulateArgs, DEFAULT_SEED};
use crate::{config, write_file, CliError, Result};

pub const TRAJECTORY_HEADER: &str = "suite,chain,seed,round,mi_bits,regime";

pub struct SimulateOutcome {
    pub reports: Vec<SuiteReport>,
    pub trajectory_csv: String,
}

impl SimulateOutcome {
    pub fn passed(&self) -> bool {
        self.reports.iter().all(|r| r.passed)
    }
}

fn push_rows(csv: &mut String, suite: &str, chain: usize, seed: u64, tr: &ChainTrajectory) {
    for (t, mi) in tr.mi_per_round.iter().enumerate() {
        let _ = writeln!(csv, "{suite},{chain},{seed},{t},{mi:.12},{}", tr.regime.as_str());
    }
}

/// Steps that moved in their allowed direction, i.e. violations of the
/// reversed inequality.
fn flipped_violations(tr: &ChainTrajectory) -> usize {
    tr.step_kinds
        .iter()
        .enumerate()
        .filter(|(t, kind)| {
            let (a, b) = (tr.mi_per_round[*t], tr.mi_per_round[t + 1]);
            match kind {
                StepKind::Closed | StepKind::Vote => b < a - TOL,
                StepKind::Open => b > a + TOL,
            }
        })
        .count()
}

pub fn load_spec(name_or_path: &str) -> Result<ChainSpec> {
    let src = match fixtures::chain_spec(name_or_path) {
        Some(s) => s.to_string(),
        None => std::fs::read_to_string(name_or_path)
            .map_err(|e| CliError::Config(format!("chain spec {name_or_path}: {e}")))?,
    };
    ChainSpec::from_toml(&src).map_err(config)
}

/// `chains` materializations of one spec. A spec-level seed pins every
/// materialization to the same chain.
pub fn simulate_spec(spec: &ChainSpec, chains: usize, seed: u64, negative_control: bool) -> Result<SimulateOutcome> {
    let mut csv = format!("{TRAJECTORY_HEADER}\n");
    let mut rep = SuiteReport {
        name: format!("spec:{}", spec.name),
        instances: chains,
        violations: 0,
        offending_seeds: Vec::new(),
        metrics: Default::default(),
        passed: true,
        trajectories: Vec::new(),
    };
    for i in 0..chains {
        let s = spec.seed.unwrap_or_else(|| derive_seed(seed, &[i as u64]));
        let (init, steps) = spec.materialize(&mut rng_from(s)).map_err(config)?;
        let tr = run_chain(&init, &steps).map_err(config)?;
        let bad = if negative_control {
            flipped_violations(&tr)
        } else {
            tr.monotonicity_violations(TOL).len()
        };
        if bad > 0 {
            rep.violations += bad;
            rep.offending_seeds.push(s);
        }
        push_rows(&mut csv, &rep.name, i, s, &tr);
        rep.trajectories.push((s, tr));
    }
    rep.passed = rep.violations == 0;
    Ok(SimulateOutcome {
        reports: vec![rep],
        trajectory_csv: csv,
    })
}

pub fn simulate_suites(chains: usize, seed: u64, negative_control: bool, jobs: usize) -> Result<SimulateOutcome> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(config)?;
    let cfg = SuiteConfig {
        instances: chains,
        seed,
        negative_control,
    };
    let reports = pool.install(|| run_all(&cfg));
    let mut csv = format!("{TRAJECTORY_HEADER}\n");
    for r in &reports {
        for (i, (s, tr)) in r.trajectories.iter().enumerate() {
            push_rows(&mut csv, &r.name, i, *s, tr);
        }
    }
    Ok(SimulateOutcome {
        reports,
        trajectory_csv: csv,
    })
}

pub fn summary_lines(reports: &[SuiteReport]) -> Vec<String> {
    let mut lines = Vec::new();
    for r in reports {
        if r.name == "closed-dpi" {
            lines.push(format!(
                "{} DPI violations / {} closed chains",
                r.violations, r.instances
            ));
        }
        lines.push(r.summary_line());
        if !r.offending_seeds.is_empty() {
            let seeds: Vec<String> = r.offending_seeds.iter().take(10).map(u64::to_string).collect();
            lines.push(format!("  offending seeds: {}", seeds.join(" ")));
        }
    }
    lines
}

pub fn write_outcome(out: &SimulateOutcome, dir: &Path) -> Result<()> {
    write_file(&dir.join("trajectory.csv"), &out.trajectory_csv)?;
    let mut summary = serde_json::to_string_pretty(&out.reports).map_err(config)?;
    summary.push('\n');
    write_file(&dir.join("simulate_summary.json"), &summary)
}

pub fn cmd_simulate(a: &SimulateArgs, jobs: usize) -> Result<()> {
    let outcome = match (&a.spec, &a.seed) {
        (Some(name), SeedArg::Number(seed)) => simulate_spec(&load_spec(name)?, a.chains, *seed, a.negative_control)?,
        (None, SeedArg::Number(seed)) => simulate_suites(a.chains, *seed, a.negative_control, jobs)?,
        (_, SeedArg::Spec(name)) => simulate_spec(&load_spec(name)?, a.chains, DEFAULT_SEED, a.negative_control)?,
    };
    write_outcome(&outcome, &a.out)?;
    for l in summary_lines(&outcome.reports) {
        println!("{l}");
    }
    if outcome.passed() {
        Ok(())
    } else {
        Err(CliError::Failed("invariant violations found".into()))
    }
}
