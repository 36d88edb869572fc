use std::path::Path;
use std::process::{Command, Output};

fn groundlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_groundlab"))
        .args(args)
        .env_remove("GROUNDLAB_API_TOKEN")
        .env_remove("GROUNDLAB_LOG")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn run_condition(dir: &Path, id: &str, extra: &[&str]) -> std::path::PathBuf {
    let out = dir.join(id);
    let mut args = vec!["run", "--condition", id, "--out", p(&out)];
    args.extend_from_slice(extra);
    let o = groundlab(&args);
    assert!(o.status.success(), "{id}: {}", String::from_utf8_lossy(&o.stderr));
    out
}

#[test]
fn simulate_reports_no_violations() {
    let dir = tempfile::tempdir().unwrap();
    let o = groundlab(&["simulate", "--chains", "1000", "--seed", "7", "--out", p(dir.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(
        stdout(&o).contains("0 DPI violations / 1000 closed chains"),
        "{}",
        stdout(&o)
    );
    let csv = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert!(csv.starts_with("suite,chain,seed,round,mi_bits,regime\n"));
}

#[test]
fn fixed_identity_trajectory_is_flat() {
    let dir = tempfile::tempdir().unwrap();
    let o = groundlab(&[
        "simulate",
        "--seed",
        "fixed-identity",
        "--chains",
        "1",
        "--out",
        p(dir.path()),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let mi: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(4).unwrap().parse().unwrap())
        .collect();
    assert!(mi.len() > 1);
    assert!(mi.iter().all(|v| (v - mi[0]).abs() < 1e-12), "{mi:?}");
}

#[test]
fn negative_control_fails() {
    let dir = tempfile::tempdir().unwrap();
    let o = groundlab(&[
        "simulate",
        "--chains",
        "50",
        "--negative-control",
        "--out",
        p(dir.path()),
    ]);
    assert!(!o.status.success());
}

#[test]
fn single_shot_run_and_score() {
    let dir = tempfile::tempdir().unwrap();
    let run = run_condition(dir.path(), "C1", &["--limit", "3"]);
    let trials = std::fs::read_to_string(run.join("trials.jsonl")).unwrap();
    assert_eq!(trials.lines().count(), 3);

    let a = dir.path().join("s1");
    let b = dir.path().join("s2");
    for out in [&a, &b] {
        let o = groundlab(&["score", "--run", p(&run), "--out", p(out)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["scores.csv", "conditions.csv", "rounds.csv"] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn vote_tally_scores_zero_when_empty_counts_as_zero() {
    let dir = tempfile::tempdir().unwrap();
    let run = run_condition(dir.path(), "C15", &["--limit", "10"]);
    let out = dir.path().join("scores");
    let o = groundlab(&["score", "--run", p(&run), "--score-empty-as-zero", "--out", p(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("conditions.csv")).unwrap();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "C15");
    let sfs: f64 = row[4].parse().unwrap();
    assert!(sfs < 0.05, "{sfs}");

    let strict = groundlab(&["score", "--run", p(&run), "--out", p(&dir.path().join("strict"))]);
    assert_eq!(strict.status.code(), Some(1));
}

#[test]
fn http_backend_without_token_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = groundlab(&[
        "run",
        "--condition",
        "C1",
        "--backend",
        "http-chat",
        "--out",
        p(&dir.path().join("r")),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn unknown_condition_and_missing_run_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let o = groundlab(&["run", "--condition", "C99", "--out", p(&dir.path().join("r"))]);
    assert_eq!(o.status.code(), Some(2));
    let o = groundlab(&[
        "score",
        "--run",
        p(&dir.path().join("nope")),
        "--out",
        p(&dir.path().join("s")),
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn analyze_with_empty_hypotheses_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let run = run_condition(dir.path(), "C3", &["--limit", "8"]);
    let scores = dir.path().join("scores");
    assert!(groundlab(&["score", "--run", p(&run), "--out", p(&scores)])
        .status
        .success());
    let spec = dir.path().join("empty.toml");
    std::fs::write(&spec, "").unwrap();
    let out = dir.path().join("analysis");
    let o = groundlab(&[
        "analyze",
        "--scores",
        p(&scores.join("scores.csv")),
        "--hypotheses",
        p(&spec),
        "--format",
        "csv",
        "--out",
        p(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let h = std::fs::read_to_string(out.join("hypotheses.csv")).unwrap();
    assert_eq!(h.lines().count(), 1, "{h}");
    assert!(h.starts_with("id,family,metric"));
}
