use std::io::Write;
use std::process::{Command, Stdio};

use bmclt::io::ResultDocument;

const BIN: &str = env!("CARGO_BIN_EXE_bmclt");

fn bmclt(args: &[&str]) -> std::process::Output {
    Command::new(BIN)
        .args(args)
        .env_remove("BMCLT_SEED")
        .output()
        .expect("spawn bmclt")
}

#[test]
fn oracle_prints_the_toy_variance() {
    let out = bmclt(&["oracle", "--check", "toy-sigma2"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let v: f64 = text.lines().next().unwrap().parse().unwrap();
    assert!((v - 1.5).abs() < 1e-10);
}

#[test]
fn bias_bound_oracle_passes() {
    let out = bmclt(&["oracle", "--check", "bias-bound"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.ends_with("PASS")).count(), 37);
}

#[test]
fn missing_config_is_a_validation_error() {
    let out = bmclt(&["experiment", "--config", "/nonexistent/missing.toml"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
}

#[test]
fn usage_errors_exit_one_and_help_exits_zero() {
    assert_eq!(bmclt(&["estimate", "--rule", "bogus"]).status.code(), Some(1));
    assert_eq!(bmclt(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(bmclt(&["--help"]).status.code(), Some(0));
    assert_eq!(bmclt(&["--version"]).status.code(), Some(0));
}

#[test]
fn simulate_then_estimate_through_a_pipe() {
    let sim = bmclt(&["simulate", "--model", "toy", "--n", "500000", "--seed", "3"]);
    assert_eq!(sim.status.code(), Some(0));

    let mut child = Command::new(BIN)
        .args(["estimate", "--rule", "sqrt", "--level", "0.95"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut stdin = child.stdin.take().unwrap();
    let trace = sim.stdout.clone();
    let writer = std::thread::spawn(move || stdin.write_all(&trace).unwrap());
    let out = child.wait_with_output().unwrap();
    writer.join().unwrap();
    assert_eq!(out.status.code(), Some(0));

    let doc = ResultDocument::from_json(&String::from_utf8(out.stdout).unwrap()).unwrap();
    let rec = &doc.estimates[0];
    assert_eq!(rec.n, 500_000);
    assert_eq!((rec.batch_size, rec.num_batches), (707, 707));
    assert!((1.2..=1.8).contains(&rec.sigma2_hat), "{}", rec.sigma2_hat);
    assert!(rec.ci.lower < rec.sigma2_hat && rec.sigma2_hat < rec.ci.upper);

    // The same trace read from a file gives the same document.
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.csv");
    std::fs::write(&path, &sim.stdout).unwrap();
    let from_file = bmclt(&["estimate", path.to_str().unwrap(), "--batch-rule", "sqrt"]);
    let doc2 = ResultDocument::from_json(&String::from_utf8(from_file.stdout).unwrap()).unwrap();
    assert_eq!(doc, doc2);
}

#[test]
fn bad_trace_reports_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "1.0\n2.0\nNaN\n4.0\n").unwrap();
    let out = bmclt(&["estimate", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains('3'));
}

#[test]
fn seed_comes_from_the_environment() {
    let run = |seed: &str| {
        Command::new(BIN)
            .args(["simulate", "--model", "ar1", "--rho", "0.5", "--tau2", "1", "--n", "50"])
            .env("BMCLT_SEED", seed)
            .output()
            .unwrap()
            .stdout
    };
    assert_eq!(run("12"), run("12"));
    assert_ne!(run("12"), run("13"));
}

#[test]
fn experiment_writes_its_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("toy.toml");
    std::fs::write(
        &config,
        "model = \"toy\"\nreplicates = 10\nburn_in = 100\ncheckpoints = [1000, 4000]\nrules = [\"sqrt\", \"fixed:20\"]\nbase_seed = 8\n",
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = bmclt(&[
        "experiment",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let doc = std::fs::read_to_string(out_dir.join("result.json")).unwrap();
    let doc = ResultDocument::from_json(&doc).unwrap();
    assert_eq!(doc.base_seed, Some(8));
    assert_eq!(doc.stream_ids, (0..10).collect::<Vec<u64>>());
    assert_eq!(doc.coverage.len(), 4);
    assert_eq!(doc.histograms.len(), 4);

    let coverage = std::fs::read_to_string(out_dir.join("coverage.csv")).unwrap();
    assert_eq!(coverage.lines().count(), 5);
    assert_eq!(std::fs::read_dir(out_dir.join("histograms")).unwrap().count(), 4);

    // Re-running with the embedded seed reproduces the document exactly.
    let again = dir.path().join("again");
    bmclt(&[
        "experiment",
        "--config",
        config.to_str().unwrap(),
        "--out",
        again.to_str().unwrap(),
        "--seed",
        "8",
    ]);
    assert_eq!(
        std::fs::read(out_dir.join("result.json")).unwrap(),
        std::fs::read(again.join("result.json")).unwrap()
    );
}
