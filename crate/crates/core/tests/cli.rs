use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_prox-langevin"))
}

fn run(args: &[&str]) -> (i32, String) {
    let out = bin().args(args).output().unwrap();
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned())
}

#[test]
fn theory_table_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("tt");
    let (code, stdout) = run(&["theory-table", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    let summary: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(summary["command"], "theory-table");
    for f in ["config.toml", "summary.json", "theory_table.csv"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let csv = std::fs::read_to_string(out.join("theory_table.csv")).unwrap();
    assert!(csv.starts_with("theta,kappa,eps,delta,n,feasible"));
    assert_eq!(csv.lines().count(), 1 + 3 * 3 * 25);
}

#[test]
fn overrides_before_and_after_flags() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g");
    let (code, _) = run(&[
        "gmm",
        "--seed",
        "3",
        "--gmm.n_samples",
        "200",
        "--gmm.repetitions=2",
        "--gmm.pixels",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    for f in ["pixel_w2.csv", "logpi_histogram.csv", "traces.csv", "summary.json"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let rows = std::fs::read_to_string(out.join("pixel_w2.csv")).unwrap();
    assert_eq!(rows.lines().count(), 1 + 3 * 4);
    assert!(std::fs::read_dir(&out).unwrap().all(|e| !e.unwrap().file_name().to_string_lossy().ends_with(".partial")));
}

#[test]
fn config_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(
        &cfg,
        "experiment = \"onedim\"\nseed = 1\n[onedim]\nkind = \"laplace\"\nn_iters = 2000\n",
    )
    .unwrap();
    let out = dir.path().join("o");
    let (code, stdout) = run(&["onedim", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(stdout.contains("\"laplace\""));
    let written = std::fs::read_to_string(out.join("config.toml")).unwrap();
    assert!(written.contains("n_iters = 2000"));
    assert!(Path::new(&out.join("histogram.csv")).is_file());
}

#[test]
fn configuration_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    let o = out.to_str().unwrap();
    assert_eq!(run(&["sample", "--out", o, "--sampler.delta", "-1"]).0, 2);
    assert_eq!(run(&["sample", "--out", o, "--no_such_key", "1"]).0, 2);
    assert_eq!(run(&["gmm", "--out", o, "--gmm.pixels", "0"]).0, 2);
    assert_eq!(run(&["onedim", "--out", o, "--onedim.kind", "gamma"]).0, 2);
    assert_eq!(run(&["deconv", "--out", o, "--deconv.image", "/nonexistent.pgm"]).0, 2);
}

#[test]
fn empty_chain_reports_no_samples() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    let (code, stdout) = run(&["sample", "--out", out.to_str().unwrap(), "--sampler.n_iters", "0", "--sampler.burn_in", "0"]);
    assert_eq!(code, 0);
    let summary: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(summary["command"], "sample");
}
