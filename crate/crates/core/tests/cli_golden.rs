//! Golden-file tests for every CLI subcommand.
//!
//! Set `UPDATE_GOLDEN=1` to rewrite the expected files from the current
//! binary. JSON outputs are compared with every `wall_time_ms` removed.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ap3lab::report::strip_timing;

fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ap3lab"))
        .args(args)
        .current_dir(manifest_dir())
        .env("AP3LAB_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn normalize(stdout: &[u8]) -> String {
    let text = String::from_utf8(stdout.to_vec()).expect("utf-8 output");
    match serde_json::from_str::<serde_json::Value>(&text) {
        Ok(mut v) => {
            strip_timing(&mut v);
            serde_json::to_string_pretty(&v).unwrap() + "\n"
        }
        Err(_) => text,
    }
}

fn golden(name: &str, args: &[&str]) {
    let out = run(args);
    assert!(
        out.status.success(),
        "{name}: exit {:?}, stderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    let got = normalize(&out.stdout);
    let path: PathBuf = manifest_dir()
        .join("tests/golden")
        .join(format!("{name}.out"));
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, &got).unwrap();
        return;
    }
    let want = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("{}: {e}; run with UPDATE_GOLDEN=1", path.display()));
    assert_eq!(got, want, "golden mismatch for {name}");
}

#[test]
fn help_lists_every_subcommand() {
    golden("help", &["--help"]);
    let text = String::from_utf8(run(&["--help"]).stdout).unwrap();
    for cmd in [
        "count",
        "bohr",
        "round",
        "intersect",
        "two-interval",
        "improve",
        "search",
        "varnavides",
        "experiment",
    ] {
        assert!(text.contains(cmd), "--help is missing `{cmd}`");
    }
}

#[test]
fn count() {
    golden(
        "count_both",
        &["count", "--set", "tests/golden/inputs/set13.json"],
    );
    golden(
        "count_naive_text",
        &[
            "count",
            "--set",
            "tests/golden/inputs/set11.txt",
            "--method",
            "naive",
        ],
    );
    golden(
        "count_spectral",
        &[
            "count",
            "--set",
            "tests/golden/inputs/set11.txt",
            "--method",
            "spectral",
        ],
    );
}

#[test]
fn bohr() {
    golden(
        "bohr_full",
        &[
            "bohr",
            "--set",
            "tests/golden/inputs/full31.json",
            "--threshold",
            "5",
            "--eps",
            "0.2",
            "--length",
            "5",
        ],
    );
}

#[test]
fn round() {
    golden(
        "round_half",
        &[
            "round",
            "--weights",
            "tests/golden/inputs/half101.json",
            "--seed",
            "3",
        ],
    );
}

#[test]
fn intersect() {
    golden(
        "intersect",
        &[
            "intersect",
            "--a",
            "tests/golden/inputs/a13.json",
            "--b",
            "tests/golden/inputs/a13.json",
            "--eps",
            "0.5",
            "--seed",
            "1",
        ],
    );
}

#[test]
fn two_interval() {
    golden(
        "two_interval",
        &["two-interval", "--p", "101", "--theta", "0.2"],
    );
}

#[test]
fn improve() {
    golden(
        "improve",
        &[
            "improve",
            "--set",
            "tests/golden/inputs/s13_6.json",
            "--config",
            "tests/golden/inputs/improve.json",
        ],
    );
}

#[test]
fn search() {
    golden("search_exhaustive", &["search", "--p", "11", "--s", "5"]);
    golden(
        "search_anneal",
        &[
            "search", "--p", "11", "--s", "5", "--method", "anneal", "--seed", "1",
        ],
    );
}

#[test]
fn varnavides() {
    golden(
        "varnavides_csv",
        &[
            "varnavides",
            "--p",
            "13",
            "--densities",
            "0.2,0.4",
            "--format",
            "csv",
        ],
    );
    golden(
        "varnavides_json",
        &["varnavides", "--p", "13", "--densities", "0.2,0.4"],
    );
}

#[test]
fn experiment() {
    golden(
        "experiment_minimizer",
        &[
            "experiment",
            "--config",
            "tests/golden/inputs/experiment.json",
        ],
    );
}

#[test]
fn csv_flattening() {
    golden(
        "count_csv",
        &[
            "count",
            "--set",
            "tests/golden/inputs/set13.json",
            "--format",
            "csv",
        ],
    );
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("count.json");
    let out = run(&[
        "count",
        "--set",
        "tests/golden/inputs/set13.json",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let written = std::fs::read(&path).unwrap();
    let stdout = run(&["count", "--set", "tests/golden/inputs/set13.json"]).stdout;
    assert_eq!(written, stdout);
}

fn exit_code(args: &[&str]) -> i32 {
    run(args).status.code().expect("exit code")
}

#[test]
fn validation_errors_exit_2() {
    assert_eq!(
        exit_code(&["two-interval", "--p", "12", "--theta", "0.2"]),
        2
    );
    assert_eq!(
        exit_code(&["two-interval", "--p", "13", "--theta", "1.5"]),
        2
    );
    assert_eq!(
        exit_code(&["count", "--set", "tests/golden/inputs/missing.json"]),
        2
    );
    assert_eq!(
        exit_code(&["search", "--p", "11", "--s", "5", "--method", "anneal"]),
        2
    );
    assert_eq!(exit_code(&["search", "--p", "101", "--s", "50"]), 2);

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("noseed.json");
    std::fs::write(
        &cfg,
        r#"{"p": 13, "source": {"density": 0.5}, "bohr_eps": 0.2, "length": 3, "extract_eps": 0.5}"#,
    )
    .unwrap();
    let out = run(&["experiment", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed required"));
}

#[test]
fn stage_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("improve.json");
    // Every frequency is large, so no Bohr element exists.
    std::fs::write(
        &cfg,
        r#"{"threshold": 1e-9, "bohr_eps": 0.01, "length": 3, "extract_eps": 0.5, "seed": 1}"#,
    )
    .unwrap();
    let out = run(&[
        "improve",
        "--set",
        "tests/golden/inputs/s13_6.json",
        "--config",
        cfg.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bohr_element"));
}

#[test]
fn unwritable_out_path_fails() {
    let code = exit_code(&[
        "count",
        "--set",
        "tests/golden/inputs/set13.json",
        "--out",
        "/nonexistent-dir/x.json",
    ]);
    assert_ne!(code, 0);
}

#[test]
fn golden_inputs_exist() {
    assert!(Path::new(&manifest_dir().join("tests/golden/inputs/set13.json")).exists());
}
