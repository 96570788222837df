use std::path::{Path, PathBuf};
use std::process::Command;

use lidar_qfi::cli_runner::verify::{verify, VerifyOptions};
use lidar_qfi::cli_runner::{run, EXIT_CONFIG, EXIT_DEGENERATE, EXIT_FAILURE, EXIT_OK};
use lidar_qfi::two_target::{qfi_two, TwoTargetQfiInputs};
use nalgebra::DMatrix;

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn run_to(dir: &Path, file: &str, args: &[&str]) -> (i32, String) {
    let out = dir.join(file);
    let mut full = vec!["lidar-qfi"];
    full.extend_from_slice(args);
    full.extend(["--out", out.to_str().unwrap()]);
    let code = run(full);
    (code, std::fs::read_to_string(&out).unwrap_or_default())
}

#[test]
fn hadamard_single_shot_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    let (code, csv) = run_to(dir.path(), "h.csv", &["simulate", "hadamard", "--shots", "1", "--seed", "42"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(csv, std::fs::read_to_string(golden("hadamard_n1_seed42.csv")).unwrap());
}

#[test]
fn one_row_sweep_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    let (code, csv) = run_to(
        dir.path(),
        "s.csv",
        &["two-target", "--sweep", "dt2s2=0.01:0.01:1", "--sweep", "dw2s2=1:1:1"],
    );
    assert_eq!(code, EXIT_OK);
    assert_eq!(csv, std::fs::read_to_string(golden("separation_spot.csv")).unwrap());
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn sweep_and_simulation_are_byte_identical_across_runs_and_workers() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = ["sweep", "--model", "two-target", "--sweep", "dt2s2=0.01:1:3", "--sweep", "dw2s2=0:5:26"];
    let hadamard = ["simulate", "hadamard", "--shots", "20000", "--seed", "17"];
    for args in [&sweep[..], &hadamard[..]] {
        let (c1, a) = run_to(dir.path(), "a.csv", args);
        let (c2, b) = run_to(dir.path(), "b.csv", args);
        let mut four = args.to_vec();
        four.extend(["--workers", "4"]);
        let (c3, c) = run_to(dir.path(), "c.csv", &four);
        assert_eq!((c1, c2, c3), (EXIT_OK, EXIT_OK, EXIT_OK));
        assert!(!a.is_empty());
        assert_eq!(a, b);
        assert_eq!(a, c);
    }
}

#[test]
fn json_output_records_seed() {
    let dir = tempfile::tempdir().unwrap();
    let (code, text) = run_to(
        dir.path(),
        "j.json",
        &["simulate", "joint", "--shots", "10", "--seed", "123", "--format", "json"],
    );
    assert_eq!(code, EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["metadata"]["seed"], 123);
    assert_eq!(v["records"].as_array().unwrap().len(), 10);
}

#[test]
fn emitted_values_equal_library_values() {
    let dir = tempfile::tempdir().unwrap();
    let (_, csv) = run_to(dir.path(), "t.csv", &["two-target", "--dt", "0.3", "--domega", "0.7", "--kappa", "0.4"]);
    let mut reader = csv::Reader::from_reader(csv.as_bytes());
    let headers = reader.headers().unwrap().clone();
    let row = reader.records().next().unwrap().unwrap();
    let get = |name: &str| -> f64 { row[headers.iter().position(|h| h == name).unwrap()].parse().unwrap() };
    let h = qfi_two(&TwoTargetQfiInputs::new(1.0, 0.4, 0.3, 0.7).unwrap()).unwrap();
    assert_eq!(get("H_dt_dt").to_bits(), h[(0, 0)].to_bits());
    assert_eq!(get("H_dt_domega").to_bits(), h[(0, 1)].to_bits());
    assert_eq!(get("H_domega_domega").to_bits(), h[(1, 1)].to_bits());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run_to(dir.path(), "x", &["single-target", "--kappa", "1.5"]).0, EXIT_CONFIG);
    assert_eq!(run_to(dir.path(), "x", &["sweep"]).0, EXIT_CONFIG);
    assert_eq!(run_to(dir.path(), "x", &["simulate", "hadamard", "--domega", "0.1"]).0, EXIT_CONFIG);
    assert_eq!(run(["lidar-qfi", "no-such-command"]), EXIT_CONFIG);
    assert_eq!(
        run_to(dir.path(), "x", &["two-target", "--dt", "0", "--sweep", "domega=0:1:3"]).0,
        EXIT_DEGENERATE
    );
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    assert_eq!(run(["lidar-qfi", "single-target", "--config", bad.to_str().unwrap()]), EXIT_CONFIG);
    let unwritable = dir.path().join("missing/dir/out.csv");
    assert_eq!(run(["lidar-qfi", "single-target", "--out", unwritable.to_str().unwrap()]), EXIT_FAILURE);
}

#[test]
fn config_path_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"kappa": 0.5}"#).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_lidar-qfi"))
        .args(["single-target"])
        .env("LIDAR_QFI_CONFIG", &cfg)
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader.headers().unwrap().clone();
    let row = reader.records().next().unwrap().unwrap();
    let k = headers.iter().position(|h| h == "kappa").unwrap();
    assert_eq!(&row[k], "5.0000000000000000e-1");

    std::fs::write(&cfg, r#"{"kappa": 0.5, "kapa": 1}"#).unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_lidar-qfi"))
        .args(["single-target"])
        .env("LIDAR_QFI_CONFIG", &cfg)
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(EXIT_CONFIG));
}

fn perturbed_qfi_two(inputs: &TwoTargetQfiInputs) -> lidar_qfi::Result<DMatrix<f64>> {
    let mut h = qfi_two(inputs)?;
    h[(0, 0)] += 0.01 * inputs.sigma * inputs.sigma;
    Ok(h)
}

#[test]
fn verify_passes_and_catches_one_percent_perturbation() {
    let report = verify(&VerifyOptions::default());
    assert!(report.passed(), "{}", report.render());

    let report = verify(&VerifyOptions {
        closed_form_two: perturbed_qfi_two,
        ..Default::default()
    });
    assert!(!report.passed());
    let oracle = report.checks.iter().find(|c| c.name.starts_with("two-target oracle")).unwrap();
    assert!(!oracle.passed, "{}", report.render());
}
