//! End-to-end contracts of the compiled binary: CSV schemas, determinism,
//! and the exit-code mapping (0 success, 1 validation failure, 2 config
//! error, 3 solver failure).

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn nomalab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nomalab"))
        .args(args)
        .output()
        .expect("binary must run")
}

fn exit_code(output: &Output) -> i32 {
    output.status.code().expect("process must not be signalled")
}

fn read(path: &Path) -> String {
    fs::read_to_string(path).expect("output file must exist")
}

/// Writes a copy of the embedded defaults with `edit` applied to the JSON.
fn config_with(dir: &TempDir, edit: impl FnOnce(&mut serde_json::Value)) -> String {
    let mut config: serde_json::Value =
        serde_json::from_str(nomalab_cli::config::DEFAULT_CONFIG).unwrap();
    edit(&mut config);
    let path = dir.path().join("config.json");
    fs::write(&path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn outage_csv_has_the_pinned_header_and_number_format() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("outage.csv");
    let output = nomalab(&[
        "outage",
        "--trials",
        "2000",
        "--grid",
        "-12:0:6",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&output), 0, "{output:?}");
    let csv = read(&out);
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "swept_value,mode,node,mc_probability,ci_halfwidth,analytic_probability,trials,seed"
    );
    let first = lines.next().unwrap();
    // Nine significant digits, scientific notation, node labels p/r1/r2.
    assert!(first.starts_with("-1.20000000e1,fd,p,"), "row: {first}");
    // 3 grid values × 3 modes × 3 nodes.
    assert_eq!(csv.lines().count(), 1 + 27);
    // No closed form for the time-division mode: analytic column is blank.
    for line in csv.lines().filter(|l| l.contains(",oma,")) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 8);
        assert!(fields[5].is_empty(), "oma analytic must be blank: {line}");
    }
    // FD/HD rows carry a closed-form value.
    for line in csv.lines().skip(1).filter(|l| !l.contains(",oma,")) {
        let fields: Vec<&str> = line.split(',').collect();
        assert!(!fields[5].is_empty(), "fd/hd analytic must be filled: {line}");
    }
}

#[test]
fn reruns_with_the_same_seed_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let first = dir.path().join("first.csv");
    let second = dir.path().join("second.csv");
    for out in [&first, &second] {
        let output = nomalab(&[
            "outage",
            "--trials",
            "2000",
            "--grid",
            "-6:0:3",
            "--seed",
            "123",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(exit_code(&output), 0);
    }
    assert_eq!(fs::read(&first).unwrap(), fs::read(&second).unwrap());
}

#[test]
fn throughput_csv_has_the_pinned_header() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("throughput.csv");
    let output = nomalab(&[
        "throughput",
        "--trials",
        "2000",
        "--grid",
        "0:0:1",
        "--mode",
        "fd",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&output), 0, "{output:?}");
    let csv = read(&out);
    assert_eq!(
        csv.lines().next().unwrap(),
        "swept_value,mode,mc_primary,mc_primary_ci,mc_secondary,mc_secondary_ci,\
         analytic_primary,analytic_secondary,trials,seed"
    );
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn sumrate_reports_draw_rows_and_a_summary_row() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("sumrate.csv");
    let output = nomalab(&[
        "sumrate",
        "--trials",
        "3",
        "--grid",
        "-5:-5:1",
        "--mode",
        "fd",
        "--es-grid",
        "0.1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&output), 0, "{output:?}");
    let csv = read(&out);
    assert_eq!(
        csv.lines().next().unwrap(),
        "swept_value,mode,record,draw,iterations,converged,sum_rate,es_sum_rate,\
         infeasible_draws,seed"
    );
    let draws: Vec<&str> = csv.lines().skip(1).filter(|l| l.contains(",draw,")).collect();
    let summaries: Vec<&str> = csv.lines().skip(1).filter(|l| l.contains(",summary,")).collect();
    assert_eq!(draws.len(), 3);
    assert_eq!(summaries.len(), 1);
    let fields: Vec<&str> = summaries[0].split(',').collect();
    assert_eq!(fields.len(), 10);
    assert!(!fields[6].is_empty(), "summary must carry a mean sum rate");
    assert!(!fields[7].is_empty(), "summary must carry a mean oracle rate");
    assert_eq!(fields[8], "0", "all three draws are feasible at -5 dB");
}

#[test]
fn sumrate_rejects_the_time_division_mode() {
    let output = nomalab(&["sumrate", "--trials", "1", "--mode", "oma"]);
    assert_eq!(exit_code(&output), 2);
}

#[test]
fn sumrate_skips_the_time_division_mode_when_others_remain() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("sumrate.csv");
    // The embedded defaults list fd, hd, and oma; only the NOMA modes run.
    let output = nomalab(&[
        "sumrate",
        "--trials",
        "2",
        "--grid",
        "-5:-5:1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&output), 0, "{output:?}");
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("skipping oma-tdma"), "stderr: {stderr}");
    let csv = read(&out);
    let summaries: Vec<&str> = csv.lines().skip(1).filter(|l| l.contains(",summary,")).collect();
    assert_eq!(summaries.len(), 2);
    assert!(summaries.iter().any(|l| l.contains(",fd,")));
    assert!(summaries.iter().any(|l| l.contains(",hd,")));
    assert!(!csv.contains(",oma,"));
}

#[test]
fn validate_within_tolerance_exits_zero() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("validate.csv");
    let output = nomalab(&[
        "validate",
        "--trials",
        "20000",
        "--grid",
        "-9:-9:1",
        "--mode",
        "fd",
        "--seed",
        "42",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&output), 0, "{output:?}");
    let csv = read(&out);
    assert_eq!(
        csv.lines().next().unwrap(),
        "swept_value,mode,node,mc_probability,analytic_probability,abs_gap,rel_gap,\
         tolerance,status"
    );
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",ok")));
}

#[test]
fn validate_with_corrupted_tables_exits_one() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("validate.csv");
    let output = nomalab(&[
        "validate",
        "--trials",
        "20000",
        "--grid",
        "-9:-9:1",
        "--mode",
        "fd",
        "--seed",
        "42",
        "--corrupt-tables",
        "1.05",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&output), 1, "{output:?}");
    // The report is still written so the failure can be inspected.
    let csv = read(&out);
    assert!(csv.contains(",exceeded"));
}

#[test]
fn validate_requires_an_explicit_seed() {
    let output = nomalab(&["validate", "--trials", "100"]);
    assert_eq!(exit_code(&output), 2);
}

#[test]
fn validate_marks_mixed_gain_means_unsupported_and_exits_zero() {
    let dir = TempDir::new().unwrap();
    let config = config_with(&dir, |json| {
        json["params"]["lambda_sr"] = 40.0.into();
        json["sweep"]["grid"] = serde_json::json!([-9.0]);
        json["sweep"]["trials"] = 2000.into();
    });
    let out = dir.path().join("validate.csv");
    let output = nomalab(&[
        "validate",
        "--config",
        &config,
        "--seed",
        "7",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&output), 0, "{output:?}");
    let csv = read(&out);
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",unsupported")));
}

#[test]
fn outage_blanks_analytic_columns_for_mixed_gain_means() {
    let dir = TempDir::new().unwrap();
    let config = config_with(&dir, |json| {
        json["params"]["lambda_sr"] = 40.0.into();
        json["sweep"]["grid"] = serde_json::json!([-9.0]);
        json["sweep"]["trials"] = 1000.into();
        json["sweep"]["modes"] = serde_json::json!(["fd"]);
    });
    let out = dir.path().join("outage.csv");
    let output = nomalab(&["outage", "--config", &config, "--out", out.to_str().unwrap()]);
    assert_eq!(exit_code(&output), 0, "{output:?}");
    for line in read(&out).lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        assert!(fields[5].is_empty(), "analytic must be blank: {line}");
    }
}

#[test]
fn missing_and_malformed_configs_are_config_errors() {
    let output = nomalab(&["outage", "--config", "/nonexistent/config.json"]);
    assert_eq!(exit_code(&output), 2);

    let dir = TempDir::new().unwrap();
    let path = dir.path().join("broken.json");
    fs::write(&path, "{\"params\": {}}").unwrap();
    let output = nomalab(&["outage", "--config", path.to_str().unwrap()]);
    assert_eq!(exit_code(&output), 2);
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("line"), "message should locate the error: {stderr}");
}

#[test]
fn malformed_grid_flags_are_config_errors() {
    for grid in ["1:2", "2:1:1", "1:2:0"] {
        let output = nomalab(&["outage", "--grid", grid]);
        assert_eq!(exit_code(&output), 2, "grid {grid:?}");
    }
}

#[test]
fn selftest_passes_and_prints_verdict_lines() {
    let output = nomalab(&["selftest"]);
    assert_eq!(exit_code(&output), 0, "{output:?}");
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("selftest: all checks passed"));
    assert!(stdout.lines().filter(|l| l.contains(": ok")).count() >= 5);
}
