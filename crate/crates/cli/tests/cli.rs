//! End-to-end tests of the `ar2lab` binary: argument handling, exit codes,
//! file outputs, and determinism across worker counts.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ar2lab"))
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ar2lab-cli-{tag}-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

#[test]
fn help_exits_zero() {
    let out = run(&["--help"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for sub in [
        "simulate",
        "estimate",
        "replicate",
        "tables",
        "hist",
        "coverage",
        "verify-limits",
    ] {
        assert!(text.contains(sub), "help misses {sub}");
    }
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["--no-such-flag"]).status.code(), Some(1));
    assert_eq!(
        run(&["coverage", "--case", "1", "--alpha", "1.5"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        run(&["simulate", "--theta1", "1", "--theta2", "3", "--sigma", "0", "--n", "10"])
            .status
            .code(),
        Some(1)
    );
    // no parameters at all
    assert_eq!(run(&["replicate", "--n", "10"]).status.code(), Some(1));
    // roots ±2 share an absolute value, so the limit formulas refuse them
    assert_eq!(
        run(&[
            "verify-limits",
            "--theta1",
            "0",
            "--theta2",
            "4",
            "--n",
            "10"
        ])
        .status
        .code(),
        Some(1)
    );
    // subcritical parameters cannot feed the estimation pipeline
    assert_eq!(
        run(&[
            "replicate",
            "--theta1",
            "0.5",
            "--theta2",
            "0.0",
            "--reps",
            "4",
            "--n",
            "10"
        ])
        .status
        .code(),
        Some(1)
    );
}

#[test]
fn documented_replicate_invocation_runs() {
    let dir = tmp_dir("replicate");
    let out_path = dir.join("reps.csv");
    let out = run(&[
        "replicate",
        "--theta1",
        "1",
        "--theta2",
        "3",
        "--n",
        "100",
        "--reps",
        "1000",
        "--seed",
        "42",
        "--bits",
        "800",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = fs::read_to_string(&out_path).unwrap();
    assert!(text.starts_with("rep,theta_hat1,theta_hat2,e1,e2,det_g\n"));
    assert_eq!(text.lines().count(), 1001);
    let summary = String::from_utf8_lossy(&out.stdout);
    assert!(summary.contains("case (1,3)"), "summary: {summary}");
}

#[test]
fn identical_invocations_are_byte_identical_across_worker_counts() {
    let dir = tmp_dir("determinism");
    let mut outputs = Vec::new();
    for (tag, workers) in [("a", "1"), ("b", "3"), ("c", "1")] {
        let path = dir.join(format!("reps-{tag}.csv"));
        let out = run(&[
            "replicate",
            "--case",
            "1",
            "--reps",
            "30",
            "--n",
            "40",
            "--bits",
            "320",
            "--workers",
            workers,
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        outputs.push(fs::read(&path).unwrap());
    }
    assert_eq!(outputs[0], outputs[1], "worker count changed the bytes");
    assert_eq!(outputs[0], outputs[2], "rerun changed the bytes");
}

#[test]
fn tables_from_config_emit_three_csvs() {
    let dir = tmp_dir("tables");
    let config = dir.join("exp.json");
    fs::write(
        &config,
        r#"{"cases": [1, 2, 3, 4], "n": 30, "reps": 60, "master_seed": 7, "mantissa_bits": 320}"#,
    )
    .unwrap();
    let out = run(&[
        "tables",
        "--config",
        config.to_str().unwrap(),
        "--out-dir",
        dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(
        stdout.matches("case (").count(),
        4,
        "one summary line per case"
    );
    for name in [
        "table_estimates.csv",
        "table_descriptive.csv",
        "table_tests.csv",
    ] {
        let text = fs::read_to_string(dir.join(name)).unwrap();
        assert_eq!(text.lines().count(), 5, "{name}: header + 4 cases");
    }
    let estimates = fs::read_to_string(dir.join("table_estimates.csv")).unwrap();
    assert!(estimates.contains("\n1,3,2.302776,-1.302776,"));
}

#[test]
fn flags_override_config_file_values() {
    let dir = tmp_dir("override");
    let config = dir.join("exp.json");
    fs::write(
        &config,
        r#"{"theta1": 1, "theta2": 3, "n": 25, "reps": 60, "mantissa_bits": 320}"#,
    )
    .unwrap();
    let path = dir.join("reps.csv");
    let out = run(&[
        "replicate",
        "--config",
        config.to_str().unwrap(),
        "--reps",
        "8",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = fs::read_to_string(&path).unwrap();
    assert_eq!(
        text.lines().count(),
        9,
        "flag --reps 8 must override the file's 60"
    );
}

#[test]
fn histogram_densities_integrate_to_one() {
    let dir = tmp_dir("hist");
    let path = dir.join("hist.csv");
    let out = run(&[
        "hist",
        "--case",
        "1",
        "--reps",
        "80",
        "--n",
        "30",
        "--bits",
        "320",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("bin_left,bin_right,density\n"));
    let mut total = 0.0f64;
    for line in text.lines().skip(1) {
        let cols: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        assert!(cols[2] >= 0.0);
        total += (cols[1] - cols[0]) * cols[2];
    }
    assert!((total - 1.0).abs() < 1e-9, "total mass {total}");
}

#[test]
fn verify_limits_residuals_are_below_tolerance() {
    let out = run(&[
        "verify-limits",
        "--theta1",
        "1",
        "--theta2",
        "3",
        "--n",
        "100",
        "--seed",
        "7",
    ]);
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let map = json.as_object().unwrap();
    for (key, value) in map {
        let v: f64 = value.as_str().unwrap().parse().unwrap();
        if key == "cond_ii_max_scaled_m" {
            assert!(v.is_finite());
        } else {
            assert!(v.abs() < 1e-3, "{key} = {v:e}");
        }
    }
}

#[test]
fn estimate_reports_json_record() {
    let out = run(&[
        "estimate", "--case", "1", "--n", "40", "--bits", "320", "--rep", "3",
    ]);
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["rep_index"], 3);
    assert!(json["gram_ok"].as_bool().unwrap());
    assert!(json["decimals"]["theta_hat1"].as_str().unwrap().len() >= 25);
}

#[test]
fn coverage_reports_fraction() {
    let out = run(&[
        "coverage", "--case", "1", "--reps", "40", "--n", "30", "--bits", "320",
    ]);
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let c = json["coverage"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&c));
    assert_eq!(json["alpha"], 0.05);
}

#[test]
fn env_var_sets_default_precision() {
    let out = bin()
        .env("AR2LAB_BITS", "128")
        .args(["simulate", "--case", "1", "--n", "5"])
        .output()
        .unwrap();
    assert!(out.status.success());
    // explicit flag still wins over the env var
    let out = bin()
        .env("AR2LAB_BITS", "not-a-number")
        .args(["simulate", "--case", "1", "--n", "5"])
        .output()
        .unwrap();
    assert!(out.status.success());
}

#[test]
fn simulate_csv_has_initial_pair_and_n_rows() {
    let out = run(&[
        "simulate", "--theta1", "1", "--theta2", "1", "--n", "8", "--bits", "128",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,x"));
    let first = lines.next().unwrap();
    assert!(first.starts_with("-1,"), "first data row {first}");
    assert_eq!(text.lines().count(), 1 + 10); // header + X_{-1}..X_8
}
