//! End-to-end checks of the command-line surface: file formats, determinism
//! and exit codes.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_phonon-chill"))
}

fn work_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("phonon-chill-cli-{name}"));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_scenario(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("scenario.json");
    fs::write(&path, body).unwrap();
    path
}

const SYMMETRIC_SCENARIO: &str = r#"{
  "dimensionless": {
    "scheme": "symmetric",
    "lambda": 0.05, "omega": 1.5, "omega_g": 2.0,
    "delta": 0.125, "delta_g": -1.0,
    "gamma": 7.5, "fock_dim": 6
  },
  "run": { "omega_steps": 41, "t_final": 200.0, "parameter": "delta_g" }
}"#;

#[test]
fn spectrum_csv_has_fixed_shape_and_exact_points() {
    let dir = work_dir("spectrum");
    let config = write_scenario(&dir, SYMMETRIC_SCENARIO);
    let status = bin()
        .args(["spectrum", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&dir)
        .status()
        .unwrap();
    assert!(status.success());
    let text = fs::read_to_string(dir.join("spectrum.csv")).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert_eq!(header, "omega,s_re,s_im,s_abs");
    let columns = header.split(',').count();
    let mut found_minus_one = false;
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), columns);
        for field in &fields {
            let value: f64 = field.parse().unwrap();
            assert!(value.is_finite());
        }
        if fields[0].parse::<f64>().unwrap() == -1.0 {
            found_minus_one = true;
            // gate point: the blue-sideband zero survives CSV round-trip
            assert!(fields[3].parse::<f64>().unwrap() <= 1e-10);
        }
    }
    assert!(found_minus_one);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("spectrum.json")).unwrap()).unwrap();
    assert!(summary["a_minus"].as_f64().unwrap() > 0.0);
    assert!(summary["constants"]["hbar_j_s"].as_f64().unwrap() > 0.0);
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = work_dir("determinism");
    let config = write_scenario(&dir, SYMMETRIC_SCENARIO);
    let mut digests = Vec::new();
    for run in 0..2 {
        let out = dir.join(format!("run{run}"));
        for sub in ["coefficients", "robust", "evolve"] {
            let status = bin()
                .args([sub, "--config"])
                .arg(&config)
                .arg("--out")
                .arg(&out)
                .status()
                .unwrap();
            assert!(status.success(), "{sub} failed");
        }
        let mut blob = Vec::new();
        for name in ["coefficients.json", "robust.csv", "robust.json", "evolve.csv", "evolve.json"] {
            blob.extend(fs::read(out.join(name)).unwrap());
        }
        digests.push(blob);
    }
    assert_eq!(digests[0], digests[1], "outputs differ between runs");
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn config_errors_exit_2() {
    let dir = work_dir("config-error");
    // branching does not sum to one
    let config = write_scenario(
        &dir,
        r#"{
          "dimensionless": {
            "scheme": "symmetric", "lambda": 0.05, "omega": 1.5,
            "omega_g": 2.0, "delta": 0.125, "delta_g": -1.0,
            "gamma": 7.5, "branching": [0.5, 0.5, 0.5]
          },
          "run": {}
        }"#,
    );
    let output = bin()
        .args(["coefficients", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let err: serde_json::Value =
        serde_json::from_slice(&output.stderr).expect("machine-readable error JSON");
    assert_eq!(err["error"]["kind"], "config");
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn numerical_failures_exit_3() {
    let dir = work_dir("numerical-error");
    // heating-dominated robustness scan: detuned far off the gate point the
    // symmetric scheme heats, so the rate equation rejects it
    let config = write_scenario(
        &dir,
        r#"{
          "dimensionless": {
            "scheme": "eit-baseline", "lambda": 0.05, "omega": 1.5,
            "omega_g": 0.0, "delta_plus": -4.0, "delta_minus": -4.0,
            "gamma": 7.5, "fock_dim": 6
          },
          "run": { "t_final": 50.0 }
        }"#,
    );
    let output = bin()
        .args(["evolve", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(3), "stderr: {}", String::from_utf8_lossy(&output.stderr));
    let err: serde_json::Value = serde_json::from_slice(&output.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "numerical");
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn missing_scenario_file_exits_2() {
    let output = bin()
        .args(["spectrum", "--config", "/nonexistent/path.json"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn unknown_preset_exits_2_and_lists_options() {
    let output = bin().args(["preset", "warp-drive"]).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("levitated") && stderr.contains("cantilever"));
}

#[test]
fn preset_round_trips_through_the_cli() {
    let dir = work_dir("preset");
    let status = bin()
        .args(["preset", "levitated", "--out"])
        .arg(&dir)
        .status()
        .unwrap();
    assert!(status.success());
    let path = dir.join("levitated.scenario.json");
    let scenario =
        phonon_chill_cli::scenario::Scenario::from_json(&fs::read_to_string(&path).unwrap())
            .unwrap();
    let cfg = scenario.to_config().unwrap();
    assert_eq!(cfg.kind, phonon_chill::scheme::SchemeKind::Symmetric);
    // spot the derived internal units
    assert!((cfg.omega - 3.0).abs() <= 1e-12);
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn threads_flag_does_not_change_compare_output() {
    let dir = work_dir("threads");
    let config = write_scenario(
        &dir,
        r#"{
          "dimensionless": {
            "scheme": "symmetric", "lambda": 0.05, "omega": 1.5,
            "omega_g": 2.0, "delta": 0.125, "delta_g": -1.0,
            "gamma": 7.5, "fock_dim": 5
          },
          "run": { "t_final": 60.0 }
        }"#,
    );
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let out = dir.join(format!("t{threads}"));
        let status = bin()
            .args(["compare", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .args(["--threads", threads])
            .status()
            .unwrap();
        assert!(status.success());
        outputs.push(fs::read(out.join("compare.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let _ = fs::remove_dir_all(&dir);
}
