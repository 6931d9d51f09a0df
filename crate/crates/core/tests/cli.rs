//! Run configuration, reports and the exit-code contract of the binary.

use std::path::{Path, PathBuf};
use std::process::Command;

use oscdamp::cli::{self, RunConfig};
use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_oscdamp");

fn demo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/demo_n1.json")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("oscdamp-cli-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(BIN).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn unknown_keys_are_rejected_with_a_location() {
    let err = RunConfig::from_json("{\"omegas\": [1.0],\n \"bogus\": 1}").unwrap_err().to_string();
    assert!(err.contains("line 2"), "{err}");
    assert!(err.contains("bogus"), "{err}");
    assert!(RunConfig::from_json(r#"{"omegas": [1.0], "sim": {"stepp": 0.1}}"#).is_err());
    assert!(RunConfig::from_json(r#"{"omegas": [1.0], "overrides": {"theta": 1.0}}"#).is_err());
}

#[test]
fn defaults_fill_everything_but_the_frequencies() {
    let cfg = RunConfig::from_json(r#"{"omegas": [1.0, 2.0]}"#).unwrap();
    assert_eq!(cfg.seed, 0);
    assert_eq!(cfg.sim, oscdamp::sim::SimConfig::default());
    assert_eq!(cfg.outputs.trajectory_csv, "trajectory.csv");
    assert!(RunConfig::from_json("{}").is_err());
}

#[test]
fn demo_config_completes_with_ratios() {
    let out = scratch("demo");
    let (code, stdout, stderr) = run(&["simulate", "--config", demo().to_str().unwrap(), "--out", out.to_str().unwrap(), "--json"]);
    assert_eq!(code, 0, "{stderr}");
    let summary: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(summary["spec_version"], "1.0");
    assert_eq!(summary["outcome"], "Done");
    for key in ["total_time", "rho0", "ratio_T_over_rho0", "tau_oracle", "ratio_T_over_tau"] {
        assert!(summary[key].as_f64().is_some_and(f64::is_finite), "{key}");
    }
    let csv = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert!(csv.starts_with("t,x1,y1,u,stage,rho,T_local,h_resid\n"));
    assert!(csv.lines().last().unwrap().contains(",Done,"));
}

#[test]
fn identical_inputs_give_identical_files() {
    let cfg = RunConfig::load(&demo()).unwrap();
    let (a, b) = (scratch("det-a"), scratch("det-b"));
    cli::simulate(&cfg, &a).unwrap();
    cli::simulate(&cfg, &b).unwrap();
    for f in ["trajectory.csv", "summary.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn duplicate_frequencies_exit_with_error() {
    let dir = scratch("dup");
    let path = dir.join("dup.json");
    std::fs::write(&path, r#"{"omegas": [1.0, 1.0], "x0": [1, 0, 1, 0]}"#).unwrap();
    let (code, _, stderr) = run(&["simulate", "--config", path.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(stderr.contains("pairwise distinct"), "{stderr}");
}

#[test]
fn short_horizon_exits_with_max_time() {
    let dir = scratch("maxtime");
    let path = dir.join("short.json");
    std::fs::write(&path, r#"{"omegas": [1.0], "x0": [19.0, 25.0], "sim": {"max_time": 5.0}}"#).unwrap();
    let (code, _, _) = run(&["simulate", "--config", path.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_eq!(code, 2);
}

#[test]
fn batch_reports_every_config() {
    let dir = scratch("batch");
    let configs = dir.join("configs");
    std::fs::create_dir_all(&configs).unwrap();
    std::fs::copy(demo(), configs.join("a.json")).unwrap();
    std::fs::write(configs.join("b.json"), r#"{"omegas": [1.0], "x0": [19.0, 25.0], "sim": {"max_time": 5.0}}"#).unwrap();
    let out = dir.join("out");
    let (code, stdout, _) = run(&["simulate", "--batch", configs.to_str().unwrap(), "--out", out.to_str().unwrap(), "--json"]);
    assert_eq!(code, 2);
    let report: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(report["spec_version"], "1.0");
    assert_eq!(report["runs"][0]["exit_code"], 0);
    assert_eq!(report["runs"][1]["exit_code"], 2);
    assert!(out.join("a/summary.json").exists() && out.join("b/summary.json").exists());
}

#[test]
fn report_commands_echo_single_oscillator_values() {
    let demo = demo();
    let config = demo.to_str().unwrap();
    let json = |cmd: &str| -> Value {
        let (code, stdout, stderr) = run(&[cmd, "--config", config, "--json"]);
        assert_eq!(code, 0, "{cmd}: {stderr}");
        let v: Value = serde_json::from_str(&stdout).unwrap();
        assert_eq!(v["spec_version"], "1.0", "{cmd}");
        v
    };
    // x0 = (50 / (pi/2)) (0.6, 0.8), so rho = 50
    assert!((json("gauge")["rho"].as_f64().unwrap() - 50.0).abs() < 1e-9);
    let mu = json("mu");
    assert!((mu["mu_hat"].as_f64().unwrap() - 2.0 / std::f64::consts::PI).abs() < 1e-12);
    let local = json("check-local");
    assert_eq!(local["q_inverse"], serde_json::json!([["6", "-12"], ["-12", "36"]]));
    assert_eq!(local["kappa_sq"], "1/6");
    let canonical = json("check-canonical");
    assert_eq!(canonical["c"], serde_json::json!([1.0, 0.0]));
    let matched = json("match");
    assert_eq!(matched["verification"]["cond_a_violations"], 0);
    assert_eq!(matched["verification"]["cond_b_violations"], 0);
    let tau = json("mintime")["tau"].as_f64().unwrap();
    assert!(tau > 50.0 && tau < 51.0);
}

#[test]
fn missing_state_and_config_are_errors() {
    let dir = scratch("nox");
    let path = dir.join("nox.json");
    std::fs::write(&path, r#"{"omegas": [1.0]}"#).unwrap();
    assert_eq!(run(&["gauge", "--config", path.to_str().unwrap()]).0, 1);
    assert_eq!(run(&["gauge"]).0, 1);
    assert_eq!(run(&["mintime", "--config", "/nonexistent.json"]).0, 1);
}

#[test]
fn reports_are_written_to_the_output_directory() {
    let dir = scratch("reports");
    let (code, _, _) = run(&["check-canonical", "--config", demo().to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(dir.join("check-canonical.json")).unwrap()).unwrap();
    assert_eq!(v["spec_version"], "1.0");
}
