// Copyright 2026 The perp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! End-to-end tests of the `perp` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

use perp::harness::trace::validate_trace;

fn perp(out_dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_perp"))
        .args(args)
        .env("PERP_OUTPUT_DIR", out_dir)
        .output()
        .expect("spawn perp")
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn run_writes_one_trace_per_trial() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("demo.json");
    let o = perp(dir.path(), &["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("2 trial(s)"));

    for trial in 0..2 {
        let text = std::fs::read_to_string(dir.path().join(format!("trace-{trial:04}.jsonl"))).unwrap();
        let lines: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(validate_trace(&lines).unwrap(), 2001);
        assert_eq!(lines[0]["trial_id"], trial);
    }
    let summary = std::fs::read_to_string(dir.path().join("summary.tsv")).unwrap();
    assert_eq!(summary.lines().count(), 3);
}

#[test]
fn rerun_is_byte_identical() {
    let cfg = config("demo.json");
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = perp(d.path(), &["run", "--config", cfg.to_str().unwrap(), "--parallel", "2"]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    for file in ["summary.tsv", "trace-0001.jsonl"] {
        let x = std::fs::read(a.path().join(file)).unwrap();
        let y = std::fs::read(b.path().join(file)).unwrap();
        assert!(x == y, "{file} differs between reruns");
    }
}

#[test]
fn seed_flag_overrides_config() {
    let cfg = config("demo.json");
    let a = tempfile::tempdir().unwrap();
    let o = perp(a.path(), &["run", "--config", cfg.to_str().unwrap(), "--seed", "99"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("seed 99;"));
}

#[test]
fn zero_gamma_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(
        &path,
        r#"{ "globals": { "d": 2, "epsilon": 1.0, "delta_star": 0.1, "alpha": 0.2, "beta": 0.1, "gamma": 0.0 } }"#,
    )
    .unwrap();
    for cmd in ["run", "check-params"] {
        let o = perp(dir.path(), &[cmd, "--config", path.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(1), "{cmd}");
        assert!(stderr(&o).contains("γ must be in (0,1]"), "{cmd}: {}", stderr(&o));
    }
}

#[test]
fn unknown_field_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{ "trails": 3 }"#).unwrap();
    let o = perp(dir.path(), &["run", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("trails"), "{}", stderr(&o));
}

#[test]
fn missing_config_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let o = perp(dir.path(), &["run", "--config", "/nonexistent/perp.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("/nonexistent/perp.json"));
}

#[test]
fn leakage_prints_rate_and_target() {
    let dir = tempfile::tempdir().unwrap();
    let o = perp(dir.path(), &["leakage", "--delta", "0.001", "--horizon", "1000"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("0.6323"), "{text}");

    let o = perp(
        dir.path(),
        &["leakage", "--delta", "0.3", "--horizon", "0", "--trials", "1000"],
    );
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("0.0000"), "{}", stdout(&o));
}

#[test]
fn audit_brackets_randomized_response() {
    let dir = tempfile::tempdir().unwrap();
    let o = perp(
        dir.path(),
        &[
            "audit",
            "--mechanism",
            "randomized-response-calibration",
            "--trials",
            "200000",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let ci = text.split("CI [").nth(1).and_then(|r| r.split(']').next()).unwrap();
    let (lo, hi) = ci.split_once(", ").unwrap();
    let (lo, hi): (f64, f64) = (lo.parse().unwrap(), hi.parse().unwrap());
    assert!(lo <= 3f64.ln() && 3f64.ln() <= hi, "{text}");
}

#[test]
fn audit_identical_inputs_contain_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = perp(
        dir.path(),
        &["audit", "--mechanism", "stopper", "--trials", "20000", "--identical"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("CI [0.0000,"), "{}", stdout(&o));
}

#[test]
fn audit_unknown_mechanism_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = perp(dir.path(), &["audit", "--mechanism", "laplace"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("laplace"));
}

#[test]
fn check_params_passes_on_shipped_configs() {
    let dir = tempfile::tempdir().unwrap();
    for name in [
        "demo.json",
        "rectangles_desk.json",
        "rectangles_gamma1.json",
        "stumps_desk.json",
    ] {
        let cfg = config(name);
        let o = perp(
            dir.path(),
            &["check-params", "--config", cfg.to_str().unwrap(), "--phases", "30"],
        );
        assert_eq!(o.status.code(), Some(0), "{name}: {}", stdout(&o));
        assert!(!stdout(&o).contains("VIOLATED"), "{name}");
    }
}

#[test]
fn check_params_reports_violations_with_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tight.json");
    std::fs::write(&path, r#"{ "resolver": { "c_t": 0.01 } }"#).unwrap();
    let o = perp(
        dir.path(),
        &["check-params", "--config", path.to_str().unwrap(), "--phases", "3"],
    );
    assert_eq!(o.status.code(), Some(2), "{}{}", stdout(&o), stderr(&o));
}

#[test]
fn bad_flags_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(perp(dir.path(), &["frobnicate"]).status.code(), Some(1));
    assert_eq!(perp(dir.path(), &["--help"]).status.code(), Some(0));
}
