//! Pinned outputs of every subcommand. Set `UPDATE_GOLDEN=1` to rewrite the files under
//! `tests/golden/`.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn junction(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_junction"))
        .args(args)
        .current_dir(dir)
        .env_remove("JUNCTION_THREADS")
        .output()
        .expect("binary runs")
}

fn check_golden(name: &str, actual: &str) {
    let path = golden_dir().join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(golden_dir()).unwrap();
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert!(expected == actual, "{name} differs from golden copy\n--- expected\n{expected}\n--- actual\n{actual}");
}

fn ok_stdout(dir: &Path, args: &[&str]) -> String {
    let o = junction(dir, args);
    assert_eq!(o.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

#[test]
fn project() {
    let dir = tempfile::tempdir().unwrap();
    let mut out = String::new();
    for x in ["1,2", "-3,0.5", "0,0", "2,-2", "-0.25,-4"] {
        out += &ok_stdout(dir.path(), &["project", "--x", x]);
    }
    check_golden("project.txt", &out);
}

#[test]
fn simulate() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok_stdout(dir.path(), &["simulate", "--x", "1,0.5", "--theta", "3", "--eps", "0.01", "--horizon", "0.5"]);
    check_golden("simulate_theta.csv", &out);
    let out = ok_stdout(
        dir.path(),
        &["simulate", "--x", "-0.5,0.2", "--control", "0:1,0;0.25:0,-1", "--eps", "0.05", "--horizon", "0.5"],
    );
    check_golden("simulate_schedule.csv", &out);
}

#[test]
fn limit() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok_stdout(dir.path(), &["limit", "--start", "O", "--theta", "0.3"]);
    check_golden("limit_from_o.json", &out);
    let out = ok_stdout(dir.path(), &["limit", "--start", "N:1", "--theta", "4"]);
    check_golden("limit_from_n.json", &out);
}

#[test]
fn value2d() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok_stdout(dir.path(), &["value2d", "--eps", "0.2", "--grid-h", "0.25", "--region=-1,1,-1,1"]);
    check_golden("value2d.csv", &out);
}

#[test]
fn valuenet() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok_stdout(dir.path(), &["valuenet", "--grid-h", "0.1", "--radius", "1"]);
    check_golden("valuenet.csv", &out);
}

#[test]
fn converge() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok_stdout(
        dir.path(),
        &["converge", "--eps", "0.2,0.1", "--grid-h", "0.1", "--region=-1,1,-1,1", "--probes", "10"],
    );
    check_golden("converge.json", &out);
}

#[test]
fn scenario_and_summarize() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok_stdout(dir.path(), &["scenario", "counterexample", "--out", "out"]);
    check_golden("scenario_counterexample.txt", &out);
    let manifest = std::fs::read_to_string(dir.path().join("out/counterexample/manifest.json")).unwrap();
    check_golden("counterexample_manifest.json", &manifest);

    let cfg = dir.path().join("zeno.toml");
    std::fs::write(&cfg, "schema_version = 1\nscenario = \"zeno\"\n\n[zeno]\ndepth = 4\n").unwrap();
    let out = ok_stdout(dir.path(), &["scenario", "zeno", "--config", "zeno.toml", "--out", "out", "--eps", "0.1,0.01"]);
    check_golden("scenario_zeno.txt", &out);

    let out = ok_stdout(
        dir.path(),
        &["summarize", "out/counterexample/manifest.json", "out/zeno/manifest.json", "--out", "summary.json"],
    );
    check_golden("summarize.txt", &out);
    let summary = std::fs::read_to_string(dir.path().join("summary.json")).unwrap();
    check_golden("summary.json", &summary);
}

#[test]
fn selftest() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok_stdout(dir.path(), &["selftest", "--parallel"]);
    assert!(out.ends_with("overall: PASS\n"));
    check_golden("selftest.txt", &out);
}

#[test]
fn parallel_runs_match_serial() {
    let dir = tempfile::tempdir().unwrap();
    ok_stdout(dir.path(), &["scenario", "tracking", "--out", "serial"]);
    ok_stdout(dir.path(), &["scenario", "tracking", "--out", "par", "--parallel"]);
    let read = |d: &str| std::fs::read_to_string(dir.path().join(d).join("tracking/tracking.csv")).unwrap();
    assert_eq!(read("serial"), read("par"));
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cases: &[&[&str]] = &[
        &["frobnicate"],
        &["scenario", "bogus"],
        &["scenario", "zeno", "--lambda", "2"],
        &["project", "--x", "1"],
        &["simulate", "--x", "1,1", "--theta", "0", "--eps", "-1", "--horizon", "1"],
        &["value2d", "--eps", "0.1", "--region=1,-1,0,1"],
        &["limit", "--start", "Q", "--theta", "0"],
    ];
    for args in cases {
        let o = junction(dir.path(), args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"), "{args:?}");
    }
}

#[test]
fn config_for_other_scenario_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), "schema_version = 1\nscenario = \"tracking\"\n").unwrap();
    let o = junction(dir.path(), &["scenario", "zeno", "--config", "c.toml"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn failing_assertions_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.json");
    let body = r#"{
  "schema_version": 1,
  "scenario": "zeno",
  "version": "0",
  "config": {},
  "anchors": [],
  "artifacts": [],
  "assertions": [{"id": "x", "passed": false, "value": 2.0, "bound": 1.0, "relation": "<="}],
  "passed": false
}"#;
    std::fs::write(&m, body).unwrap();
    let o = junction(dir.path(), &["summarize", "m.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).ends_with("overall: FAIL\n"));
}

#[test]
fn thread_variable_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_junction"))
        .args(["project", "--x", "1,1"])
        .current_dir(dir.path())
        .env("JUNCTION_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = Command::new(env!("CARGO_BIN_EXE_junction"))
        .args(["project", "--x", "1,1"])
        .current_dir(dir.path())
        .env("JUNCTION_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
}
