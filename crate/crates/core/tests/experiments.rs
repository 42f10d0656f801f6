use std::path::Path;

use junction_core::experiments::{run_scenario, summarize_files, ExperimentConfig, Manifest, Scenario};
use junction_core::Error;

fn cheap(s: Scenario, dir: &Path) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(s);
    c.output_dir = dir.to_path_buf();
    c.junction.angles = 4;
    c.junction.eta_angles = 1;
    c.junction.eta_eps = vec![1e-3];
    c.junction.instability_starts = 2;
    c.zeno.depth = 5;
    c.scaling.samples = 3;
    c.tracking.eps = vec![1e-2];
    c.tracking.random.samples = 2;
    c.counterexample.sweep_points = 10;
    c.value.eps = vec![0.2, 0.1];
    c.value.grid.h = 0.1;
    c.value.study.probes = 10;
    c.apriori.eps = vec![1e-2];
    c.apriori.entry_eps = vec![1e-2, 1e-3];
    c.apriori.random.samples = 3;
    c
}

#[test]
fn every_scenario_writes_hashed_artifacts_and_anchors() {
    let dir = tempfile::tempdir().unwrap();
    for s in Scenario::ALL {
        let m = run_scenario(&cheap(s, dir.path())).unwrap();
        assert!(!m.anchors.is_empty(), "{s}");
        assert!(!m.artifacts.is_empty(), "{s}");
        let run = dir.path().join(s.as_str());
        for a in &m.artifacts {
            let bytes = std::fs::read(run.join(&a.path)).unwrap();
            assert_eq!(bytes.len(), a.bytes, "{s}/{}", a.path);
        }
        let back = Manifest::read(&run.join("manifest.json")).unwrap();
        assert_eq!(back, m);
    }
}

#[test]
fn reruns_reproduce_artifact_hashes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for s in Scenario::ALL {
        let mut ca = cheap(s, a.path());
        let mut cb = cheap(s, b.path());
        ca.parallel = false;
        cb.parallel = true;
        let ma = run_scenario(&ca).unwrap();
        let mb = run_scenario(&cb).unwrap();
        assert_eq!(ma.artifacts, mb.artifacts, "{s}");
        assert_eq!(ma.assertions, mb.assertions, "{s}");
    }
}

#[test]
fn config_files_round_trip_and_drive_runs() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.toml");
    let text = format!(
        "schema_version = 1\nscenario = \"counterexample\"\noutput_dir = \"{}\"\n\n[counterexample]\nlambda = 2.0\nsweep_points = 5\n",
        dir.path().join("out").display()
    );
    std::fs::write(&path, text).unwrap();
    let cfg = ExperimentConfig::load(&path).unwrap();
    assert_eq!(cfg.counterexample.lambda, 2.0);
    assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    let m = run_scenario(&cfg).unwrap();
    assert!(m.passed);
    let s = summarize_files(&[&dir.path().join("out/counterexample/manifest.json")]).unwrap();
    assert!(s.passed);
    assert!(s.to_table().ends_with("overall: PASS\n"));
}

#[test]
fn unknown_keys_and_versions_are_rejected() {
    let bad_key = "schema_version = 1\nscenario = \"zeno\"\n[zeno]\ndepht = 3\n";
    assert!(matches!(ExperimentConfig::from_toml(bad_key), Err(Error::Config(_))));
    let bad_version = "schema_version = 9\nscenario = \"zeno\"\n";
    assert!(matches!(ExperimentConfig::from_toml(bad_version), Err(Error::Config(_))));
    let bad_name = "schema_version = 1\nscenario = \"zenon\"\n";
    assert!(ExperimentConfig::from_toml(bad_name).is_err());
}
