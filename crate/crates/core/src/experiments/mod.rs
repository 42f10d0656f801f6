//! Named, reproducible experiments. Each scenario reads one section of an
//! [`ExperimentConfig`], writes CSV/JSON artifacts and records pass/fail assertions in a
//! [`Manifest`]. Identical configs give byte-identical artifacts.

pub mod config;
pub mod manifest;
mod random;
mod scenarios;

use std::path::{Path, PathBuf};

use rayon::prelude::*;

pub use config::{
    AprioriParams, CounterexampleParams, ExperimentConfig, JunctionParams, RandomControls, ScalingParams, Scenario,
    Tolerances, TrackingParams, ValueParams, ZenoParams, SCHEMA_VERSION,
};
pub use manifest::{summarize, Artifact, Assertion, Manifest, Summary, SummaryRow};
pub use scenarios::projection_checks;

use crate::error::Result;

/// Artifacts and assertions collected while a scenario runs.
#[derive(Debug, Default)]
pub struct RunOutput {
    pub anchors: Vec<String>,
    pub assertions: Vec<Assertion>,
    /// `(relative path, contents)` in creation order.
    pub files: Vec<(String, Vec<u8>)>,
}

impl RunOutput {
    pub(crate) fn anchors(&mut self, names: &[&str]) {
        self.anchors.extend(names.iter().map(|s| s.to_string()));
    }

    pub(crate) fn check(&mut self, a: Assertion) {
        self.assertions.push(a);
    }

    pub(crate) fn file(&mut self, name: &str, data: impl Into<Vec<u8>>) {
        self.files.push((name.to_string(), data.into()));
    }

    fn manifest(&self, cfg: &ExperimentConfig) -> Manifest {
        Manifest {
            schema_version: SCHEMA_VERSION,
            scenario: cfg.scenario.as_str().to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: serde_json::to_value(cfg).expect("config serializes"),
            anchors: self.anchors.clone(),
            artifacts: self.files.iter().map(|(p, d)| Artifact::of(p, d)).collect(),
            passed: self.assertions.iter().all(|a| a.passed),
            assertions: self.assertions.clone(),
        }
    }
}

/// Runs the scenario without touching the file system.
pub fn run_in_memory(cfg: &ExperimentConfig) -> Result<(Manifest, RunOutput)> {
    cfg.validate()?;
    let mut out = RunOutput::default();
    scenarios::dispatch(cfg, &mut out)?;
    Ok((out.manifest(cfg), out))
}

/// Directory that receives the artifacts of `cfg`.
pub fn run_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.output_dir.join(cfg.scenario.as_str())
}

/// Runs the scenario and writes its artifacts and `manifest.json` under
/// `output_dir/<scenario>/`. Assertion failures are reported in the manifest, not as errors.
pub fn run_scenario(cfg: &ExperimentConfig) -> Result<Manifest> {
    let (manifest, out) = run_in_memory(cfg)?;
    let dir = run_dir(cfg);
    std::fs::create_dir_all(&dir)?;
    for (name, data) in &out.files {
        std::fs::write(dir.join(name), data)?;
    }
    std::fs::write(dir.join("manifest.json"), manifest.to_json_string())?;
    Ok(manifest)
}

/// Reads manifests from disk and summarizes them.
pub fn summarize_files(paths: &[&Path]) -> Result<Summary> {
    let ms = paths.iter().map(|p| Manifest::read(p)).collect::<Result<Vec<_>>>()?;
    Ok(summarize(&ms))
}

/// Reduced versions of every scenario plus the projection checks, run in memory.
pub fn selftest(parallel: bool) -> Result<Vec<Manifest>> {
    let mut out = Vec::new();
    for s in Scenario::ALL {
        let mut cfg = ExperimentConfig::new(s);
        cfg.parallel = parallel;
        shrink(&mut cfg);
        out.push(run_in_memory(&cfg)?.0);
    }
    let mut proj = RunOutput::default();
    proj.anchors(&["projection-closed-form", "hyperbola-conservation"]);
    for a in projection_checks(100, 7, 5.0, 1e-5)? {
        proj.check(a);
    }
    let mut m = proj.manifest(&ExperimentConfig::new(Scenario::JunctionBehavior));
    m.scenario = "projection".into();
    m.config = serde_json::json!({ "points": 100, "seed": 7, "box_half": 5.0, "tol": 1e-5 });
    out.push(m);
    Ok(out)
}

fn shrink(cfg: &mut ExperimentConfig) {
    cfg.junction.angles = 8;
    cfg.junction.eta_eps = vec![1e-3, 1e-4];
    cfg.junction.eta_angles = 2;
    cfg.junction.instability_starts = 3;
    cfg.zeno.depth = 6;
    cfg.scaling.samples = 5;
    cfg.tracking.eps = vec![1e-2, 1e-3];
    cfg.tracking.random.samples = 3;
    cfg.counterexample.sweep_points = 20;
    cfg.value.grid.h = 0.05;
    cfg.value.study.probes = 20;
    cfg.apriori.eps = vec![1e-2];
    cfg.apriori.entry_eps = vec![1e-2, 1e-3];
    cfg.apriori.random.samples = 5;
}

/// Maps `f` over `items`, concurrently when asked; results keep the input order.
pub(crate) fn map_jobs<T, R, F>(parallel: bool, items: Vec<T>, f: F) -> Result<Vec<R>>
where
    T: Send,
    R: Send,
    F: Fn(T) -> Result<R> + Sync + Send,
{
    if parallel {
        items.into_par_iter().map(f).collect()
    } else {
        items.into_iter().map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counterexample_writes_manifest_and_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig::new(Scenario::Counterexample);
        cfg.output_dir = dir.path().to_path_buf();
        let m = run_scenario(&cfg).unwrap();
        assert!(m.passed);
        let run = run_dir(&cfg);
        let back = Manifest::read(&run.join("manifest.json")).unwrap();
        assert_eq!(back, m);
        for a in &m.artifacts {
            let data = std::fs::read(run.join(&a.path)).unwrap();
            assert_eq!(Artifact::of(&a.path, &data), *a);
        }
    }

    #[test]
    fn runs_are_deterministic() {
        for s in [Scenario::Zeno, Scenario::ScalingLaw, Scenario::Counterexample] {
            let mut cfg = ExperimentConfig::new(s);
            shrink(&mut cfg);
            let (a, _) = run_in_memory(&cfg).unwrap();
            cfg.parallel = true;
            let (b, _) = run_in_memory(&cfg).unwrap();
            assert_eq!(a.artifacts, b.artifacts, "{s}");
            assert_eq!(a.assertions, b.assertions, "{s}");
        }
    }

    #[test]
    fn map_jobs_keeps_order() {
        let v = map_jobs(true, (0..100).collect(), |i: i32| Ok(i * 2)).unwrap();
        assert_eq!(v, (0..100).map(|i| i * 2).collect::<Vec<_>>());
    }
}
