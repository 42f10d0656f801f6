//! Run manifests and the cross-scenario summary.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// One checked claim. `value` is compared against `bound` as described by `relation`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub id: String,
    pub passed: bool,
    #[serde(with = "lenient_f64")]
    pub value: f64,
    #[serde(with = "lenient_f64")]
    pub bound: f64,
    pub relation: String,
}

impl Assertion {
    /// `value <= bound`.
    pub fn at_most(id: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            id: id.into(),
            passed: value <= bound,
            value,
            bound,
            relation: "<=".into(),
        }
    }

    /// `value >= bound`.
    pub fn at_least(id: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            id: id.into(),
            passed: value >= bound,
            value,
            bound,
            relation: ">=".into(),
        }
    }

    /// `value > bound`.
    pub fn greater(id: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            id: id.into(),
            passed: value > bound,
            value,
            bound,
            relation: ">".into(),
        }
    }

    /// `value < bound`.
    pub fn less(id: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            id: id.into(),
            passed: value < bound,
            value,
            bound,
            relation: "<".into(),
        }
    }

    /// A yes/no check, recorded as `1` against `1`.
    pub fn holds(id: impl Into<String>, ok: bool) -> Self {
        Self {
            id: id.into(),
            passed: ok,
            value: if ok { 1.0 } else { 0.0 },
            bound: 1.0,
            relation: "==".into(),
        }
    }
}

/// JSON has no infinities or NaN; those are written as the strings `inf`, `-inf`, `nan`.
mod lenient_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str(&v.to_string().to_lowercase())
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    /// Path relative to the run directory.
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

impl Artifact {
    pub fn of(path: &str, data: &[u8]) -> Self {
        Self {
            path: path.to_string(),
            sha256: hex::encode(Sha256::digest(data)),
            bytes: data.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub scenario: String,
    pub version: String,
    /// Full configuration after defaults were applied.
    pub config: serde_json::Value,
    /// Properties the scenario exercises.
    pub anchors: Vec<String>,
    pub artifacts: Vec<Artifact>,
    pub assertions: Vec<Assertion>,
    pub passed: bool,
}

impl Manifest {
    pub fn failures(&self) -> impl Iterator<Item = &Assertion> {
        self.assertions.iter().filter(|a| !a.passed)
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text).map_err(|e| match e {
            Error::MalformedManifest(m) => Error::MalformedManifest(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text).map_err(|e| Error::MalformedManifest(e.to_string()))?;
        if m.passed != m.assertions.iter().all(|a| a.passed) {
            return Err(Error::MalformedManifest(format!(
                "`passed` disagrees with the assertions of {}",
                m.scenario
            )));
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub scenario: String,
    pub assertion: String,
    pub passed: bool,
    #[serde(serialize_with = "lenient_f64::serialize")]
    pub value: f64,
    pub relation: String,
    #[serde(serialize_with = "lenient_f64::serialize")]
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub rows: Vec<SummaryRow>,
    pub passed: bool,
    /// `scenario/assertion` for every failure.
    pub failing: Vec<String>,
}

impl Summary {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("summary serializes")
    }

    /// Fixed-width table followed by an `overall:` line.
    pub fn to_table(&self) -> String {
        let w_s = self.rows.iter().map(|r| r.scenario.len()).max().unwrap_or(0).max(8);
        let w_a = self.rows.iter().map(|r| r.assertion.len()).max().unwrap_or(0).max(9);
        let mut out = String::new();
        let _ = writeln!(out, "{:<w_s$}  {:<w_a$}  {:<6}  check", "scenario", "assertion", "status");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<w_s$}  {:<w_a$}  {:<6}  {} {} {}",
                r.scenario,
                r.assertion,
                if r.passed { "PASS" } else { "FAIL" },
                num(r.value),
                r.relation,
                num(r.bound)
            );
        }
        let _ = writeln!(out, "overall: {}", if self.passed { "PASS" } else { "FAIL" });
        out
    }
}

/// Shortest round-trip text, in exponent form when plain decimals would be long.
fn num(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || !v.is_finite() || (1e-4..1e15).contains(&a) {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

/// Every assertion of every manifest, in order.
pub fn summarize(manifests: &[Manifest]) -> Summary {
    let rows: Vec<SummaryRow> = manifests
        .iter()
        .flat_map(|m| {
            m.assertions.iter().map(|a| SummaryRow {
                scenario: m.scenario.clone(),
                assertion: a.id.clone(),
                passed: a.passed,
                value: a.value,
                relation: a.relation.clone(),
                bound: a.bound,
            })
        })
        .collect();
    let failing: Vec<String> = rows
        .iter()
        .filter(|r| !r.passed)
        .map(|r| format!("{}/{}", r.scenario, r.assertion))
        .collect();
    Summary {
        passed: failing.is_empty(),
        failing,
        rows,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manifest(assertions: Vec<Assertion>) -> Manifest {
        Manifest {
            schema_version: 1,
            scenario: "zeno".into(),
            version: "0".into(),
            config: serde_json::Value::Null,
            anchors: vec![],
            artifacts: vec![],
            passed: assertions.iter().all(|a| a.passed),
            assertions,
        }
    }

    #[test]
    fn empty_summary_passes() {
        let s = summarize(&[]);
        assert!(s.passed && s.rows.is_empty() && s.failing.is_empty());
        assert!(s.to_table().ends_with("overall: PASS\n"));
    }

    #[test]
    fn single_passing_manifest() {
        let s = summarize(&[manifest(vec![Assertion::at_most("a", 1.0, 2.0)])]);
        assert_eq!(s.rows.len(), 1);
        assert!(s.passed);
    }

    #[test]
    fn mixed_results_name_the_failures() {
        let s = summarize(&[
            manifest(vec![Assertion::at_most("a", 1.0, 2.0)]),
            manifest(vec![Assertion::at_least("b", 1.0, 2.0), Assertion::holds("c", true)]),
        ]);
        assert!(!s.passed);
        assert_eq!(s.failing, vec!["zeno/b".to_string()]);
        assert!(s.to_table().contains("FAIL"));
    }

    #[test]
    fn parse_checks_consistency() {
        let m = manifest(vec![Assertion::holds("a", false)]);
        assert_eq!(Manifest::parse(&m.to_json_string()).unwrap(), m);
        let mut bad = m.clone();
        bad.passed = true;
        assert!(matches!(Manifest::parse(&bad.to_json_string()), Err(Error::MalformedManifest(_))));
        assert!(Manifest::parse("{").is_err());
    }

    #[test]
    fn non_finite_values_round_trip() {
        let m = manifest(vec![Assertion::at_most("a", f64::INFINITY, 1.0), Assertion::at_least("b", f64::NEG_INFINITY, 0.0)]);
        let back = Manifest::parse(&m.to_json_string()).unwrap();
        assert_eq!(back.assertions[0].value, f64::INFINITY);
        assert_eq!(back.assertions[1].value, f64::NEG_INFINITY);
    }

    #[test]
    fn artifact_hash() {
        let a = Artifact::of("x.csv", b"abc");
        assert_eq!(a.sha256, "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
        assert_eq!(a.bytes, 3);
    }
}
