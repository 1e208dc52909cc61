//! JSON reports. Every report carries the config hash, the seed and the
//! tolerance set, and serializes with sorted keys so identical runs give
//! identical bytes.

use std::path::Path;

use kahlercap_core::tol;
use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::error::{io_err, CliResult};

/// Hashes the command line (argument order as given) and the bytes of
/// every input file it names.
pub struct ConfigHasher {
    h: Sha256,
}

impl ConfigHasher {
    pub fn new(command: &str) -> Self {
        let mut h = Sha256::new();
        h.update(command.as_bytes());
        h.update([0]);
        Self { h }
    }

    pub fn arg(mut self, key: &str, value: impl std::fmt::Display) -> Self {
        self.h.update(format!("{key}={value}").as_bytes());
        self.h.update([0]);
        self
    }

    pub fn file(mut self, path: &Path) -> CliResult<Self> {
        let bytes = std::fs::read(path).map_err(io_err(path))?;
        self.h.update((bytes.len() as u64).to_le_bytes());
        self.h.update(&bytes);
        Ok(self)
    }

    pub fn finish(self) -> String {
        self.h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

pub fn tolerances() -> Value {
    json!({
        "mass_tol": tol::MASS_TOL,
        "support_tol": tol::SUPPORT_TOL,
        "env_tol": tol::ENV_TOL,
        "env_max_sweeps": tol::ENV_MAX_SWEEPS,
        "dirichlet_rel_tol": tol::DIRICHLET_REL_TOL,
        "dirichlet_max_sweeps": tol::DIRICHLET_MAX_SWEEPS,
        "polar_threshold": tol::POLAR_THRESHOLD,
        "polar_node_fraction": tol::POLAR_NODE_FRACTION,
        "cross_tol": tol::CROSS_TOL,
        "gram_eig_threshold": tol::GRAM_EIG_THRESHOLD,
        "cln_slack": tol::CLN_SLACK,
        "lift_floor": tol::LIFT_FLOOR,
    })
}

/// One named pass/fail line of a report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

pub struct Report {
    pub command: &'static str,
    pub config_hash: String,
    pub seed: u64,
    pub results: Value,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_value(&self) -> Value {
        let mut m = Map::new();
        m.insert("command".into(), json!(self.command));
        m.insert("config_hash".into(), json!(self.config_hash));
        m.insert("seed".into(), json!(self.seed));
        m.insert("tolerances".into(), tolerances());
        m.insert("results".into(), self.results.clone());
        m.insert("checks".into(), serde_json::to_value(&self.checks).expect("checks serialize"));
        m.insert("passed".into(), json!(self.passed()));
        Value::Object(m)
    }

    pub fn to_string_pretty(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_value()).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        std::fs::write(path, self.to_string_pretty()).map_err(io_err(path))
    }
}

/// JSON has no infinities; they become `null`.
pub fn num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_depends_on_every_input() {
        let a = ConfigHasher::new("capacity").arg("res", 257).finish();
        let b = ConfigHasher::new("capacity").arg("res", 257).finish();
        let c = ConfigHasher::new("capacity").arg("res", 129).finish();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 64);
    }

    #[test]
    fn reports_embed_metadata() {
        let r = Report {
            command: "x",
            config_hash: "h".into(),
            seed: 7,
            results: json!({"b": 1, "a": f64::NAN.is_nan()}),
            checks: vec![Check::new("ok", true, "")],
        };
        let v = r.to_value();
        assert_eq!(v["seed"], 7);
        assert_eq!(v["tolerances"]["mass_tol"], 5e-3);
        assert_eq!(v["passed"], true);
        assert_eq!(r.to_string_pretty(), r.to_string_pretty());
        assert_eq!(num(f64::NEG_INFINITY), Value::Null);
    }
}
