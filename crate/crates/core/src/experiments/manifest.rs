//! Declarative experiment manifests (TOML).
//!
//! ```toml
//! experiment = "stationarity_suite"
//! replicas = 10000
//! seed = 7
//! dist = "geom:0.5"        # experiments with a `dist` or `alpha` parameter
//!
//! [params]
//! lambda = 1.0
//! t_list = [1.0, 3.0]
//!
//! [tolerances]
//! se_mult = 3.0
//!
//! [outputs]
//! report = "stationarity.json"
//! checks_csv = "stationarity.csv"
//! ```
//!
//! Keys are checked against the experiment's parameter struct; every unknown
//! key is reported at once.

use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

use super::{default_params, run_named, EstimateReport, Exec, EXPERIMENTS};
use crate::distributions::OffspringDistribution;
use crate::error::{Error, Result};

const TOP_KEYS: &[&str] = &["experiment", "dist", "params", "replicas", "seed", "tolerances", "outputs"];
const OUTPUT_KEYS: &[&str] = &["report", "checks_csv"];

/// A validated manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub experiment: String,
    /// Full parameter object, defaults filled in.
    pub params: Value,
    pub outputs: Outputs,
    /// Whether the manifest set `seed` itself.
    pub explicit_seed: bool,
}

/// Output paths, relative to the manifest's directory unless absolute.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Outputs {
    pub report: Option<PathBuf>,
    pub checks_csv: Option<PathBuf>,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

/// Overlays `patch` on `base`, recording keys that `base` does not have.
fn overlay(base: &mut Map<String, Value>, patch: &Map<String, Value>, prefix: &str, unknown: &mut Vec<String>) {
    for (k, v) in patch {
        match base.get_mut(k) {
            None => unknown.push(format!("{prefix}{k}")),
            Some(slot) => *slot = v.clone(),
        }
    }
}

impl Manifest {
    pub fn parse(text: &str) -> Result<Self> {
        let doc: toml::Table = text.parse().map_err(|e: toml::de::Error| bad(format!("manifest: {e}")))?;
        let doc = match serde_json::to_value(doc).map_err(|e| bad(e.to_string()))? {
            Value::Object(m) => m,
            _ => unreachable!("a TOML table maps to an object"),
        };
        let mut unknown: Vec<String> = doc.keys().filter(|k| !TOP_KEYS.contains(&k.as_str())).cloned().collect();
        let experiment = doc
            .get("experiment")
            .and_then(Value::as_str)
            .ok_or_else(|| bad("manifest: missing string key `experiment`"))?
            .to_string();
        if !EXPERIMENTS.contains(&experiment.as_str()) {
            return Err(bad(format!("manifest: unknown experiment {experiment:?}")));
        }
        let mut params = match default_params(&experiment)? {
            Value::Object(m) => m,
            _ => unreachable!("parameter structs serialize to objects"),
        };
        let table = |key: &str| -> Result<Option<&Map<String, Value>>> {
            match doc.get(key) {
                None => Ok(None),
                Some(Value::Object(m)) => Ok(Some(m)),
                Some(_) => Err(bad(format!("manifest: `{key}` must be a table"))),
            }
        };
        if let Some(m) = table("params")? {
            overlay(&mut params, m, "params.", &mut unknown);
        }
        if let Some(m) = table("tolerances")? {
            match params.get_mut("tolerances") {
                Some(Value::Object(t)) => overlay(t, m, "tolerances.", &mut unknown),
                _ => unknown.extend(m.keys().map(|k| format!("tolerances.{k}"))),
            }
        }
        if let Some(d) = doc.get("dist") {
            let s = d.as_str().ok_or_else(|| bad("manifest: `dist` must be a string"))?;
            let dist: OffspringDistribution<f64> = s.parse()?;
            if params.contains_key("dist") {
                params.insert("dist".into(), Value::String(s.to_string()));
            } else if let (Some(_), OffspringDistribution::Geometric(a)) = (params.get("alpha"), &dist) {
                params.insert("alpha".into(), Value::from(*a));
            } else {
                unknown.push("dist".into());
            }
        }
        for key in ["replicas", "seed"] {
            if let Some(v) = doc.get(key) {
                if v.as_u64().is_none() {
                    return Err(bad(format!("manifest: `{key}` must be a non-negative integer")));
                }
                let target = if params.contains_key(key) {
                    key
                } else if key == "replicas" && params.contains_key("sequences") {
                    "sequences"
                } else {
                    unknown.push(key.into());
                    continue;
                };
                params.insert(target.into(), v.clone());
            }
        }
        if doc.get("replicas").and_then(Value::as_u64) == Some(0) {
            return Err(bad("manifest: replicas must be positive"));
        }
        let mut outputs = Outputs::default();
        if let Some(m) = table("outputs")? {
            for (k, v) in m {
                let path = v.as_str().map(PathBuf::from);
                match (k.as_str(), path) {
                    ("report", Some(p)) => outputs.report = Some(p),
                    ("checks_csv", Some(p)) => outputs.checks_csv = Some(p),
                    (k, None) if OUTPUT_KEYS.contains(&k) => return Err(bad(format!("manifest: outputs.{k} must be a path"))),
                    _ => unknown.push(format!("outputs.{k}")),
                }
            }
        }
        if !unknown.is_empty() {
            return Err(bad(format!("manifest: unknown keys: {}", unknown.join(", "))));
        }
        Ok(Self {
            experiment,
            params: Value::Object(params),
            outputs,
            explicit_seed: doc.contains_key("seed"),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn run(&self, exec: Exec) -> Result<EstimateReport> {
        run_named(&self.experiment, self.params.clone(), exec)
    }

    /// Writes the requested outputs, resolving relative paths against `dir`.
    /// Returns the paths written.
    pub fn write_outputs(&self, report: &EstimateReport, dir: &Path) -> Result<Vec<PathBuf>> {
        let mut written = Vec::new();
        let files = [
            (&self.outputs.report, report.to_json() + "\n"),
            (&self.outputs.checks_csv, report.checks_csv()),
        ];
        for (path, body) in files {
            if let Some(p) = path {
                let full = dir.join(p);
                std::fs::write(&full, body).map_err(|e| bad(format!("{}: {e}", full.display())))?;
                written.push(full);
            }
        }
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fills_defaults_and_overrides() {
        let m = Manifest::parse(
            "experiment = \"heapable_probability\"\nreplicas = 50\nseed = 3\ndist = \"geom:0.5\"\n[params]\nn = 4\n",
        )
        .unwrap();
        assert_eq!(m.params["replicas"], 50);
        assert_eq!(m.params["seed"], 3);
        assert_eq!(m.params["n"], 4);
        assert_eq!(m.params["dist"], "geom:0.5");
    }

    #[test]
    fn lists_every_unknown_key() {
        let err = Manifest::parse("experiment = \"heapable_probability\"\ncolour = 1\n[params]\nsize = 2\n[tolerances]\nzz = 1\n")
            .unwrap_err()
            .to_string();
        for k in ["colour", "params.size", "tolerances.zz"] {
            assert!(err.contains(k), "{err}");
        }
    }

    #[test]
    fn rejects_zero_replicas() {
        assert!(Manifest::parse("experiment = \"heapable_probability\"\nreplicas = 0\n").is_err());
    }

    #[test]
    fn dist_sets_alpha_when_there_is_no_dist_field() {
        let m = Manifest::parse("experiment = \"stationarity_suite\"\ndist = \"geom:0.25\"\n").unwrap();
        assert_eq!(m.params["alpha"], 0.25);
        assert!(Manifest::parse("experiment = \"stationarity_suite\"\ndist = \"dirac:2\"\n").is_err());
    }
}
