//! Reproducible Monte Carlo experiments.
//!
//! Every runner takes a parameter struct (serializable, with defaults at full
//! scale), draws replica `r` from stream `stream_id(tag(name), r)` of the
//! master seed, and reduces the per-replica results serially in replica order.
//! Serial and parallel executions therefore produce identical reports, and a
//! report can be re-run from the parameters it carries.

mod c_estimators;
mod coupling;
mod halfplane;
pub mod manifest;
mod stationarity;
mod tagged;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::OffspringDistribution;
use crate::error::{Error, Result};
use crate::rng::{self, RandomStream};

pub use c_estimators::{estimate_c_slope, estimate_c_via_d, CSlopeParams, CSlopeTolerances, CViaDParams, CViaDTolerances};
pub use coupling::{
    coupling_inequality_check, heapable_probability, CouplingParams, HeapableParams, HeapableTolerances,
};
pub use halfplane::{halfplane_fixation, HalfplaneParams, HalfplaneTolerances};
pub use stationarity::{stationarity_suite, StationarityParams, StationarityTolerances};
pub use tagged::{tagged_particle, trees_crossing, TaggedParams, TaggedTolerances, TreesCrossingParams};

/// How replicas are scheduled. Results do not depend on the choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    Serial,
    /// On the current rayon pool.
    #[default]
    Parallel,
}

/// Runs `f` on replicas `0..n`, returning results in replica order.
pub fn map_replicas<T, F>(n: usize, exec: Exec, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    match exec {
        Exec::Serial => (0..n).map(f).collect(),
        Exec::Parallel => (0..n).into_par_iter().map(f).collect(),
    }
}

/// How the per-replica streams were derived.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub master_seed: u64,
    pub namespace: String,
    pub namespace_tag: u64,
    pub derivation: String,
}

impl SeedRecord {
    fn new(master_seed: u64, namespace: &str) -> Self {
        Self {
            master_seed,
            namespace: namespace.to_string(),
            namespace_tag: rng::tag(namespace),
            derivation: "replica r uses ChaCha8(master_seed) on stream splitmix64(splitmix64(namespace_tag) ^ r)".into(),
        }
    }

    /// The stream of replica `r`.
    pub fn stream(&self, r: usize) -> RandomStream {
        RandomStream::for_replica(self.master_seed, self.namespace_tag, r as u64)
    }
}

/// One tolerance check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// Acceptance region `[lower, upper]`.
    pub lower: f64,
    pub upper: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub note: Option<String>,
}

impl Check {
    pub fn within(name: impl Into<String>, value: f64, lower: f64, upper: f64) -> Self {
        Self {
            name: name.into(),
            value,
            lower,
            upper,
            passed: value >= lower && value <= upper,
            note: None,
        }
    }

    /// `|value - target| <= k * se`.
    pub fn near(name: impl Into<String>, value: f64, target: f64, se: f64, k: f64) -> Self {
        Self::within(name, value, target - k * se, target + k * se).with_note(format!("target {target}, {k} standard errors"))
    }

    /// `|value - target| <= rel * |target|`.
    pub fn relative(name: impl Into<String>, value: f64, target: f64, rel: f64) -> Self {
        let d = rel * target.abs();
        Self::within(name, value, target - d, target + d).with_note(format!("target {target}, relative tolerance {rel}"))
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

/// Result of one experiment run. Contains no wall-clock data, so re-runs are
/// byte-identical; timing is reported separately by the caller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub experiment: String,
    pub parameters: serde_json::Value,
    pub estimate: f64,
    pub standard_error: Option<f64>,
    pub confidence_interval: Option<[f64; 2]>,
    pub replicas: usize,
    pub seeds: SeedRecord,
    pub checks: Vec<Check>,
    pub details: serde_json::Value,
    pub passed: bool,
}

impl EstimateReport {
    fn new<P: Serialize>(experiment: &str, params: &P, replicas: usize, seeds: SeedRecord) -> Self {
        Self {
            experiment: experiment.to_string(),
            parameters: serde_json::to_value(params).expect("parameters serialize"),
            estimate: f64::NAN,
            standard_error: None,
            confidence_interval: None,
            replicas,
            seeds,
            checks: Vec::new(),
            details: serde_json::Value::Null,
            passed: false,
        }
    }

    fn finish(mut self) -> Self {
        self.passed = self.checks.iter().all(|c| c.passed);
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// One CSV row per check: `experiment,check,value,lower,upper,passed`.
    pub fn checks_csv(&self) -> String {
        let mut out = String::from("experiment,check,value,lower,upper,passed\n");
        for c in &self.checks {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                self.experiment, c.name, c.value, c.lower, c.upper, c.passed
            ));
        }
        out
    }

    /// Re-runs the experiment from the parameters stored in the report.
    pub fn rerun(&self, exec: Exec) -> Result<EstimateReport> {
        run_named(&self.experiment, self.parameters.clone(), exec)
    }
}

/// Names accepted by [`run_named`].
pub const EXPERIMENTS: &[&str] = &[
    "estimate_c_slope",
    "estimate_c_via_d",
    "stationarity_suite",
    "halfplane_fixation",
    "coupling_inequality_check",
    "heapable_probability",
    "tagged_particle",
    "trees_crossing",
];

/// Runs an experiment from a JSON parameter object.
pub fn run_named(name: &str, params: serde_json::Value, exec: Exec) -> Result<EstimateReport> {
    fn parse<P: serde::de::DeserializeOwned>(v: serde_json::Value) -> Result<P> {
        serde_json::from_value(v).map_err(|e| Error::InvalidParameter(e.to_string()))
    }
    match name {
        "estimate_c_slope" => estimate_c_slope(&parse(params)?, exec),
        "estimate_c_via_d" => estimate_c_via_d(&parse(params)?, exec),
        "stationarity_suite" => stationarity_suite(&parse(params)?, exec),
        "halfplane_fixation" => halfplane_fixation(&parse(params)?, exec),
        "coupling_inequality_check" => coupling_inequality_check(&parse(params)?, exec),
        "heapable_probability" => heapable_probability(&parse(params)?, exec),
        "tagged_particle" => tagged_particle(&parse(params)?, exec),
        "trees_crossing" => trees_crossing(&parse(params)?, exec),
        _ => Err(Error::InvalidParameter(format!("unknown experiment {name:?}"))),
    }
}

/// Default parameters of an experiment as JSON.
pub fn default_params(name: &str) -> Result<serde_json::Value> {
    let v = match name {
        "estimate_c_slope" => serde_json::to_value(CSlopeParams::default()),
        "estimate_c_via_d" => serde_json::to_value(CViaDParams::default()),
        "stationarity_suite" => serde_json::to_value(StationarityParams::default()),
        "halfplane_fixation" => serde_json::to_value(HalfplaneParams::default()),
        "coupling_inequality_check" => serde_json::to_value(CouplingParams::default()),
        "heapable_probability" => serde_json::to_value(HeapableParams::default()),
        "tagged_particle" => serde_json::to_value(TaggedParams::default()),
        "trees_crossing" => serde_json::to_value(TreesCrossingParams::default()),
        _ => return Err(Error::InvalidParameter(format!("unknown experiment {name:?}"))),
    };
    Ok(v.expect("defaults serialize"))
}

fn parse_dist(s: &str) -> Result<OffspringDistribution<f64>> {
    s.parse()
}

fn require_replicas(n: usize, min: usize) -> Result<()> {
    if n < min {
        Err(Error::InvalidParameter(format!("replicas = {n}, need at least {min}")))
    } else {
        Ok(())
    }
}
