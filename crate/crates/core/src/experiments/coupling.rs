//! Comparison of offspring laws with equal means, and the probability that a
//! random sequence is heapable.

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{map_replicas, parse_dist, require_replicas, Check, EstimateReport, Exec, SeedRecord};
use crate::distributions::OffspringDistribution;
use crate::error::{Error, Result};
use crate::heap_sort::{oracles, root_count, SortState};
use crate::stats;

/// Slack for floating-point sums in exact mode.
const EXACT_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CouplingParams {
    /// Fixed label sequence; when absent, `sequences` random ones are drawn.
    pub labels: Option<Vec<f64>>,
    pub sequences: usize,
    /// Random sequences have a uniform length in `1..=max_n`.
    pub max_n: usize,
    pub mu: String,
    /// Must be supported on `{l, l + 1}` and have the mean of `mu`.
    pub mu_prime: String,
    pub exact: bool,
    /// Monte Carlo draws per sequence when `exact` is false.
    pub replicas: usize,
    pub seed: u64,
    /// Monte Carlo mode: the paired mean difference may exceed zero by this
    /// many standard errors.
    pub se_mult: f64,
}

impl Default for CouplingParams {
    fn default() -> Self {
        Self {
            labels: None,
            sequences: 100,
            max_n: 8,
            mu: "table:1=0.5,3=0.5".into(),
            mu_prime: "dirac:2".into(),
            exact: true,
            replicas: 10_000,
            seed: 1,
            se_mult: 3.0,
        }
    }
}

fn check_pair(mu: &OffspringDistribution<f64>, mu_prime: &OffspringDistribution<f64>) -> Result<()> {
    let (m, mp) = (mu.mean(), mu_prime.mean());
    if (m - mp).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!("means differ: {m} vs {mp}")));
    }
    let l = mp.floor() as u32;
    let support = mu_prime
        .finite_support()
        .ok_or_else(|| Error::InvalidParameter("mu_prime needs a finite support".into()))?;
    if support.iter().any(|&(k, _)| k != l && k != l + 1) {
        return Err(Error::InvalidParameter(format!("mu_prime must be supported on {{{l}, {}}}", l + 1)));
    }
    Ok(())
}

/// Checks `E[R_V'] <= E[R_V]` on fixed or random label sequences.
pub fn coupling_inequality_check(p: &CouplingParams, exec: Exec) -> Result<EstimateReport> {
    let mu = parse_dist(&p.mu)?;
    let mu_prime = parse_dist(&p.mu_prime)?;
    check_pair(&mu, &mu_prime)?;
    let seeds = SeedRecord::new(p.seed, "coupling_inequality_check");
    let count = match &p.labels {
        Some(_) => 1,
        None => p.sequences,
    };
    if count == 0 || p.max_n == 0 {
        return Err(Error::InvalidParameter("need at least one sequence".into()));
    }
    let max_n = p.labels.as_ref().map_or(p.max_n, Vec::len);
    if p.exact {
        if max_n > 8 {
            return Err(Error::TooLarge { n: max_n, max: 8 });
        }
        if mu.finite_support().is_none() {
            return Err(Error::InvalidParameter("exact mode needs mu with finite support".into()));
        }
    } else {
        require_replicas(p.replicas, 2)?;
    }
    let labels_for = |r: usize| -> Vec<f64> {
        match &p.labels {
            Some(l) => l.clone(),
            None => {
                let mut rng = seeds.stream(r);
                let n = rng.gen_range(1..=p.max_n);
                (0..n).map(|_| rng.gen::<f64>()).collect()
            }
        }
    };
    // (labels, E[R_V'], E[R_V], se of the difference)
    let rows = map_replicas(count, exec, |r| {
        let labels = labels_for(r);
        if p.exact {
            let s = mu.finite_support().expect("checked");
            let sp = mu_prime.finite_support().expect("checked");
            let ev = oracles::expected_root_count(&labels, &s)?;
            let evp = oracles::expected_root_count(&labels, &sp)?;
            Ok((labels, evp, ev, 0.0))
        } else {
            let mut rng = seeds.stream(r).child(1);
            let mut diffs = Vec::with_capacity(p.replicas);
            let (mut a, mut b) = (0.0, 0.0);
            for _ in 0..p.replicas {
                let v: Vec<(f64, u32)> = labels.iter().map(|&u| (u, mu.sample(&mut rng))).collect();
                let vp: Vec<(f64, u32)> = labels.iter().map(|&u| (u, mu_prime.sample(&mut rng))).collect();
                let (rv, rvp) = (root_count(&v)? as f64, root_count(&vp)? as f64);
                a += rvp;
                b += rv;
                diffs.push(rvp - rv);
            }
            let n = p.replicas as f64;
            Ok((labels, a / n, b / n, stats::std_error(&diffs)))
        }
    })?;

    let slack = |se: f64| if p.exact { EXACT_SLACK } else { p.se_mult * se };
    let violations = rows.iter().filter(|(_, evp, ev, se)| evp - ev > slack(*se)).count();
    let worst = rows.iter().map(|(_, evp, ev, _)| evp - ev).fold(f64::NEG_INFINITY, f64::max);
    let mut report = EstimateReport::new("coupling_inequality_check", p, count, seeds);
    report.estimate = worst;
    report.checks.push(
        Check::within("sequences with E[R_V'] > E[R_V]", violations as f64, 0.0, 0.0).with_note(if p.exact {
            "exact enumeration over life vectors".to_string()
        } else {
            format!("paired Monte Carlo, {} standard errors", p.se_mult)
        }),
    );
    report.details = json!({
        "method": if p.exact { "exact" } else { "monte carlo" },
        "max_difference": worst,
        "sequences": rows.iter().map(|(l, evp, ev, se)| json!({
            "labels": l,
            "mean_prime": evp,
            "mean": ev,
            "difference_se": se,
        })).collect::<Vec<_>>(),
    });
    Ok(report.finish())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeapableTolerances {
    /// One-sided normal quantile of the Wilson upper bound compared to `1 / n`.
    pub z: Option<f64>,
}

impl Default for HeapableTolerances {
    fn default() -> Self {
        Self { z: Some(2.326) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeapableParams {
    pub dist: String,
    pub n: usize,
    pub replicas: usize,
    pub seed: u64,
    pub tolerances: HeapableTolerances,
}

impl Default for HeapableParams {
    fn default() -> Self {
        Self {
            dist: "dirac:2".into(),
            n: 20,
            replicas: 1_000_000,
            seed: 1,
            tolerances: HeapableTolerances::default(),
        }
    }
}

/// Whether `n` uniform labels fit in one heap; stops at the second root.
fn heapable(dist: &OffspringDistribution<f64>, n: usize, rng: &mut crate::RandomStream) -> Result<bool> {
    let mut s = SortState::<f64>::counting(false);
    for _ in 0..n {
        let u: f64 = rng.gen();
        s.insert_next(u, dist.sample(rng))?;
        if s.root_count() > 1 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Monte Carlo estimate of `P{R(n) = 1}` with a Wilson interval.
pub fn heapable_probability(p: &HeapableParams, exec: Exec) -> Result<EstimateReport> {
    require_replicas(p.replicas, 2)?;
    if p.n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    let dist = parse_dist(&p.dist)?;
    let seeds = SeedRecord::new(p.seed, "heapable_probability");
    let hits = map_replicas(p.replicas, exec, |r| heapable(&dist, p.n, &mut seeds.stream(r)))?;
    let k = hits.iter().filter(|&&h| h).count() as u64;
    let n = p.replicas as u64;
    let est = k as f64 / n as f64;
    let mut report = EstimateReport::new("heapable_probability", p, p.replicas, seeds);
    report.estimate = est;
    report.standard_error = Some((est * (1.0 - est) / n as f64).sqrt());
    let (lo, hi) = stats::wilson_interval(k, n, stats::normal_quantile(0.975));
    report.confidence_interval = Some([lo, hi]);
    let bound = 1.0 / p.n as f64;
    let mut details = json!({
        "heapable": k,
        "bound_one_over_n": bound,
        "n_squared_times_estimate": est * (p.n * p.n) as f64,
    });
    if let Some(z) = p.tolerances.z {
        let (_, upper) = stats::wilson_interval(k, n, z);
        details["wilson_upper"] = json!(upper);
        report.checks.push(
            Check::within("Wilson upper bound <= 1/n", upper, 0.0, bound + EXACT_SLACK)
                .with_note(format!("one-sided, z = {z}")),
        );
    }
    report.details = details;
    Ok(report.finish())
}
