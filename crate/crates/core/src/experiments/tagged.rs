//! The tagged leftmost descendant and the trees reaching the origin.

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{map_replicas, require_replicas, Check, EstimateReport, Exec, SeedRecord};
use crate::error::{Error, Result};
use crate::geometric::{track_tagged_particle, trees_crossing_origin, TaggedWindow};
use crate::stats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaggedTolerances {
    /// Gap means are tested at this time against `1 / (lambda + (1 - alpha) t)`.
    pub gap_time: Option<f64>,
    pub gap_se: f64,
    /// Pairwise gap correlations must satisfy `|rho| < corr_k / sqrt(N)`.
    pub corr_k: Option<f64>,
    /// `E[X(t) - X(0)]` is tested at this time against the drift formula.
    pub drift_time: Option<f64>,
    pub drift_se: f64,
    /// `E[X(t) - X(0)]` at this time is compared to `alpha / (lambda (1 - alpha))`.
    pub limit_time: Option<f64>,
    pub limit_rel: f64,
}

impl Default for TaggedTolerances {
    fn default() -> Self {
        Self {
            gap_time: Some(4.0),
            gap_se: 3.0,
            corr_k: Some(3.0),
            drift_time: Some(50.0),
            drift_se: 3.0,
            limit_time: Some(200.0),
            limit_rel: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaggedParams {
    pub lambda: f64,
    pub alpha: f64,
    pub t_max: f64,
    /// Must contain 0 and every time named in the tolerances.
    pub sample_times: Vec<f64>,
    pub m_gaps: usize,
    pub replicas: usize,
    pub seed: u64,
    pub window: TaggedWindow<f64>,
    pub tolerances: TaggedTolerances,
}

impl Default for TaggedParams {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            alpha: 0.5,
            t_max: 200.0,
            sample_times: vec![0.0, 1.0, 4.0, 10.0, 50.0, 100.0, 200.0],
            m_gaps: 3,
            replicas: 10_000,
            seed: 1,
            window: TaggedWindow::default(),
            tolerances: TaggedTolerances::default(),
        }
    }
}

fn time_index(times: &[f64], t: f64) -> Result<usize> {
    times
        .iter()
        .position(|&s| s == t)
        .ok_or_else(|| Error::InvalidParameter(format!("time {t} is not in sample_times")))
}

/// Gap means and drift of the tagged particle against their closed forms.
pub fn tagged_particle(p: &TaggedParams, exec: Exec) -> Result<EstimateReport> {
    require_replicas(p.replicas, 2)?;
    let tol = &p.tolerances;
    let i0 = time_index(&p.sample_times, 0.0)?;
    let gi = tol.gap_time.map(|t| time_index(&p.sample_times, t)).transpose()?;
    let di = tol.drift_time.map(|t| time_index(&p.sample_times, t)).transpose()?;
    let li = tol.limit_time.map(|t| time_index(&p.sample_times, t)).transpose()?;
    let seeds = SeedRecord::new(p.seed, "tagged_particle");
    let runs = map_replicas(p.replicas, exec, |r| {
        track_tagged_particle(p.lambda, p.alpha, p.t_max, &p.sample_times, p.m_gaps, p.window, &seeds.stream(r))
    })?;

    let (lambda, alpha) = (p.lambda, p.alpha);
    let drift = |t: f64| alpha * t / (lambda * (lambda + (1.0 - alpha) * t));
    let displacement = |i: usize| -> Vec<f64> { runs.iter().map(|run| run.x[i] - run.x[i0]).collect() };
    let mean_drift: Vec<f64> = (0..p.sample_times.len()).map(|i| stats::mean(&displacement(i))).collect();
    let mut report = EstimateReport::new("tagged_particle", p, p.replicas, seeds);
    let mut details = json!({
        "sample_times": p.sample_times,
        "mean_displacement": mean_drift,
        "drift_formula": p.sample_times.iter().map(|&t| drift(t)).collect::<Vec<_>>(),
        "max_expansions": runs.iter().map(|r| r.expansions).max(),
    });
    if let Some(i) = gi {
        let t = p.sample_times[i];
        let target = 1.0 / (lambda + (1.0 - alpha) * t);
        let gaps: Vec<Vec<f64>> = (0..p.m_gaps)
            .map(|j| runs.iter().map(|run| run.gaps[i][j]).collect())
            .collect();
        let mut means = Vec::new();
        for (j, g) in gaps.iter().enumerate() {
            let m = stats::mean(g);
            means.push(m);
            report.checks.push(Check::near(
                format!("gap {} mean at t = {t}", j + 1),
                m,
                target,
                stats::std_error(g),
                tol.gap_se,
            ));
        }
        if let Some(k) = tol.corr_k {
            let bound = k / (p.replicas as f64).sqrt();
            for a in 0..p.m_gaps {
                for b in a + 1..p.m_gaps {
                    let rho = stats::correlation(&gaps[a], &gaps[b]);
                    report.checks.push(Check::within(
                        format!("gap {} / gap {} correlation at t = {t}", a + 1, b + 1),
                        rho,
                        -bound,
                        bound,
                    ));
                }
            }
        }
        details["gap_means"] = json!(means);
        details["gap_target"] = json!(target);
    }
    if let Some(i) = di {
        let t = p.sample_times[i];
        let d = displacement(i);
        report.checks.push(Check::near(
            format!("E[X(t) - X(0)] at t = {t}"),
            stats::mean(&d),
            drift(t),
            stats::std_error(&d),
            tol.drift_se,
        ));
    }
    if let (Some(i), true) = (li, alpha < 1.0) {
        let t = p.sample_times[i];
        let limit = alpha / (lambda * (1.0 - alpha));
        let d = displacement(i);
        let m = stats::mean(&d);
        report.estimate = m;
        report.standard_error = Some(stats::std_error(&d));
        report
            .checks
            .push(Check::relative(format!("E[X(t) - X(0)] at t = {t} near its limit"), m, limit, tol.limit_rel));
    } else {
        report.estimate = *mean_drift.last().unwrap_or(&f64::NAN);
    }
    report.details = details;
    Ok(report.finish())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreesCrossingParams {
    pub lambda: f64,
    pub alpha: f64,
    pub t_max: f64,
    pub widths: Vec<f64>,
    /// Extent of the window right of the origin.
    pub w_right: f64,
    pub replicas: usize,
    pub seed: u64,
}

impl Default for TreesCrossingParams {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            alpha: 0.5,
            t_max: 50.0,
            widths: vec![5.0, 10.0, 20.0],
            w_right: 20.0,
            replicas: 2000,
            seed: 1,
        }
    }
}

/// Mean number of sources left of the origin whose tree reaches it, for each
/// window width. Reported only.
pub fn trees_crossing(p: &TreesCrossingParams, exec: Exec) -> Result<EstimateReport> {
    require_replicas(p.replicas, 2)?;
    if p.widths.is_empty() {
        return Err(Error::InvalidParameter("widths must be non-empty".into()));
    }
    let seeds = SeedRecord::new(p.seed, "trees_crossing");
    let counts = map_replicas(p.replicas, exec, |r| {
        let base = seeds.stream(r);
        p.widths
            .iter()
            .enumerate()
            .map(|(i, &w)| Ok(trees_crossing_origin(p.lambda, p.alpha, p.t_max, w, p.w_right, &base.child(i as u64))? as f64))
            .collect::<Result<Vec<_>>>()
    })?;
    let per_width: Vec<(f64, f64)> = (0..p.widths.len())
        .map(|i| {
            let xs: Vec<f64> = counts.iter().map(|c| c[i]).collect();
            (stats::mean(&xs), stats::std_error(&xs))
        })
        .collect();
    let mut report = EstimateReport::new("trees_crossing", p, p.replicas, seeds);
    let (m, se) = *per_width.last().expect("non-empty");
    report.estimate = m;
    report.standard_error = Some(se);
    report.details = json!({
        "widths": p.widths,
        "mean": per_width.iter().map(|x| x.0).collect::<Vec<_>>(),
        "standard_error": per_width.iter().map(|x| x.1).collect::<Vec<_>>(),
    });
    Ok(report.finish())
}
