//! Two estimators of the growth constant `c` in `E[R(n)] ~ c log n`.

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{map_replicas, parse_dist, require_replicas, Check, EstimateReport, Exec, SeedRecord};
use crate::error::{Error, Result};
use crate::heap_sort::{oracles, SortState};
use crate::stats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CSlopeTolerances {
    /// Slope estimate must lie in this closed range.
    pub range: Option<[f64; 2]>,
    /// With `rel_tol`: `|slope - target| <= rel_tol * target`.
    pub target: Option<f64>,
    pub rel_tol: Option<f64>,
    /// The bootstrap CI must lie strictly inside this open interval.
    pub ci_inside: Option<[f64; 2]>,
    pub ci_level: f64,
    /// Two-sided normal quantile for the joint interval of both estimators.
    pub agreement_z: Option<f64>,
    /// Informational comparison value.
    pub reference: Option<f64>,
}

impl Default for CSlopeTolerances {
    fn default() -> Self {
        Self {
            range: Some([1.8, 2.2]),
            target: None,
            rel_tol: None,
            ci_inside: None,
            ci_level: 0.95,
            agreement_z: Some(2.576),
            reference: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CSlopeParams {
    pub dist: String,
    pub n_grid: Vec<u64>,
    pub replicas: usize,
    pub seed: u64,
    pub bootstrap: usize,
    /// Companion `E[D_n + 1]` estimator; skipped when `d_replicas = 0`.
    pub d_n: u64,
    pub d_replicas: usize,
    pub tolerances: CSlopeTolerances,
}

impl Default for CSlopeParams {
    fn default() -> Self {
        Self {
            dist: "geom:0.5".into(),
            n_grid: vec![10_000, 100_000, 1_000_000],
            replicas: 100,
            seed: 1,
            bootstrap: 2000,
            d_n: 100_000,
            d_replicas: 1000,
            tolerances: CSlopeTolerances::default(),
        }
    }
}

/// Runs one sorted sequence of i.i.d. uniform labels to `grid.last()` and
/// returns `(R(n), D(n))` at each grid point.
fn prefix_run(
    dist: &crate::OffspringDistribution<f64>,
    grid: &[u64],
    track_dead: bool,
    rng: &mut crate::RandomStream,
) -> Result<Vec<(usize, usize)>> {
    let mut state = SortState::<f64>::counting(track_dead);
    let mut out = Vec::with_capacity(grid.len());
    let mut g = 0;
    let n_max = *grid.last().unwrap_or(&0);
    for i in 1..=n_max {
        let u: f64 = rng.gen();
        let k = dist.sample(rng);
        state.insert_next(u, k)?;
        while g < grid.len() && grid[g] == i {
            out.push((state.root_count(), if track_dead { state.leading_dead() } else { 0 }));
            g += 1;
        }
    }
    Ok(out)
}

fn check_grid(grid: &[u64]) -> Result<()> {
    if grid.is_empty() || grid[0] == 0 || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("grid must be non-empty, positive and increasing".into()));
    }
    Ok(())
}

/// Least-squares slope of mean `R(n)` against `log n`, with a bootstrap CI,
/// optionally cross-checked against the `E[D_n + 1]` estimator.
pub fn estimate_c_slope(p: &CSlopeParams, exec: Exec) -> Result<EstimateReport> {
    check_grid(&p.n_grid)?;
    if p.n_grid.len() < 2 {
        return Err(Error::InvalidParameter("a slope needs at least two grid points".into()));
    }
    require_replicas(p.replicas, 2)?;
    let dist = parse_dist(&p.dist)?;
    let seeds = SeedRecord::new(p.seed, "estimate_c_slope");
    let runs = map_replicas(p.replicas, exec, |r| prefix_run(&dist, &p.n_grid, false, &mut seeds.stream(r)))?;

    let logs: Vec<f64> = p.n_grid.iter().map(|&n| (n as f64).ln()).collect();
    let lbar = stats::mean(&logs);
    let sxx: f64 = logs.iter().map(|l| (l - lbar).powi(2)).sum();
    // The OLS slope of the mean curve is the mean of per-replica slopes.
    let slopes: Vec<f64> = runs
        .iter()
        .map(|run| run.iter().zip(&logs).map(|(&(r, _), l)| r as f64 * (l - lbar) / sxx).sum())
        .collect();
    let means: Vec<f64> = (0..p.n_grid.len())
        .map(|g| stats::mean(&runs.iter().map(|run| run[g].0 as f64).collect::<Vec<_>>()))
        .collect();
    let slope = stats::ols_slope(&logs, &means);
    let se = stats::std_error(&slopes);
    let boot = seeds.stream(usize::MAX);
    let ci = stats::bootstrap_mean_ci(&slopes, p.bootstrap.max(100), p.tolerances.ci_level, &boot);

    let mut report = EstimateReport::new("estimate_c_slope", p, p.replicas, seeds);
    report.estimate = slope;
    report.standard_error = Some(se);
    report.confidence_interval = Some([ci.0, ci.1]);
    let t = &p.tolerances;
    if let Some([lo, hi]) = t.range {
        report.checks.push(Check::within("slope in range", slope, lo, hi));
    }
    if let (Some(target), Some(rel)) = (t.target, t.rel_tol) {
        report.checks.push(Check::relative("slope near target", slope, target, rel));
    }
    if let Some([lo, hi]) = t.ci_inside {
        let mut c = Check::within("slope CI inside interval", ci.0, lo, hi);
        c.passed = ci.0 > lo && ci.1 < hi;
        c.note = Some(format!("CI [{}, {}] must lie in ({lo}, {hi})", ci.0, ci.1));
        report.checks.push(c);
    }
    let mut details = json!({
        "n_grid": p.n_grid,
        "mean_root_count": means,
        "slope_bootstrap_ci": [ci.0, ci.1],
    });
    if let Some(reference) = t.reference {
        details["reference"] = json!(reference);
        details["difference_from_reference"] = json!(slope - reference);
    }
    if p.d_replicas > 0 {
        let dp = CViaDParams {
            dist: p.dist.clone(),
            n: p.d_n,
            subgrid: Vec::new(),
            replicas: p.d_replicas,
            seed: p.seed,
            exact: false,
            tolerances: CViaDTolerances {
                target: None,
                rel_tol: None,
                monotone_se: None,
            },
        };
        let d = estimate_c_via_d(&dp, exec)?;
        let d_se = d.standard_error.unwrap_or(0.0);
        if let Some(z) = t.agreement_z {
            let half = z * (se * se + d_se * d_se).sqrt();
            report.checks.push(
                Check::within("slope and E[D_n+1] agree", slope - d.estimate, -half, half)
                    .with_note(format!("joint interval at z = {z}")),
            );
        }
        details["d_estimate"] = json!(d.estimate);
        details["d_standard_error"] = json!(d_se);
        details["d_n"] = json!(p.d_n);
    }
    report.details = details;
    Ok(report.finish())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CViaDTolerances {
    pub target: Option<f64>,
    pub rel_tol: Option<f64>,
    /// Consecutive means along the sub-grid may decrease by at most this many
    /// standard errors of the paired difference.
    pub monotone_se: Option<f64>,
}

impl Default for CViaDTolerances {
    fn default() -> Self {
        Self {
            target: Some(2.0),
            rel_tol: Some(0.1),
            monotone_se: Some(2.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CViaDParams {
    pub dist: String,
    pub n: u64,
    /// Extra sizes below `n` for the monotonicity report.
    pub subgrid: Vec<u64>,
    pub replicas: usize,
    pub seed: u64,
    /// Exact enumeration over label orders and lives (finite support, `n <= 7`).
    pub exact: bool,
    pub tolerances: CViaDTolerances,
}

impl Default for CViaDParams {
    fn default() -> Self {
        Self {
            dist: "geom:0.5".into(),
            n: 100_000,
            subgrid: vec![1_000, 10_000],
            replicas: 10_000,
            seed: 1,
            exact: false,
            tolerances: CViaDTolerances::default(),
        }
    }
}

/// Estimates `E[D_n + 1]`, which increases to `c`.
pub fn estimate_c_via_d(p: &CViaDParams, exec: Exec) -> Result<EstimateReport> {
    let dist = parse_dist(&p.dist)?;
    let seeds = SeedRecord::new(p.seed, "estimate_c_via_d");
    let t = &p.tolerances;
    if p.exact {
        let support = dist
            .finite_support()
            .ok_or_else(|| Error::InvalidParameter("exact mode needs a finite support".into()))?;
        if p.n > 7 {
            return Err(Error::TooLarge { n: p.n as usize, max: 7 });
        }
        let e = oracles::exact_expectation(p.n as usize, &support, |s| s.leading_dead() + 1)?;
        let mut report = EstimateReport::new("estimate_c_via_d", p, 0, seeds);
        report.estimate = e;
        if let (Some(target), Some(rel)) = (t.target, t.rel_tol) {
            report.checks.push(Check::relative("E[D_n+1] near target", e, target, rel));
        }
        report.details = json!({ "method": "exact enumeration" });
        return Ok(report.finish());
    }
    require_replicas(p.replicas, 2)?;
    let mut grid: Vec<u64> = p.subgrid.iter().copied().filter(|&m| m < p.n).collect();
    grid.push(p.n);
    check_grid(&grid)?;
    let runs = map_replicas(p.replicas, exec, |r| prefix_run(&dist, &grid, true, &mut seeds.stream(r)))?;
    let column = |g: usize| -> Vec<f64> { runs.iter().map(|run| run[g].1 as f64 + 1.0).collect() };
    let last = column(grid.len() - 1);
    let est = stats::mean(&last);
    let se = stats::std_error(&last);
    let means: Vec<f64> = (0..grid.len()).map(|g| stats::mean(&column(g))).collect();

    let mut report = EstimateReport::new("estimate_c_via_d", p, p.replicas, seeds);
    report.estimate = est;
    report.standard_error = Some(se);
    let z = stats::normal_quantile(0.975);
    report.confidence_interval = Some([est - z * se, est + z * se]);
    if let (Some(target), Some(rel)) = (t.target, t.rel_tol) {
        report.checks.push(Check::relative("E[D_n+1] near target", est, target, rel));
    }
    if let Some(k) = t.monotone_se {
        for g in 1..grid.len() {
            let (a, b) = (column(g - 1), column(g));
            let diff: Vec<f64> = b.iter().zip(&a).map(|(x, y)| x - y).collect();
            let (m, s) = (stats::mean(&diff), stats::std_error(&diff));
            report.checks.push(Check::within(
                format!("E[D] non-decreasing {}->{}", grid[g - 1], grid[g]),
                m,
                -k * s,
                f64::INFINITY,
            ));
        }
    }
    report.details = json!({ "grid": grid, "mean_d_plus_one": means });
    Ok(report.finish())
}
