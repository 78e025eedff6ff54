//! Stationarity of the particle and root processes under the stationary
//! boundary in the geometric case.

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{map_replicas, require_replicas, Check, EstimateReport, Exec, SeedRecord};
use crate::distributions::{sample_homogeneous, sample_marked_ppp, OffspringDistribution, Rect, SinkIntensity};
use crate::error::{Error, Result};
use crate::hammersley_process::{simulate_on_atoms, Horizon, Source, SourcesSinks};
use crate::rng::RandomStream;
use crate::root_process::{evolve, RootConfiguration, RootSource};
use crate::stats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StationarityTolerances {
    /// Mean tests pass within this many standard errors.
    pub se_mult: f64,
    /// Accepted range of variance / mean for Poisson counts.
    pub var_ratio: [f64; 2],
    /// Family-wise level of the chi-square tests (Bonferroni-split).
    pub level: f64,
}

impl Default for StationarityTolerances {
    fn default() -> Self {
        Self {
            se_mult: 3.0,
            var_ratio: [0.9, 1.1],
            level: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StationarityParams {
    pub lambda: f64,
    pub alpha: f64,
    pub t_list: Vec<f64>,
    pub replicas: usize,
    pub seed: u64,
    /// Sub-intervals for the spatial and root-height partitions.
    pub bins: usize,
    /// Particle counts are taken on `[0, x_len]`.
    pub x_len: f64,
    /// Width reached by the root process.
    pub root_x_max: f64,
    /// Root heights are counted on `[root_lower * t, t]`.
    pub root_lower: f64,
    pub tolerances: StationarityTolerances,
}

impl Default for StationarityParams {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            alpha: 0.5,
            t_list: vec![1.0, 3.0],
            replicas: 10_000,
            seed: 1,
            bins: 5,
            x_len: 1.0,
            root_x_max: 2.0,
            root_lower: 0.1,
            tolerances: StationarityTolerances::default(),
        }
    }
}

struct ParticleSample {
    count: u64,
    bins: Vec<u64>,
    lives: Option<u64>,
}

struct RootSample {
    count: u64,
    bins: Vec<u64>,
}

fn particle_side(p: &StationarityParams, t: f64, dist: &OffspringDistribution<f64>, rng: &mut RandomStream) -> Result<ParticleSample> {
    let horizon = Horizon::new(0.0, p.x_len, t)?;
    let atoms = sample_marked_ppp(&horizon.rect(), dist, rng);
    let sources: Vec<Source<f64>> = sample_homogeneous(p.lambda, 0.0, p.x_len, rng)
        .into_iter()
        .map(|label| Source { label, lives: dist.sample(rng) })
        .collect();
    // With lambda = 0, sinks below the first atom meet no particle.
    let lo = if p.lambda > 0.0 { 0.0 } else { atoms.first().map_or(t, |a| a.time) };
    let sinks = SinkIntensity::new(p.lambda, p.alpha)?.sample(lo, t, rng);
    let sim = simulate_on_atoms(horizon, &atoms, &SourcesSinks::new(sources, &sinks), &[t])?;
    let particles = &sim.snapshots[0].particles;
    let mut bins = vec![0u64; p.bins];
    for &(u, _) in particles {
        let b = ((u / p.x_len * p.bins as f64) as usize).min(p.bins - 1);
        bins[b] += 1;
    }
    let lives = (!particles.is_empty()).then(|| u64::from(particles[rng.gen_range(0..particles.len())].1));
    Ok(ParticleSample {
        count: particles.len() as u64,
        bins,
        lives,
    })
}

fn root_side(p: &StationarityParams, t: f64, dist: &OffspringDistribution<f64>, rng: &mut RandomStream) -> Result<RootSample> {
    let intensity = SinkIntensity::new(p.lambda, p.alpha)?;
    let a = p.root_lower * t;
    let rect = Rect::new(-p.root_x_max, 0.0, 0.0, t)?;
    let atoms: Vec<_> = sample_marked_ppp(&rect, dist, rng)
        .into_iter()
        .filter(|x| x.label < 0.0)
        .collect();
    let sources: Vec<RootSource<f64>> = sample_homogeneous(p.lambda, -p.root_x_max, 0.0, rng)
        .into_iter()
        .filter(|&x| x < 0.0)
        .map(|position| RootSource { position, lives: dist.sample(rng) })
        .collect();
    // Roots below every atom height and below the counting window are never
    // touched or counted.
    let lo = if p.lambda > 0.0 {
        0.0
    } else {
        atoms.iter().map(|x| x.time).fold(a, f64::min)
    };
    let init = RootConfiguration::from_heights(&intensity.sample(lo, t, rng), t)?;
    let out = evolve(&init, &sources, &atoms, p.root_x_max, t, &[])?;
    let cfg = out.final_config;
    let total = intensity.mass(a, t);
    let step = total / p.bins as f64;
    let mut bins = Vec::with_capacity(p.bins);
    let mut lo_edge = a;
    for b in 0..p.bins {
        let hi_edge = if b + 1 == p.bins { t } else { intensity.quantile(a, step * (b + 1) as f64) };
        bins.push(cfg.heights().iter().filter(|&&h| h >= lo_edge && h < hi_edge).count() as u64);
        lo_edge = hi_edge;
    }
    Ok(RootSample {
        count: cfg.count_in(a, t) as u64,
        bins,
    })
}

fn pooled(samples: &[Vec<u64>]) -> Vec<u64> {
    samples.iter().flatten().copied().collect()
}

/// Runs the particle-count, lives and root-height checks at every `t`.
pub fn stationarity_suite(p: &StationarityParams, exec: Exec) -> Result<EstimateReport> {
    require_replicas(p.replicas, 2)?;
    if !(p.alpha > 0.0 && p.alpha <= 1.0) || p.lambda < 0.0 || p.bins == 0 || p.t_list.is_empty() {
        return Err(Error::InvalidParameter("need 0 < alpha <= 1, lambda >= 0, bins > 0, t_list".into()));
    }
    if !(p.root_lower > 0.0 && p.root_lower < 1.0) && p.lambda == 0.0 {
        return Err(Error::InvalidParameter("lambda = 0 needs 0 < root_lower < 1".into()));
    }
    let dist = OffspringDistribution::geometric(p.alpha)?;
    let intensity = SinkIntensity::new(p.lambda, p.alpha)?;
    let seeds = SeedRecord::new(p.seed, "stationarity_suite");
    let per_replica = map_replicas(p.replicas, exec, |r| {
        let base = seeds.stream(r);
        p.t_list
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let h = particle_side(p, t, &dist, &mut base.child(2 * i as u64))?;
                let q = root_side(p, t, &dist, &mut base.child(2 * i as u64 + 1))?;
                Ok((h, q))
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let tol = &p.tolerances;
    let chi_tests_per_t = if p.alpha < 1.0 { 5 } else { 4 };
    let bonferroni = tol.level / (chi_tests_per_t * p.t_list.len()) as f64;
    let mut checks = Vec::new();
    let mut details = Vec::new();
    let chi = |name: String, test: stats::ChiSquare| {
        Check::within(name, test.p_value, bonferroni, 1.0)
            .with_note(format!("chi-square {:.3} on {} dof", test.statistic, test.dof))
    };
    let push_counts = |checks: &mut Vec<Check>, label: String, counts: &[u64], target: f64| {
        let xs: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
        let (m, se, v) = (stats::mean(&xs), stats::std_error(&xs), stats::variance(&xs));
        checks.push(Check::near(format!("{label} mean"), m, target, se, tol.se_mult));
        checks.push(Check::within(format!("{label} variance/mean"), v / m, tol.var_ratio[0], tol.var_ratio[1]));
        checks.push(chi(format!("{label} Poisson fit"), stats::poisson_gof(counts, target)));
        (m, v / m)
    };
    for (i, &t) in p.t_list.iter().enumerate() {
        let hs: Vec<&ParticleSample> = per_replica.iter().map(|v| &v[i].0).collect();
        let qs: Vec<&RootSample> = per_replica.iter().map(|v| &v[i].1).collect();

        let density = p.lambda + (1.0 - p.alpha) * t;
        let counts: Vec<u64> = hs.iter().map(|h| h.count).collect();
        let (hm, hr) = push_counts(&mut checks, format!("t={t} particle count"), &counts, density * p.x_len);
        let bins = pooled(&hs.iter().map(|h| h.bins.clone()).collect::<Vec<_>>());
        checks.push(chi(
            format!("t={t} particle sub-interval Poisson fit"),
            stats::poisson_gof(&bins, density * p.x_len / p.bins as f64),
        ));
        let adjacent: Vec<f64> = (1..p.bins)
            .map(|b| {
                let x: Vec<f64> = hs.iter().map(|h| h.bins[b - 1] as f64).collect();
                let y: Vec<f64> = hs.iter().map(|h| h.bins[b] as f64).collect();
                stats::correlation(&x, &y)
            })
            .collect();
        if p.alpha < 1.0 {
            let lives: Vec<u64> = hs.iter().filter_map(|h| h.lives).collect();
            checks.push(chi(format!("t={t} remaining lives geometric"), stats::geometric_gof(&lives, p.alpha)));
        }

        let a = p.root_lower * t;
        let mass = intensity.mass(a, t);
        let rcounts: Vec<u64> = qs.iter().map(|q| q.count).collect();
        let (rm, rr) = push_counts(&mut checks, format!("t={t} roots in [{}t, t]", p.root_lower), &rcounts, mass);
        let rbins = pooled(&qs.iter().map(|q| q.bins.clone()).collect::<Vec<_>>());
        checks.push(chi(
            format!("t={t} root equal-mass bins Poisson fit"),
            stats::poisson_gof(&rbins, mass / p.bins as f64),
        ));
        details.push(json!({
            "t": t,
            "particle_density": density,
            "particle_mean": hm,
            "particle_var_ratio": hr,
            "adjacent_bin_correlation": adjacent,
            "root_window": [a, t],
            "root_expected": mass,
            "root_mean": rm,
            "root_var_ratio": rr,
        }));
    }
    let mut report = EstimateReport::new("stationarity_suite", p, p.replicas, seeds);
    report.estimate = checks.iter().filter(|c| c.passed).count() as f64 / checks.len() as f64;
    report.checks = checks;
    report.details = json!({ "per_time": details, "chi_square_level_each": bonferroni });
    Ok(report.finish())
}
