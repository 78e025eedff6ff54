//! Local fixation of the quarter-plane representation as its right edge
//! moves out, with boundary statistics of a fixed box.

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{map_replicas, parse_dist, require_replicas, Check, EstimateReport, Exec, SeedRecord};
use crate::distributions::{sample_marked_ppp, Atom, OffspringDistribution, Rect};
use crate::error::{Error, Result};
use crate::hammersley_process::{simulate_on_atoms, Horizon, SourcesSinks};
use crate::rng::RandomStream;
use crate::stats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HalfplaneTolerances {
    /// Particles crossing the top edge per unit length, relative to `(1 - alpha) t`.
    pub top_rel: Option<f64>,
    /// Lines crossing the right edge, relative to `log(t / s) / (1 - alpha)`.
    pub side_rel: Option<f64>,
    /// Particles crossing the bottom edge, relative to `(1 - alpha) s (y - x)`.
    pub bottom_rel: Option<f64>,
    /// Minimum fraction of replicas whose trace is equal for the last two `b`.
    pub fixation_min: Option<f64>,
}

impl Default for HalfplaneTolerances {
    fn default() -> Self {
        Self {
            top_rel: Some(0.05),
            side_rel: Some(0.05),
            bottom_rel: Some(0.05),
            fixation_min: Some(0.95),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HalfplaneParams {
    pub dist: String,
    /// `[x, y, s, t]`.
    #[serde(rename = "box")]
    pub bbox: [f64; 4],
    pub b_grid: Vec<f64>,
    /// Left end of the simulated strip.
    pub a: f64,
    pub replicas: usize,
    pub seed: u64,
    pub tolerances: HalfplaneTolerances,
}

impl Default for HalfplaneParams {
    fn default() -> Self {
        Self {
            dist: "geom:0.6666666666666666".into(),
            bbox: [0.0, 30.0, 1.0, 12.0],
            b_grid: vec![200.0, 400.0, 800.0, 1600.0],
            a: -100.0,
            replicas: 1000,
            seed: 1,
            tolerances: HalfplaneTolerances::default(),
        }
    }
}

/// Clipped vertical and horizontal pieces inside the box, as bit patterns.
type Trace = Vec<(u8, u64, u64, u64)>;

struct BoxView {
    trace: Trace,
    top: usize,
    side: usize,
    bottom: usize,
}

const COLUMN_TAG: u64 = 0x6870_636f_6c;

/// Atoms of the unit columns meeting `[lo, hi]`, by time.
fn strip_atoms(stream: &RandomStream, dist: &OffspringDistribution<f64>, lo: f64, hi: f64, t: f64) -> Result<Vec<Atom<f64>>> {
    let mut atoms = Vec::new();
    for k in (lo.floor() as i64)..(hi.ceil() as i64) {
        let mut rng = stream.child(COLUMN_TAG).child(k as u64);
        let rect = Rect::new(k as f64, k as f64 + 1.0, 0.0, t)?;
        atoms.extend(
            sample_marked_ppp(&rect, dist, &mut rng)
                .into_iter()
                .filter(|a| a.label >= lo && a.label <= hi),
        );
    }
    atoms.sort_by(|a, b| a.time.total_cmp(&b.time));
    Ok(atoms)
}

/// Runs the strip `[x, b]` from an empty line. Restricted to `[x, y]`, the
/// picture is the same for every left end `A <= x`: an atom in the box draws
/// a line from its left neighbour, clipped at `x` whether that neighbour lies
/// inside or outside, and nothing left of `x` consumes lives inside.
fn view(atoms: &[Atom<f64>], bx: [f64; 4], b: f64) -> Result<BoxView> {
    let [x, y, s, t] = bx;
    let inside: Vec<Atom<f64>> = atoms.iter().copied().filter(|a| a.label <= b).collect();
    let sim = simulate_on_atoms(Horizon::new(x, b, t)?, &inside, &SourcesSinks::none(), &[])?;
    let vs = sim.state.vertices();
    let mut trace = Trace::new();
    let (mut top, mut side, mut bottom) = (0, 0, 0);
    for v in vs {
        let end = v.death_time.unwrap_or(f64::INFINITY);
        if v.label >= x && v.label <= y {
            if v.time <= t && end > s {
                trace.push((0, v.label.to_bits(), v.time.max(s).to_bits(), end.min(t).to_bits()));
            }
            if v.time <= t && end > t {
                top += 1;
            }
            if v.time <= s && end > s {
                bottom += 1;
            }
        }
        let from = v.parent.map_or(f64::NEG_INFINITY, |p| vs[p].label);
        if v.time >= s && v.time <= t && from <= y && v.label >= x {
            trace.push((1, v.time.to_bits(), from.max(x).to_bits(), v.label.min(y).to_bits()));
            if from < y && v.label > y {
                side += 1;
            }
        }
    }
    trace.sort_unstable();
    Ok(BoxView { trace, top, side, bottom })
}

/// Fraction of replicas whose box trace no longer changes between the last
/// two right edges, with boundary statistics in the geometric case.
pub fn halfplane_fixation(p: &HalfplaneParams, exec: Exec) -> Result<EstimateReport> {
    require_replicas(p.replicas, 2)?;
    let dist = parse_dist(&p.dist)?;
    let [x, y, s, t] = p.bbox;
    if !(x < y && 0.0 < s && s < t) || ![x, y, s, t].iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidRectangle(format!("box {:?}", p.bbox)));
    }
    if p.b_grid.len() < 2 || p.b_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("b_grid needs two or more increasing values".into()));
    }
    if !(p.a < x && y < p.b_grid[0]) {
        return Err(Error::InvalidRectangle(format!(
            "box [{x}, {y}] not inside ({}, {})",
            p.a, p.b_grid[0]
        )));
    }
    let b_max = *p.b_grid.last().expect("non-empty");
    let seeds = SeedRecord::new(p.seed, "halfplane_fixation");
    let views = map_replicas(p.replicas, exec, |r| {
        let atoms = strip_atoms(&seeds.stream(r), &dist, x, b_max, t)?;
        p.b_grid.iter().map(|&b| view(&atoms, p.bbox, b)).collect::<Result<Vec<_>>>()
    })?;

    let k = p.b_grid.len();
    let stable_pairs: Vec<f64> = (1..k)
        .map(|j| views.iter().filter(|v| v[j].trace == v[j - 1].trace).count() as f64 / p.replicas as f64)
        .collect();
    let fixation = stable_pairs[k - 2];
    let mut report = EstimateReport::new("halfplane_fixation", p, p.replicas, seeds);
    report.estimate = fixation;
    let stable = (fixation * p.replicas as f64).round() as u64;
    let (lo, hi) = stats::wilson_interval(stable, p.replicas as u64, stats::normal_quantile(0.975));
    report.confidence_interval = Some([lo, hi]);
    let tol = &p.tolerances;
    if let Some(min) = tol.fixation_min {
        report
            .checks
            .push(Check::within(format!("fixation fraction at b = {b_max}"), fixation, min, 1.0));
    }
    let mut details = json!({ "b_grid": p.b_grid, "fixation_by_pair": stable_pairs });
    if let OffspringDistribution::Geometric(alpha) = dist {
        let last: Vec<&BoxView> = views.iter().map(|v| &v[k - 1]).collect();
        let col = |f: fn(&BoxView) -> usize| -> Vec<f64> { last.iter().map(|v| f(v) as f64).collect() };
        let top: Vec<f64> = col(|v| v.top).iter().map(|c| c / (y - x)).collect();
        let side = col(|v| v.side);
        let bottom = col(|v| v.bottom);
        let beta = 1.0 - alpha;
        let targets = [beta * t, (t / s).ln() / beta, beta * s * (y - x)];
        let names = ["top-edge crossings per unit length", "right-edge crossings", "bottom-edge crossings"];
        let rels = [tol.top_rel, tol.side_rel, tol.bottom_rel];
        let mut stats_out = Vec::new();
        for (i, xs) in [&top, &side, &bottom].into_iter().enumerate() {
            let m = stats::mean(xs);
            if beta > 0.0 {
                if let Some(rel) = rels[i] {
                    report.checks.push(Check::relative(names[i], m, targets[i], rel));
                }
            }
            stats_out.push(json!({
                "statistic": names[i],
                "mean": m,
                "standard_error": stats::std_error(xs),
                "target": targets[i],
            }));
        }
        details["boundary"] = json!(stats_out);
    }
    report.details = details;
    Ok(report.finish())
}
