//! The geometric case.
//!
//! With geometric lives every use of a life kills the particle with
//! probability `alpha`, independently of the past. Colour each atom red with
//! probability `alpha` and blue otherwise: a blue atom only adds a particle, a
//! red one also kills its alive left neighbour. Sinks are coloured the same
//! way; red sinks kill the rightmost particle and blue ones do nothing.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::{sample_homogeneous, SinkIntensity};
use crate::error::{Error, Result};
use crate::hammersley_process::{Horizon, Sink, SinkColor};
use crate::rng::RandomStream;
use crate::scalar::{OrdKey, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    Red,
    Blue,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "R: Real")]
pub struct ColoredAtom<R> {
    pub label: R,
    pub time: R,
    pub color: Color,
}

fn check_alpha<R: Real>(alpha: R) -> Result<()> {
    if alpha > R::zero() && alpha <= R::one() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("alpha = {alpha} outside (0, 1]")))
    }
}

fn color<R: Real, G: Rng + ?Sized>(alpha: R, rng: &mut G) -> Color {
    if R::sample_unit(rng) < alpha {
        Color::Red
    } else {
        Color::Blue
    }
}

/// Coloured atoms of a unit-intensity PPP on `[x_lo, x_hi] x (t_lo, t_hi]`, by time.
pub fn sample_colored_atoms<R: Real, G: Rng + ?Sized>(
    x_lo: R,
    x_hi: R,
    t_lo: R,
    t_hi: R,
    alpha: R,
    rng: &mut G,
) -> Vec<ColoredAtom<R>> {
    let width = x_hi - x_lo;
    let mut out = Vec::new();
    if width <= R::zero() {
        return out;
    }
    let mut t = t_lo;
    loop {
        t = t - R::sample_open_unit(rng).ln() / width;
        if t > t_hi {
            return out;
        }
        let label = x_lo + width * R::sample_unit(rng);
        out.push(ColoredAtom {
            label,
            time: t,
            color: color(alpha, rng),
        });
    }
}

/// Sinks with intensity `1 / (lambda + (1 - alpha) s)` on `(lo, t_max]`,
/// each red with probability `alpha`.
pub fn sample_colored_sinks<R: Real, G: Rng + ?Sized>(
    lambda: R,
    alpha: R,
    lo: R,
    t_max: R,
    rng: &mut G,
) -> Result<Vec<Sink<R>>> {
    let intensity = SinkIntensity::new(lambda, alpha)?;
    let times = intensity.sample(lo, t_max, rng);
    Ok(times
        .into_iter()
        .map(|time| Sink {
            time,
            color: Some(match color(alpha, rng) {
                Color::Red => SinkColor::Red,
                Color::Blue => SinkColor::Blue,
            }),
        })
        .collect())
}

/// Particle positions of a red/blue run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "R: Real")]
pub struct RedBlueRun<R> {
    pub atoms: Vec<ColoredAtom<R>>,
    /// `(time, positions)` after every event at times `<= time`.
    pub snapshots: Vec<(R, Vec<R>)>,
    pub final_positions: Vec<R>,
    /// Kills by red atoms and red sinks.
    pub kills: usize,
}

/// Runs the red/blue dynamics on given atoms (sorted by time).
pub fn redblue_on_atoms<R: Real>(
    horizon: Horizon<R>,
    atoms: &[ColoredAtom<R>],
    sources: &[R],
    sinks: &[Sink<R>],
    snapshot_times: &[R],
) -> Result<RedBlueRun<R>> {
    let mut particles: BTreeSet<OrdKey<R>> = BTreeSet::new();
    for &s in sources {
        if !s.is_finite() || !particles.insert(OrdKey(s)) {
            return Err(Error::DuplicateLabel(s.as_f64()));
        }
    }
    if atoms.windows(2).any(|w| !(w[0].time < w[1].time)) || sinks.windows(2).any(|w| !(w[0].time < w[1].time)) {
        return Err(Error::InvalidParameter("events must be sorted by strictly increasing time".into()));
    }
    for a in atoms {
        if !(a.label >= horizon.x_lo && a.label <= horizon.x_hi && a.time > R::zero() && a.time <= horizon.t_max) {
            return Err(Error::InvalidParameter(format!("atom ({}, {}) outside the box", a.label, a.time)));
        }
    }
    let mut snapshots = Vec::new();
    let mut kills = 0;
    let (mut i, mut j, mut k) = (0, 0, 0);
    loop {
        let ta = atoms.get(i).map(|a| a.time);
        let ts = sinks.get(j).map(|s| s.time);
        let next = match (ta, ts) {
            (Some(a), Some(s)) => Some(a.min(s)),
            (a, s) => a.or(s),
        };
        if let Some(&t) = snapshot_times.get(k) {
            if next.map_or(true, |e| t < e) {
                snapshots.push((t, particles.iter().map(|p| p.0).collect()));
                k += 1;
                continue;
            }
        }
        let Some(t) = next else { break };
        if ta == Some(t) && ts == Some(t) {
            return Err(Error::DuplicateTime(t.as_f64()));
        }
        if ta == Some(t) {
            let a = atoms[i];
            i += 1;
            let key = OrdKey(a.label);
            if a.color == Color::Red {
                if let Some(&p) = particles.range(..key).next_back() {
                    particles.remove(&p);
                    kills += 1;
                }
            }
            if !particles.insert(key) {
                return Err(Error::DuplicateLabel(a.label.as_f64()));
            }
        } else {
            let s = sinks[j];
            j += 1;
            if s.color != Some(SinkColor::Blue) && particles.pop_last().is_some() {
                kills += 1;
            }
        }
    }
    Ok(RedBlueRun {
        atoms: atoms.to_vec(),
        snapshots,
        final_positions: particles.iter().map(|p| p.0).collect(),
        kills,
    })
}

/// Samples coloured atoms on the horizon and runs the red/blue dynamics.
/// `alpha = 1` makes every atom red: the classical Hammersley line process.
pub fn simulate_redblue<R: Real, G: Rng + ?Sized>(
    horizon: Horizon<R>,
    alpha: R,
    sources: &[R],
    sinks: &[Sink<R>],
    snapshot_times: &[R],
    rng: &mut G,
) -> Result<RedBlueRun<R>> {
    check_alpha(alpha)?;
    let atoms = sample_colored_atoms(horizon.x_lo, horizon.x_hi, R::zero(), horizon.t_max, alpha, rng);
    redblue_on_atoms(horizon, &atoms, sources, sinks, snapshot_times)
}

/// Position of the tagged particle and its right environment over time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "R: Real")]
pub struct TaggedTrajectory<R> {
    pub times: Vec<R>,
    pub x: Vec<R>,
    /// `gaps[i][j]`: distance between the `j`-th and `(j+1)`-th particle at or
    /// right of `X(times[i])`.
    pub gaps: Vec<Vec<R>>,
    /// Final simulation window `[-W, W']`.
    pub window: (R, R),
    /// Number of times the right edge was pushed out.
    pub expansions: u32,
}

impl<R: Real> TaggedTrajectory<R> {
    /// CSV with columns `t, X, gap_1 .. gap_m`.
    pub fn to_csv(&self) -> String {
        let m = self.gaps.first().map_or(0, Vec::len);
        let mut out = String::from("t,X");
        for j in 1..=m {
            out.push_str(&format!(",gap_{j}"));
        }
        out.push('\n');
        for (i, t) in self.times.iter().enumerate() {
            out.push_str(&format!("{t},{}", self.x[i]));
            for g in &self.gaps[i] {
                out.push_str(&format!(",{g}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Window settings for [`track_tagged_particle`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "R: Real")]
pub struct TaggedWindow<R> {
    /// Left extent `W`; `None` uses `10 alpha / (lambda (1 - alpha))`, or 10
    /// when `alpha = 1`.
    pub left: Option<R>,
    /// Initial right extent; `None` uses `W + 4 (m + 1) / lambda`.
    pub right: Option<R>,
    pub max_expansions: u32,
}

impl<R: Real> Default for TaggedWindow<R> {
    fn default() -> Self {
        Self {
            left: None,
            right: None,
            max_expansions: 12,
        }
    }
}

const COLUMN_TAG: u64 = 0x636f_6c75_6d6e;
const SINK_TAG: u64 = 0x7369_6e6b;

/// Per-unit-column atoms and sources, drawn from streams keyed by the column
/// index so that a wider window reuses the same randomness.
fn column<R: Real>(stream: &RandomStream, k: i64, lambda: R, alpha: R, t_max: R) -> (Vec<ColoredAtom<R>>, Vec<R>) {
    let mut rng = stream.child(COLUMN_TAG).child(k as u64);
    let x0 = R::lit(k as f64);
    let x1 = x0 + R::one();
    let sources = sample_homogeneous(lambda, x0, x1, &mut rng);
    let atoms = sample_colored_atoms(x0, x1, R::zero(), t_max, alpha, &mut rng);
    (atoms, sources)
}

enum Attempt<R> {
    Done(TaggedTrajectory<R>),
    Expand,
}

/// Follows `X(t)`, the leftmost alive descendant of the first source right of
/// the origin, under the stationary boundary (sources PPP(`lambda`) with
/// geometric lives, sinks of intensity `1 / (lambda + (1 - alpha) s)`).
///
/// When fewer than `m_gaps` particles lie right of `X`, or a sink reaches the
/// tagged family, the right edge doubles and the run restarts on the same
/// atoms; runs are never discarded.
pub fn track_tagged_particle<R: Real>(
    lambda: R,
    alpha: R,
    t_max: R,
    sample_times: &[R],
    m_gaps: usize,
    window: TaggedWindow<R>,
    stream: &RandomStream,
) -> Result<TaggedTrajectory<R>> {
    check_alpha(alpha)?;
    if !(lambda > R::zero()) {
        return Err(Error::InvalidParameter("the tagged particle needs lambda > 0".into()));
    }
    if sample_times.iter().any(|&t| t < R::zero() || t > t_max) || sample_times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter("sample times must be sorted in [0, t_max]".into()));
    }
    let ten = R::lit(10.0);
    let w_left = window.left.unwrap_or(if alpha == R::one() {
        ten
    } else {
        ten * alpha / (lambda * (R::one() - alpha))
    });
    let mut w_right = window
        .right
        .unwrap_or(w_left + R::lit(4.0 * (m_gaps as f64 + 1.0)) / lambda);
    let k_lo = (-w_left).floor().to_i64().unwrap_or(-1);
    let mut cache: BTreeMap<i64, (Vec<ColoredAtom<R>>, Vec<R>)> = BTreeMap::new();
    for expansion in 0..=window.max_expansions {
        let k_hi = w_right.ceil().to_i64().unwrap_or(1);
        for k in k_lo..k_hi {
            cache.entry(k).or_insert_with(|| column(stream, k, lambda, alpha, t_max));
        }
        let x_hi = R::lit(k_hi as f64);
        let mut sink_rng = stream.child(SINK_TAG).child(u64::from(expansion));
        let sinks = sample_colored_sinks(lambda, alpha, R::zero(), t_max, &mut sink_rng)?;
        match tagged_attempt(&cache, k_lo, k_hi, &sinks, sample_times, m_gaps)? {
            Attempt::Done(mut tr) => {
                tr.window = (R::lit(k_lo as f64), x_hi);
                tr.expansions = expansion;
                return Ok(tr);
            }
            Attempt::Expand => w_right = x_hi * R::lit(2.0),
        }
    }
    Err(Error::NoSource)
}

fn tagged_attempt<R: Real>(
    cache: &BTreeMap<i64, (Vec<ColoredAtom<R>>, Vec<R>)>,
    k_lo: i64,
    k_hi: i64,
    sinks: &[Sink<R>],
    sample_times: &[R],
    m_gaps: usize,
) -> Result<Attempt<R>> {
    let mut atoms: Vec<ColoredAtom<R>> = Vec::new();
    // particle -> descends from the tagged source
    let mut particles: BTreeMap<OrdKey<R>, bool> = BTreeMap::new();
    for k in k_lo..k_hi {
        let (a, s) = &cache[&k];
        atoms.extend_from_slice(a);
        for &x in s {
            particles.insert(OrdKey(x), false);
        }
    }
    atoms.sort_by_key(|a| OrdKey(a.time));
    let Some((&x0, _)) = particles.range(OrdKey(R::zero())..).next() else {
        return Ok(Attempt::Expand);
    };
    particles.insert(x0, true);
    let mut marked: BTreeSet<OrdKey<R>> = BTreeSet::from([x0]);

    let mut out = TaggedTrajectory {
        times: Vec::with_capacity(sample_times.len()),
        x: Vec::with_capacity(sample_times.len()),
        gaps: Vec::with_capacity(sample_times.len()),
        window: (R::zero(), R::zero()),
        expansions: 0,
    };
    let (mut i, mut j, mut k) = (0, 0, 0);
    loop {
        let ta = atoms.get(i).map(|a| a.time);
        let ts = sinks.get(j).map(|s| s.time);
        let next = match (ta, ts) {
            (Some(a), Some(s)) => Some(a.min(s)),
            (a, s) => a.or(s),
        };
        if let Some(&t) = sample_times.get(k) {
            if next.map_or(true, |e| t < e) {
                let Some(&x) = marked.iter().next() else {
                    return Ok(Attempt::Expand);
                };
                let right: Vec<R> = particles.range(x..).take(m_gaps + 1).map(|(p, _)| p.0).collect();
                if right.len() < m_gaps + 1 {
                    return Ok(Attempt::Expand);
                }
                out.times.push(t);
                out.x.push(x.0);
                out.gaps.push(right.windows(2).map(|w| w[1] - w[0]).collect());
                k += 1;
                continue;
            }
        }
        let Some(t) = next else { break };
        if ta == Some(t) {
            let a = atoms[i];
            i += 1;
            let key = OrdKey(a.label);
            let parent = particles.range(..key).next_back().map(|(p, m)| (*p, *m));
            let inherits = parent.is_some_and(|p| p.1);
            if let (Color::Red, Some((p, m))) = (a.color, parent) {
                particles.remove(&p);
                if m {
                    marked.remove(&p);
                }
            }
            particles.insert(key, inherits);
            if inherits {
                marked.insert(key);
            }
        } else {
            let s = sinks[j];
            j += 1;
            if s.color == Some(SinkColor::Red) {
                if let Some((_, true)) = particles.pop_last() {
                    return Ok(Attempt::Expand);
                }
            }
        }
    }
    Ok(Attempt::Done(out))
}

/// Number of sources in `(-w, 0]` whose tree reaches `[0, inf)` by `t_max`,
/// on the window `[-w, w_right]` with stationary sources and sinks.
pub fn trees_crossing_origin<R: Real>(
    lambda: R,
    alpha: R,
    t_max: R,
    w: R,
    w_right: R,
    stream: &RandomStream,
) -> Result<usize> {
    check_alpha(alpha)?;
    if !(lambda > R::zero() && w > R::zero() && w_right > R::zero()) {
        return Err(Error::InvalidParameter("lambda, w and w_right must be positive".into()));
    }
    let mut rng = stream.clone();
    let sources = sample_homogeneous(lambda, -w, w_right, &mut rng);
    let atoms = sample_colored_atoms(-w, w_right, R::zero(), t_max, alpha, &mut rng);
    let sinks = sample_colored_sinks(lambda, alpha, R::zero(), t_max, &mut rng)?;
    // particle -> index of the source whose tree it belongs to
    let mut particles: BTreeMap<OrdKey<R>, Option<usize>> = BTreeMap::new();
    let mut crossed: BTreeSet<usize> = BTreeSet::new();
    for (idx, &x) in sources.iter().enumerate() {
        let tag = (x <= R::zero()).then_some(idx);
        particles.insert(OrdKey(x), tag);
    }
    let (mut i, mut j) = (0, 0);
    while i < atoms.len() || j < sinks.len() {
        let atom_first = match (atoms.get(i), sinks.get(j)) {
            (Some(a), Some(s)) => a.time < s.time,
            (a, _) => a.is_some(),
        };
        if atom_first {
            let a = atoms[i];
            i += 1;
            let key = OrdKey(a.label);
            let parent = particles.range(..key).next_back().map(|(p, t)| (*p, *t));
            let tag = parent.and_then(|p| p.1);
            if let (Color::Red, Some((p, _))) = (a.color, parent) {
                particles.remove(&p);
            }
            if let (Some(t), true) = (tag, a.label >= R::zero()) {
                crossed.insert(t);
            }
            particles.insert(key, tag);
        } else {
            if sinks[j].color == Some(SinkColor::Red) {
                particles.pop_last();
            }
            j += 1;
        }
    }
    Ok(crossed.len())
}
