//! The continuous-time Hammersley tree process on an interval.
//!
//! Atoms `(u, t, nu)` of a space-time Poisson process arrive in time order;
//! each one becomes a particle at `u` with `nu` lives and removes a life from
//! the alive particle immediately to its left, exactly as in heap patience
//! sorting. Sources are particles present at time zero and sinks remove a life
//! from the rightmost alive particle.
//!
//! A run produces a [`GraphicalRecord`]: one vertical segment per particle
//! (solid while alive, dotted after death), one horizontal segment per atom
//! joining it to its parent or to the left edge, and the root and sink events.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::{sample_marked_ppp, Atom, OffspringDistribution, Rect};
use crate::error::{Error, Result};
use crate::heap_sort::SortState;
use crate::scalar::{OrdKey, Real};

pub const RECORD_SCHEMA: &str = "gr-1";

/// Simulation box `[x_lo, x_hi] x [0, t_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "R: Real")]
pub struct Horizon<R> {
    pub x_lo: R,
    pub x_hi: R,
    pub t_max: R,
}

impl<R: Real> Horizon<R> {
    pub fn new(x_lo: R, x_hi: R, t_max: R) -> Result<Self> {
        for v in [x_lo, x_hi, t_max] {
            if !v.is_finite() {
                return Err(Error::NonFinite(v.as_f64()));
            }
        }
        if !(x_lo < x_hi) || !(t_max > R::zero()) {
            return Err(Error::InvalidRectangle(format!("[{x_lo}, {x_hi}] x [0, {t_max}]")));
        }
        Ok(Self { x_lo, x_hi, t_max })
    }

    pub fn rect(&self) -> Rect<R> {
        Rect {
            x_lo: self.x_lo,
            x_hi: self.x_hi,
            t_lo: R::zero(),
            t_hi: self.t_max,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SinkColor {
    Red,
    Blue,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "R: Real")]
pub struct Source<R> {
    pub label: R,
    pub lives: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "R: Real")]
pub struct Sink<R> {
    pub time: R,
    /// Blue sinks are inert; uncolored and red sinks act.
    pub color: Option<SinkColor>,
}

/// Boundary data: particles at time zero and sink times on the right edge.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(bound = "R: Real")]
pub struct SourcesSinks<R> {
    pub sources: Vec<Source<R>>,
    pub sinks: Vec<Sink<R>>,
}

impl<R: Real> SourcesSinks<R> {
    pub fn none() -> Self {
        Self {
            sources: Vec::new(),
            sinks: Vec::new(),
        }
    }

    pub fn new(sources: Vec<Source<R>>, sink_times: &[R]) -> Self {
        Self {
            sources,
            sinks: sink_times.iter().map(|&time| Sink { time, color: None }).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "R: Real")]
pub struct VerticalSegment<R> {
    pub vertex: usize,
    pub label: R,
    pub t_birth: R,
    /// Death time, or `t_max` for particles alive at the end.
    pub t_end: R,
    pub dead: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "R: Real")]
pub struct HorizontalSegment<R> {
    pub time: R,
    /// Parent label, or `x_lo` for a root.
    pub x_from: R,
    pub x_to: R,
    pub child: usize,
    pub parent: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "R: Real")]
pub struct RootEvent<R> {
    pub time: R,
    pub vertex: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "R: Real")]
pub struct SinkEvent<R> {
    pub time: R,
    pub affected: Option<usize>,
    pub color: Option<SinkColor>,
}

/// Space-time log of one run. Vertex ids number the sources first, then the
/// atoms in the order of `atoms`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "R: Real")]
pub struct GraphicalRecord<R> {
    pub schema: String,
    pub horizon: Horizon<R>,
    pub sources: Vec<Source<R>>,
    pub atoms: Vec<Atom<R>>,
    pub vertical_segments: Vec<VerticalSegment<R>>,
    /// One per atom; entry `i` belongs to vertex `sources.len() + i`.
    pub horizontal_segments: Vec<HorizontalSegment<R>>,
    pub root_events: Vec<RootEvent<R>>,
    pub sink_events: Vec<SinkEvent<R>>,
    #[serde(skip)]
    pub(crate) label_order: Vec<usize>,
    #[serde(skip)]
    pub(crate) rank: Vec<usize>,
}

impl<R: Real> GraphicalRecord<R> {
    fn empty(horizon: Horizon<R>) -> Self {
        Self {
            schema: RECORD_SCHEMA.to_string(),
            horizon,
            sources: Vec::new(),
            atoms: Vec::new(),
            vertical_segments: Vec::new(),
            horizontal_segments: Vec::new(),
            root_events: Vec::new(),
            sink_events: Vec::new(),
            label_order: Vec::new(),
            rank: Vec::new(),
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.vertical_segments.len()
    }

    pub fn root_count(&self) -> usize {
        self.root_events.len()
    }

    /// Vertex ids sorted by label.
    pub fn label_order(&self) -> &[usize] {
        &self.label_order
    }

    pub(crate) fn rebuild_index(&mut self) {
        let mut order: Vec<usize> = (0..self.vertical_segments.len()).collect();
        order.sort_by_key(|&v| OrdKey(self.vertical_segments[v].label));
        let mut rank = vec![0; order.len()];
        for (r, &v) in order.iter().enumerate() {
            rank[v] = r;
        }
        self.label_order = order;
        self.rank = rank;
    }

    /// Parses a record and checks it.
    pub fn from_json(s: &str) -> Result<Self> {
        let mut rec: Self = serde_json::from_str(s).map_err(|e| Error::MalformedRecord(e.to_string()))?;
        for seg in &rec.vertical_segments {
            for v in [seg.label, seg.t_birth, seg.t_end] {
                if !v.is_finite() {
                    return Err(Error::MalformedRecord(format!("non-finite value {v}")));
                }
            }
        }
        rec.rebuild_index();
        rec.validate()?;
        Ok(rec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("records serialize")
    }

    /// Structural checks: segment counts, ids, and that every horizontal
    /// segment starts on a solid vertical line or on the left edge.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::MalformedRecord(m));
        if self.schema != RECORD_SCHEMA {
            return bad(format!("unknown schema {:?}", self.schema));
        }
        let ns = self.sources.len();
        if self.vertical_segments.len() != ns + self.atoms.len() {
            return bad("one vertical segment per source and atom expected".into());
        }
        if self.horizontal_segments.len() != self.atoms.len() {
            return bad("one horizontal segment per atom expected".into());
        }
        for (v, seg) in self.vertical_segments.iter().enumerate() {
            if seg.vertex != v {
                return bad(format!("vertical segment {v} names vertex {}", seg.vertex));
            }
            if seg.t_end < seg.t_birth || (seg.dead && seg.t_end <= seg.t_birth) {
                return bad(format!("vertical segment {v} has no extent"));
            }
        }
        let mut roots = 0;
        for (i, h) in self.horizontal_segments.iter().enumerate() {
            if h.child != ns + i {
                return bad(format!("horizontal segment {i} names child {}", h.child));
            }
            let own = &self.vertical_segments[h.child];
            if h.x_to != own.label || h.time != own.t_birth {
                return bad(format!("horizontal segment {i} does not end at its atom"));
            }
            match h.parent {
                Some(p) => {
                    let Some(ps) = self.vertical_segments.get(p) else {
                        return bad(format!("horizontal segment {i}: unknown parent {p}"));
                    };
                    if h.x_from != ps.label || !(ps.label < h.x_to) {
                        return bad(format!("horizontal segment {i} does not start on its parent"));
                    }
                    if !(ps.t_birth < h.time && h.time <= ps.t_end) {
                        return bad(format!("horizontal segment {i} starts on a dotted line"));
                    }
                }
                None => {
                    roots += 1;
                    if h.x_from != self.horizon.x_lo {
                        return bad(format!("root segment {i} does not start on the left edge"));
                    }
                    if !self.root_events.iter().any(|r| r.vertex == h.child && r.time == h.time) {
                        return bad(format!("root segment {i} has no root event"));
                    }
                }
            }
        }
        if roots != self.root_events.len() {
            return bad("root events do not match root segments".into());
        }
        Ok(())
    }

    /// Boundary data this record was run with.
    pub fn boundary(&self) -> SourcesSinks<R> {
        SourcesSinks {
            sources: self.sources.clone(),
            sinks: self
                .sink_events
                .iter()
                .map(|s| Sink {
                    time: s.time,
                    color: s.color,
                })
                .collect(),
        }
    }

    /// Re-runs the dynamics on the stored atoms and boundary.
    pub fn replay(&self) -> Result<Simulation<R>> {
        let mut atoms = self.atoms.clone();
        atoms.sort_by_key(|a| OrdKey(a.time));
        simulate_on_atoms(self.horizon, &atoms, &self.boundary(), &[])
    }
}

/// Alive particles `(label, remaining lives)` at one time, by label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "R: Real")]
pub struct Snapshot<R> {
    pub time: R,
    pub particles: Vec<(R, u32)>,
}

/// Output of a run: the record, the final sorting state and any snapshots.
#[derive(Debug, Clone)]
pub struct Simulation<R: Real> {
    pub record: GraphicalRecord<R>,
    pub state: SortState<R>,
    pub snapshots: Vec<Snapshot<R>>,
}

/// Samples atoms on the horizon and runs the dynamics.
pub fn simulate<R: Real, G: Rng + ?Sized>(
    horizon: Horizon<R>,
    dist: &OffspringDistribution<R>,
    boundary: &SourcesSinks<R>,
    rng: &mut G,
) -> Result<GraphicalRecord<R>> {
    let atoms = sample_marked_ppp(&horizon.rect(), dist, rng);
    Ok(simulate_on_atoms(horizon, &atoms, boundary, &[])?.record)
}

/// Runs the dynamics on given atoms (sorted by time), merging atoms, sinks and
/// snapshot times in a single pass. A snapshot at `t` sees every event at
/// times `<= t`.
pub fn simulate_on_atoms<R: Real>(
    horizon: Horizon<R>,
    atoms: &[Atom<R>],
    boundary: &SourcesSinks<R>,
    snapshot_times: &[R],
) -> Result<Simulation<R>> {
    let inside = |x: R| x >= horizon.x_lo && x <= horizon.x_hi;
    let mut state = SortState::new();
    let mut rec = GraphicalRecord::empty(horizon);
    for s in &boundary.sources {
        if !inside(s.label) {
            return Err(Error::InvalidParameter(format!("source at {} outside the box", s.label)));
        }
        let v = state.add_source(s.label, s.lives)?;
        rec.sources.push(*s);
        rec.vertical_segments.push(VerticalSegment {
            vertex: v,
            label: s.label,
            t_birth: R::zero(),
            t_end: horizon.t_max,
            dead: false,
        });
    }
    for a in atoms {
        if !inside(a.label) || !(a.time > R::zero() && a.time <= horizon.t_max) {
            return Err(Error::InvalidParameter(format!("atom ({}, {}) outside the box", a.label, a.time)));
        }
    }
    for s in &boundary.sinks {
        if !(s.time > R::zero() && s.time <= horizon.t_max) {
            return Err(Error::InvalidParameter(format!("sink at {} outside (0, t_max]", s.time)));
        }
    }
    if snapshot_times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter("snapshot times must be sorted".into()));
    }

    let mut snapshots = Vec::with_capacity(snapshot_times.len());
    let (mut i, mut j, mut k) = (0, 0, 0);
    loop {
        let ta = atoms.get(i).map(|a| a.time);
        let ts = boundary.sinks.get(j).map(|s| s.time);
        let tk = snapshot_times.get(k).copied();
        let next_event = match (ta, ts) {
            (Some(a), Some(s)) => Some(a.min(s)),
            (a, s) => a.or(s),
        };
        if let Some(t) = tk {
            if next_event.map_or(true, |e| t < e) {
                snapshots.push(Snapshot {
                    time: t,
                    particles: state.alive().map(|(u, _, k)| (u, k)).collect(),
                });
                k += 1;
                continue;
            }
        }
        let Some(t) = next_event else { break };
        if ta == Some(t) && ts != Some(t) {
            let a = atoms[i];
            i += 1;
            let ins = state.insert_at(a.label, a.time, a.lives)?;
            let x_from = match ins.parent {
                Some(p) => {
                    if ins.parent_died {
                        let seg = &mut rec.vertical_segments[p];
                        seg.dead = true;
                        seg.t_end = a.time;
                    }
                    rec.vertical_segments[p].label
                }
                None => {
                    rec.root_events.push(RootEvent {
                        time: a.time,
                        vertex: ins.vertex,
                    });
                    horizon.x_lo
                }
            };
            rec.atoms.push(a);
            rec.vertical_segments.push(VerticalSegment {
                vertex: ins.vertex,
                label: a.label,
                t_birth: a.time,
                t_end: horizon.t_max,
                dead: false,
            });
            rec.horizontal_segments.push(HorizontalSegment {
                time: a.time,
                x_from,
                x_to: a.label,
                child: ins.vertex,
                parent: ins.parent,
            });
        } else if ta == Some(t) {
            return Err(Error::DuplicateTime(t.as_f64()));
        } else {
            let s = boundary.sinks[j];
            j += 1;
            let affected = if s.color == Some(SinkColor::Blue) {
                state.apply_sink_noop(s.time)?;
                None
            } else {
                let out = state.apply_sink(s.time)?;
                if let (Some(v), true) = (out.affected, out.died) {
                    let seg = &mut rec.vertical_segments[v];
                    seg.dead = true;
                    seg.t_end = s.time;
                }
                out.affected
            };
            rec.sink_events.push(SinkEvent {
                time: s.time,
                affected,
                color: s.color,
            });
        }
    }
    rec.rebuild_index();
    Ok(Simulation {
        record: rec,
        state,
        snapshots,
    })
}

/// The step function `t -> R(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RootCountingProcess<R> {
    jumps: Vec<R>,
}

impl<R: Real> RootCountingProcess<R> {
    pub fn eval(&self, t: R) -> usize {
        self.jumps.partition_point(|&x| x <= t)
    }

    pub fn jumps(&self) -> &[R] {
        &self.jumps
    }
}

/// Number of trees started up to each time, read off the root events.
pub fn root_counting_process<R: Real>(record: &GraphicalRecord<R>) -> RootCountingProcess<R> {
    let mut jumps: Vec<R> = record.root_events.iter().map(|r| r.time).collect();
    jumps.sort_by_key(|&t| OrdKey(t));
    RootCountingProcess { jumps }
}

/// `R(n)`: sorts the first `n` atoms of a PPP on the unit strip, in time order.
pub fn poissonized_bridge<R: Real, G: Rng + ?Sized>(n: usize, dist: &OffspringDistribution<R>, rng: &mut G) -> Result<usize> {
    let mut state = SortState::counting(false);
    let mut t = R::zero();
    for _ in 0..n {
        t = t - R::sample_open_unit(rng).ln();
        let u = R::sample_unit(rng);
        let k = dist.sample(rng);
        state.insert_at(u, t, k)?;
    }
    Ok(state.root_count())
}

#[derive(Debug, Clone, Copy)]
enum ReplayEvent {
    Birth(usize),
    Sink(usize),
}

/// Particle configurations at arbitrary times, replayed from a record with a
/// checkpoint every `stride` events.
#[derive(Debug, Clone)]
pub struct Trajectory<'a, R> {
    record: &'a GraphicalRecord<R>,
    times: Vec<R>,
    events: Vec<ReplayEvent>,
    stride: usize,
    checkpoints: Vec<BTreeMap<OrdKey<R>, (usize, u32)>>,
}

pub const DEFAULT_CHECKPOINT_STRIDE: usize = 1024;

impl<'a, R: Real> Trajectory<'a, R> {
    pub fn new(record: &'a GraphicalRecord<R>) -> Self {
        Self::with_stride(record, DEFAULT_CHECKPOINT_STRIDE)
    }

    pub fn with_stride(record: &'a GraphicalRecord<R>, stride: usize) -> Self {
        let stride = stride.max(1);
        let ns = record.sources.len();
        let mut tagged: Vec<(R, u8, ReplayEvent)> = Vec::new();
        for (i, a) in record.atoms.iter().enumerate() {
            tagged.push((a.time, 0, ReplayEvent::Birth(ns + i)));
        }
        for (i, s) in record.sink_events.iter().enumerate() {
            tagged.push((s.time, 1, ReplayEvent::Sink(i)));
        }
        tagged.sort_by(|a, b| OrdKey(a.0).cmp(&OrdKey(b.0)).then(a.1.cmp(&b.1)));
        let times = tagged.iter().map(|e| e.0).collect();
        let events: Vec<ReplayEvent> = tagged.into_iter().map(|e| e.2).collect();
        let mut traj = Self {
            record,
            times,
            events,
            stride,
            checkpoints: Vec::new(),
        };
        let mut config = BTreeMap::new();
        for (v, s) in record.sources.iter().enumerate() {
            config.insert(OrdKey(s.label), (v, s.lives));
        }
        traj.checkpoints.push(config.clone());
        for (e, ev) in traj.events.iter().enumerate() {
            traj.apply(&mut config, *ev);
            if (e + 1) % stride == 0 {
                traj.checkpoints.push(config.clone());
            }
        }
        traj
    }

    fn apply(&self, config: &mut BTreeMap<OrdKey<R>, (usize, u32)>, ev: ReplayEvent) {
        let rec = self.record;
        let hit = |config: &mut BTreeMap<OrdKey<R>, (usize, u32)>, v: usize| {
            let key = OrdKey(rec.vertical_segments[v].label);
            if let Some(entry) = config.get_mut(&key) {
                entry.1 -= 1;
                if entry.1 == 0 {
                    config.remove(&key);
                }
            }
        };
        match ev {
            ReplayEvent::Birth(v) => {
                let i = v - rec.sources.len();
                if let Some(p) = rec.horizontal_segments[i].parent {
                    hit(config, p);
                }
                config.insert(OrdKey(rec.atoms[i].label), (v, rec.atoms[i].lives));
            }
            ReplayEvent::Sink(i) => {
                if let Some(v) = rec.sink_events[i].affected {
                    hit(config, v);
                }
            }
        }
    }

    /// Event times in order.
    pub fn event_times(&self) -> &[R] {
        &self.times
    }

    /// Alive particles `(label, remaining lives)` after every event at times `<= t`.
    pub fn configuration_at(&self, t: R) -> Vec<(R, u32)> {
        let idx = self.times.partition_point(|&x| x <= t);
        let c = idx / self.stride;
        let mut config = self.checkpoints[c].clone();
        for ev in &self.events[c * self.stride..idx] {
            self.apply(&mut config, *ev);
        }
        config.into_iter().map(|(k, (_, l))| (k.0, l)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomStream;

    /// Six atoms with three roots and one dead particle at 0.2.
    pub(crate) fn worked_atoms() -> Vec<Atom<f64>> {
        [(0.7, 4), (0.9, 2), (0.2, 1), (0.3, 2), (0.1, 2), (0.5, 1)]
            .iter()
            .enumerate()
            .map(|(i, &(u, k))| Atom::new(u, 0.1 * (i + 1) as f64, k))
            .collect()
    }

    fn unit(t: f64) -> Horizon<f64> {
        Horizon::new(0.0, 1.0, t).unwrap()
    }

    #[test]
    fn worked_atoms_make_three_roots() {
        let sim = simulate_on_atoms(unit(1.0), &worked_atoms(), &SourcesSinks::none(), &[]).unwrap();
        let r = root_counting_process(&sim.record);
        assert_eq!(r.eval(1.0), 3);
        assert_eq!(r.eval(0.15), 1);
        let dead: Vec<f64> = sim
            .record
            .vertical_segments
            .iter()
            .filter(|s| s.dead)
            .map(|s| s.label)
            .collect();
        assert_eq!(dead, vec![0.2]);
        sim.record.validate().unwrap();
    }

    #[test]
    fn empty_record_has_no_roots() {
        let sim = simulate_on_atoms(unit(1.0), &[], &SourcesSinks::none(), &[]).unwrap();
        assert_eq!(root_counting_process(&sim.record).eval(1.0), 0);
    }

    #[test]
    fn sink_without_particles_is_logged() {
        let b = SourcesSinks::new(vec![], &[0.05]);
        let sim = simulate_on_atoms(unit(1.0), &worked_atoms(), &b, &[]).unwrap();
        assert_eq!(sim.record.sink_events[0].affected, None);
        assert_eq!(sim.record.root_count(), 3);
    }

    #[test]
    fn sink_hits_rightmost() {
        let b = SourcesSinks::new(vec![], &[0.25]);
        let sim = simulate_on_atoms(unit(1.0), &worked_atoms(), &b, &[]).unwrap();
        // .9 has 2 lives and is the rightmost alive at 0.25
        assert_eq!(sim.record.sink_events[0].affected, Some(1));
        assert_eq!(sim.state.vertex(1).unwrap().remaining_lives, 1);
    }

    #[test]
    fn rejects_bad_box() {
        assert!(Horizon::new(1.0, 0.0, 1.0).is_err());
        assert!(Horizon::new(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn trajectory_matches_snapshots() {
        let d = OffspringDistribution::geometric(0.5).unwrap();
        let mut rng = RandomStream::new(1, 1);
        let h = Horizon::new(0.0, 3.0, 5.0).unwrap();
        let atoms = sample_marked_ppp(&h.rect(), &d, &mut rng);
        let sinks = crate::distributions::sample_sink_process(1.0, 0.5, 5.0, None, &mut rng).unwrap();
        let sources: Vec<Source<f64>> = crate::distributions::sample_homogeneous(1.0, 0.0, 3.0, &mut rng)
            .into_iter()
            .map(|label| Source { label, lives: d.sample(&mut rng) })
            .collect();
        let b = SourcesSinks::new(sources, &sinks);
        let times = [0.0, 0.5, 1.7, 2.2, 4.9, 5.0];
        let sim = simulate_on_atoms(h, &atoms, &b, &times).unwrap();
        sim.record.validate().unwrap();
        let traj = Trajectory::with_stride(&sim.record, 3);
        for snap in &sim.snapshots {
            assert_eq!(traj.configuration_at(snap.time), snap.particles);
        }
    }

    #[test]
    fn record_json_round_trip() {
        let sim = simulate_on_atoms(unit(1.0), &worked_atoms(), &SourcesSinks::none(), &[]).unwrap();
        let back = GraphicalRecord::from_json(&sim.record.to_json()).unwrap();
        assert_eq!(back, sim.record);
        assert!(GraphicalRecord::<f64>::from_json("{}").is_err());
    }

    #[test]
    fn bridge_of_one_is_one() {
        let d = OffspringDistribution::<f64>::dirac(2).unwrap();
        assert_eq!(poissonized_bridge(1, &d, &mut RandomStream::new(0, 0)).unwrap(), 1);
    }
}
