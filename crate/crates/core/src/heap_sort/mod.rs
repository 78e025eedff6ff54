//! Heap patience sorting.
//!
//! Items arrive one at a time with a label and a number of lives. Each item
//! becomes a child of the alive vertex carrying the largest smaller label, if
//! one exists, and that vertex loses a life; otherwise it starts a new tree.
//! The only query is a predecessor search among alive labels, served by a
//! `BTreeMap` from which dead vertices are removed immediately.
//!
//! The same state also drives the continuous-time process: [`SortState::insert_at`]
//! takes explicit arrival times, [`SortState::add_source`] seeds particles at
//! time zero and [`SortState::apply_sink`] removes a life from the rightmost
//! alive particle.

pub mod oracles;
pub mod rightmost;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::hash::{BuildHasherDefault, Hasher};
use std::ops::Bound;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{label_bits, OrdKey, Real};

pub use rightmost::{insert_rightmost, RightmostInsertion};

/// One vertex of the forest.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexRecord<R> {
    pub label: R,
    pub time: R,
    pub initial_lives: u32,
    pub remaining_lives: u32,
    pub parent: Option<usize>,
    /// Children in increasing order of arrival time.
    pub children: Vec<usize>,
    /// 1-based position in the insertion sequence (sources count too).
    pub arrival_index: usize,
    pub death_time: Option<R>,
    /// Lives removed by sinks rather than by children.
    pub sink_hits: u32,
    pub is_source: bool,
}

impl<R: Real> VertexRecord<R> {
    pub fn is_alive(&self) -> bool {
        self.remaining_lives > 0
    }
}

#[derive(Debug, Clone, Copy)]
struct Slot {
    id: usize,
    remaining: u32,
}

/// What happened to the forest on one insertion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Insertion {
    pub vertex: usize,
    pub parent: Option<usize>,
    pub created_root: bool,
    pub parent_died: bool,
}

/// Outcome of a sink event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SinkOutcome {
    pub affected: Option<usize>,
    pub died: bool,
}

/// Storage options for a [`SortState`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SortOptions {
    /// Keep one [`VertexRecord`] per vertex. Without it only alive labels and
    /// counters are stored.
    pub keep_forest: bool,
    /// Maintain the leading-dead count incrementally through an ordered set
    /// of dead labels.
    pub track_dead: bool,
}

impl Default for SortOptions {
    fn default() -> Self {
        Self {
            keep_forest: true,
            track_dead: false,
        }
    }
}

#[derive(Default)]
struct BitMix(u64);

impl Hasher for BitMix {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 = (self.0 ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3);
        }
    }

    fn write_u64(&mut self, x: u64) {
        let z = (self.0 ^ x).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        self.0 = z ^ (z >> 29);
    }
}

/// Online heap patience sorting state.
#[derive(Clone)]
pub struct SortState<R> {
    opts: SortOptions,
    vertices: Vec<VertexRecord<R>>,
    alive: BTreeMap<OrdKey<R>, Slot>,
    dead: Option<BTreeSet<OrdKey<R>>>,
    dead_labels: Vec<R>,
    seen: HashSet<u64, BuildHasherDefault<BitMix>>,
    leading_dead: usize,
    n: usize,
    num_vertices: usize,
    num_dead: usize,
    root_count: usize,
    last_time: Option<R>,
    started: bool,
}

impl<R: Real> Default for SortState<R> {
    fn default() -> Self {
        Self::new()
    }
}

impl<R: Real> std::fmt::Debug for SortState<R> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SortState")
            .field("n", &self.n)
            .field("root_count", &self.root_count)
            .field("alive", &self.alive.len())
            .field("opts", &self.opts)
            .finish()
    }
}

impl<R: Real> SortState<R> {
    /// A state that keeps the whole forest.
    pub fn new() -> Self {
        Self::with_options(SortOptions::default())
    }

    /// Forest plus incremental leading-dead tracking.
    pub fn with_dead_tracking() -> Self {
        Self::with_options(SortOptions {
            keep_forest: true,
            track_dead: true,
        })
    }

    /// Counters only; for large Monte Carlo runs.
    pub fn counting(track_dead: bool) -> Self {
        Self::with_options(SortOptions {
            keep_forest: false,
            track_dead,
        })
    }

    pub fn with_options(opts: SortOptions) -> Self {
        Self {
            opts,
            vertices: Vec::new(),
            alive: BTreeMap::new(),
            dead: opts.track_dead.then(BTreeSet::new),
            dead_labels: Vec::new(),
            seen: HashSet::default(),
            leading_dead: 0,
            n: 0,
            num_vertices: 0,
            num_dead: 0,
            root_count: 0,
            last_time: None,
            started: false,
        }
    }

    pub fn options(&self) -> SortOptions {
        self.opts
    }

    /// Number of inserted items (sources excluded).
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn root_count(&self) -> usize {
        self.root_count
    }

    pub fn alive_count(&self) -> usize {
        self.alive.len()
    }

    /// Vertex records; empty for counting states.
    pub fn vertices(&self) -> &[VertexRecord<R>] {
        &self.vertices
    }

    pub fn vertex(&self, id: usize) -> Option<&VertexRecord<R>> {
        self.vertices.get(id)
    }

    /// Alive particles as `(label, vertex id, remaining lives)`, by label.
    pub fn alive(&self) -> impl Iterator<Item = (R, usize, u32)> + '_ {
        self.alive.iter().map(|(k, s)| (k.0, s.id, s.remaining))
    }

    pub fn min_alive_label(&self) -> Option<R> {
        self.alive.keys().next().map(|k| k.0)
    }

    pub fn max_alive_label(&self) -> Option<R> {
        self.alive.keys().next_back().map(|k| k.0)
    }

    /// `D_n`: dead vertices whose label lies below every alive label; all
    /// vertices when none is alive.
    ///
    /// Constant time with dead tracking, a linear scan otherwise.
    pub fn leading_dead(&self) -> usize {
        if self.dead.is_some() {
            return self.leading_dead;
        }
        let min = self.min_alive_label();
        let below = |x: R| min.map_or(true, |m| x < m);
        if self.opts.keep_forest {
            self.vertices
                .iter()
                .filter(|v| !v.is_alive() && below(v.label))
                .count()
        } else {
            self.dead_labels.iter().filter(|&&x| below(x)).count()
        }
    }

    /// The life word: remaining lives of every vertex, by increasing label.
    pub fn life_word(&self) -> Result<Vec<u32>> {
        self.require_forest("life_word")?;
        let mut order: Vec<&VertexRecord<R>> = self.vertices.iter().collect();
        order.sort_by(|a, b| OrdKey(a.label).cmp(&OrdKey(b.label)));
        Ok(order.iter().map(|v| v.remaining_lives).collect())
    }

    fn require_forest(&self, what: &str) -> Result<()> {
        if self.opts.keep_forest {
            Ok(())
        } else {
            Err(Error::Unsupported(format!("{what} needs a state that keeps the forest")))
        }
    }

    fn check_finite(x: R) -> Result<()> {
        if x.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite(x.as_f64()))
        }
    }

    fn claim_label(&mut self, label: R) -> Result<()> {
        Self::check_finite(label)?;
        if !self.seen.insert(label_bits(label)) {
            return Err(Error::DuplicateLabel(label.as_f64()));
        }
        Ok(())
    }

    fn check_time(&self, time: R) -> Result<()> {
        Self::check_finite(time)?;
        if time < R::zero() {
            return Err(Error::InvalidParameter(format!("negative time {time}")));
        }
        match self.last_time {
            Some(last) if time == last => Err(Error::DuplicateTime(time.as_f64())),
            Some(last) if time < last => Err(Error::OutOfOrder {
                time: time.as_f64(),
                last: last.as_f64(),
            }),
            _ => Ok(()),
        }
    }

    fn tracked_min(&self) -> Option<Option<OrdKey<R>>> {
        self.dead.as_ref().map(|_| self.alive.keys().next().copied())
    }

    /// Moves the leading-dead counter from the old minimum alive label to the
    /// current one. Vertices that died since `old_min` was read had labels at
    /// least `old_min`, so only the band between the two minima changes.
    fn refresh_leading_dead(&mut self, old_min: Option<Option<OrdKey<R>>>) {
        let (Some(old_min), Some(dead)) = (old_min, self.dead.as_ref()) else {
            return;
        };
        let new_min = self.alive.keys().next().copied();
        let bound = |k: Option<OrdKey<R>>| k.map_or(Bound::Unbounded, Bound::Excluded);
        let incl = |k: OrdKey<R>| Bound::Included(k);
        match (old_min, new_min) {
            (a, b) if a == b => {}
            (None, Some(b)) => self.leading_dead -= dead.range((incl(b), Bound::Unbounded)).count(),
            (Some(a), None) => self.leading_dead += dead.range((incl(a), Bound::Unbounded)).count(),
            (Some(a), Some(b)) if b < a => self.leading_dead -= dead.range((incl(b), bound(Some(a)))).count(),
            (Some(a), Some(b)) => self.leading_dead += dead.range((incl(a), bound(Some(b)))).count(),
            (None, None) => {}
        }
    }

    /// Removes one life from the alive vertex `key`. Returns whether it died.
    fn use_life(&mut self, key: OrdKey<R>, time: R, child: Option<usize>) -> bool {
        let slot = self.alive.get_mut(&key).expect("alive key");
        slot.remaining -= 1;
        let id = slot.id;
        let died = slot.remaining == 0;
        if died {
            self.alive.remove(&key);
            self.num_dead += 1;
            if let Some(dead) = self.dead.as_mut() {
                dead.insert(key);
            } else if !self.opts.keep_forest {
                self.dead_labels.push(key.0);
            }
        }
        if self.opts.keep_forest {
            let v = &mut self.vertices[id];
            v.remaining_lives -= 1;
            match child {
                Some(c) => v.children.push(c),
                None => v.sink_hits += 1,
            }
            if died {
                v.death_time = Some(time);
            }
        }
        died
    }

    fn push_vertex(&mut self, label: R, time: R, lives: u32, parent: Option<usize>, is_source: bool) {
        if self.opts.keep_forest {
            self.vertices.push(VertexRecord {
                label,
                time,
                initial_lives: lives,
                remaining_lives: lives,
                parent,
                children: Vec::new(),
                arrival_index: self.num_vertices + 1,
                death_time: None,
                sink_hits: 0,
                is_source,
            });
        }
        self.num_vertices += 1;
    }

    /// Adds a source: a particle present at time zero, outside the tree count.
    /// Sources must precede every atom and sink.
    pub fn add_source(&mut self, label: R, lives: u32) -> Result<usize> {
        if self.started {
            return Err(Error::InvalidParameter("sources must be added before any event".into()));
        }
        if lives == 0 {
            return Err(Error::InvalidParameter("a source needs at least one life".into()));
        }
        self.claim_label(label)?;
        let old_min = self.tracked_min();
        let id = self.num_vertices;
        self.alive.insert(OrdKey(label), Slot { id, remaining: lives });
        self.push_vertex(label, R::zero(), lives, None, true);
        self.refresh_leading_dead(old_min);
        Ok(id)
    }

    /// Inserts an item arriving at `time`; times must strictly increase.
    pub fn insert_at(&mut self, label: R, time: R, lives: u32) -> Result<Insertion> {
        if lives == 0 {
            return Err(Error::InvalidParameter("an item needs at least one life".into()));
        }
        self.check_time(time)?;
        self.claim_label(label)?;
        self.started = true;
        let key = OrdKey(label);
        let old_min = self.tracked_min();
        let id = self.num_vertices;
        let pred = self.alive.range(..key).next_back().map(|(k, s)| (*k, s.id));
        let (parent, parent_died) = match pred {
            Some((pk, pid)) => (Some(pid), self.use_life(pk, time, Some(id))),
            None => {
                self.root_count += 1;
                (None, false)
            }
        };
        self.alive.insert(key, Slot { id, remaining: lives });
        self.push_vertex(label, time, lives, parent, false);
        self.n += 1;
        self.last_time = Some(time);
        self.refresh_leading_dead(old_min);
        Ok(Insertion {
            vertex: id,
            parent,
            created_root: parent.is_none(),
            parent_died,
        })
    }

    /// Inserts the next item of a sequence; its time is its 1-based rank.
    /// Do not mix with [`SortState::insert_at`].
    pub fn insert_next(&mut self, label: R, lives: u32) -> Result<Insertion> {
        let t = R::from_usize(self.n + 1).ok_or_else(|| Error::InvalidParameter("time overflow".into()))?;
        self.insert_at(label, t, lives)
    }

    /// A sink at `time`: the alive particle with the largest label loses a life.
    pub fn apply_sink(&mut self, time: R) -> Result<SinkOutcome> {
        self.check_time(time)?;
        self.started = true;
        self.last_time = Some(time);
        let Some((&key, slot)) = self.alive.iter().next_back() else {
            return Ok(SinkOutcome {
                affected: None,
                died: false,
            });
        };
        let id = slot.id;
        let old_min = self.tracked_min();
        let died = self.use_life(key, time, None);
        self.refresh_leading_dead(old_min);
        Ok(SinkOutcome {
            affected: Some(id),
            died,
        })
    }

    /// An inert sink: only advances the clock.
    pub(crate) fn apply_sink_noop(&mut self, time: R) -> Result<()> {
        self.check_time(time)?;
        self.started = true;
        self.last_time = Some(time);
        Ok(())
    }

    /// Checks the structural invariants of the forest.
    pub fn check_invariants(&self) -> Result<()> {
        self.require_forest("check_invariants")?;
        let bad = |m: String| Err(Error::MalformedRecord(m));
        let mut edges = 0;
        let mut roots = 0;
        let mut alive = 0;
        for (id, v) in self.vertices.iter().enumerate() {
            let used = v.initial_lives - v.remaining_lives;
            if used as usize != v.children.len() + v.sink_hits as usize {
                return bad(format!("vertex {id}: lives used {used} != children + sink hits"));
            }
            if v.is_alive() {
                alive += 1;
                if self.alive.get(&OrdKey(v.label)).map(|s| (s.id, s.remaining)) != Some((id, v.remaining_lives)) {
                    return bad(format!("vertex {id} missing from the alive index"));
                }
            } else if v.death_time.is_none() {
                return bad(format!("dead vertex {id} without death time"));
            }
            match v.parent {
                Some(p) => {
                    edges += 1;
                    let pv = &self.vertices[p];
                    if !(pv.label < v.label) || !pv.children.contains(&id) {
                        return bad(format!("vertex {id}: bad parent {p}"));
                    }
                }
                None if !v.is_source => roots += 1,
                None => {}
            }
            if v.children.windows(2).any(|w| self.vertices[w[0]].time > self.vertices[w[1]].time) {
                return bad(format!("vertex {id}: children out of time order"));
            }
        }
        if roots != self.root_count || self.n != self.root_count + edges {
            return bad(format!("root count {} != {roots} or n {} != roots + {edges}", self.root_count, self.n));
        }
        if alive != self.alive.len() {
            return bad("alive index size mismatch".into());
        }
        if self.dead.is_some() {
            let min = self.min_alive_label();
            let scan = self
                .vertices
                .iter()
                .filter(|v| !v.is_alive() && min.map_or(true, |m| v.label < m))
                .count();
            if scan != self.leading_dead {
                return bad(format!("leading dead {} != scan {scan}", self.leading_dead));
            }
        }
        Ok(())
    }

    /// Serializable view of the forest.
    pub fn forest(&self) -> Result<Forest<R>> {
        self.require_forest("forest")?;
        Ok(Forest {
            n: self.n,
            root_count: self.root_count,
            vertices: self
                .vertices
                .iter()
                .enumerate()
                .map(|(id, v)| ForestVertex {
                    id,
                    label: v.label,
                    initial_lives: v.initial_lives,
                    remaining_lives: v.remaining_lives,
                    parent: v.parent,
                    arrival_index: v.arrival_index,
                    time: v.time,
                })
                .collect(),
        })
    }
}

/// Sorts `items` in order; equivalent to folding [`SortState::insert_next`].
pub fn sort<R: Real>(items: &[(R, u32)]) -> Result<SortState<R>> {
    let mut state = SortState::new();
    for &(label, lives) in items {
        state.insert_next(label, lives)?;
    }
    Ok(state)
}

/// Root count of `items` without keeping the forest.
pub fn root_count<R: Real>(items: &[(R, u32)]) -> Result<usize> {
    let mut state = SortState::counting(false);
    for &(label, lives) in items {
        state.insert_next(label, lives)?;
    }
    Ok(state.root_count())
}

/// JSON form of a sorted forest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "R: Real")]
pub struct Forest<R> {
    pub n: usize,
    pub root_count: usize,
    pub vertices: Vec<ForestVertex<R>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "R: Real")]
pub struct ForestVertex<R> {
    pub id: usize,
    pub label: R,
    pub initial_lives: u32,
    pub remaining_lives: u32,
    pub parent: Option<usize>,
    pub arrival_index: usize,
    pub time: R,
}

impl<R: Real> Forest<R> {
    /// Rebuilds the forest by re-inserting its vertices in time order.
    pub fn replay(&self) -> Result<SortState<R>> {
        let mut order: Vec<&ForestVertex<R>> = self.vertices.iter().collect();
        order.sort_by(|a, b| OrdKey(a.time).cmp(&OrdKey(b.time)).then(a.arrival_index.cmp(&b.arrival_index)));
        let mut state = SortState::new();
        for v in order {
            if v.time == R::zero() && self.n < self.vertices.len() {
                state.add_source(v.label, v.initial_lives)?;
            } else {
                state.insert_at(v.label, v.time, v.initial_lives)?;
            }
        }
        Ok(state)
    }
}
