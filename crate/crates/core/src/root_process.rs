//! The root process: root heights as the box grows to the left.
//!
//! Read the graphical representation from right to left. The set of heights
//! at which horizontal lines cross the left edge evolves as a Markov process
//! in the box width `x`: an atom `(-u, s, nu)` adds a root at `s` and absorbs
//! the `nu` lowest roots above `s`; a source `(-u, nu)` on the bottom edge
//! absorbs the `nu` lowest roots. Sinks of the particle system play the role
//! of the initial configuration.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::distributions::Atom;
use crate::error::{Error, Result};
use crate::hammersley_process::{simulate_on_atoms, Horizon, SourcesSinks};
use crate::heap_sort::SortState;
use crate::scalar::{OrdKey, Real};

/// Sorted set of root heights in `(0, t_max)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RootConfiguration<R: Real> {
    heights: BTreeSet<OrdKey<R>>,
}

impl<R: Real> RootConfiguration<R> {
    pub fn new() -> Self {
        Self {
            heights: BTreeSet::new(),
        }
    }

    /// Builds a configuration, rejecting repeated or out-of-range heights.
    pub fn from_heights(heights: &[R], t_max: R) -> Result<Self> {
        let mut c = Self::new();
        for &s in heights {
            check_height(s, t_max)?;
            if !c.heights.insert(OrdKey(s)) {
                return Err(Error::DuplicateTime(s.as_f64()));
            }
        }
        Ok(c)
    }

    pub fn len(&self) -> usize {
        self.heights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heights.is_empty()
    }

    pub fn heights(&self) -> Vec<R> {
        self.heights.iter().map(|k| k.0).collect()
    }

    pub fn contains(&self, s: R) -> bool {
        self.heights.contains(&OrdKey(s))
    }

    /// Number of roots in `[a, b]`.
    pub fn count_in(&self, a: R, b: R) -> usize {
        if b < a {
            return 0;
        }
        self.heights.range(OrdKey(a)..=OrdKey(b)).count()
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.heights.is_subset(&other.heights)
    }

    /// Inserts `s` and removes the `nu` lowest roots strictly above it.
    pub fn apply_atom(&mut self, s: R, nu: u32) -> Result<()> {
        let key = OrdKey(s);
        if !self.heights.insert(key) {
            return Err(Error::DuplicateTime(s.as_f64()));
        }
        let above: Vec<OrdKey<R>> = self
            .heights
            .range((std::ops::Bound::Excluded(key), std::ops::Bound::Unbounded))
            .take(nu as usize)
            .copied()
            .collect();
        for k in above {
            self.heights.remove(&k);
        }
        Ok(())
    }

    /// Removes the `nu` lowest roots.
    pub fn apply_source(&mut self, nu: u32) {
        for _ in 0..nu {
            if self.heights.pop_first().is_none() {
                break;
            }
        }
    }
}

impl<R: Real> Serialize for RootConfiguration<R> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.heights().serialize(s)
    }
}

impl<'de, R: Real> Deserialize<'de> for RootConfiguration<R> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v: Vec<R> = Vec::deserialize(d)?;
        let mut c = Self::new();
        for s in v {
            if !s.is_finite() || !c.heights.insert(OrdKey(s)) {
                return Err(serde::de::Error::custom(format!("bad root height {s}")));
            }
        }
        Ok(c)
    }
}

fn check_height<R: Real>(s: R, t_max: R) -> Result<()> {
    if !s.is_finite() {
        return Err(Error::NonFinite(s.as_f64()));
    }
    if !(s > R::zero() && s < t_max) {
        return Err(Error::HeightOutOfRange {
            height: s.as_f64(),
            t_max: t_max.as_f64(),
        });
    }
    Ok(())
}

/// A bottom-edge source at `position < 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "R: Real")]
pub struct RootSource<R> {
    pub position: R,
    pub lives: u32,
}

/// Final configuration and the configurations at requested widths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "R: Real")]
pub struct RootEvolution<R: Real> {
    pub x_max: R,
    pub final_config: RootConfiguration<R>,
    pub checkpoints: Vec<(R, RootConfiguration<R>)>,
}

/// Runs the root process from `sinks_init` over atoms and sources with
/// labels in `[-x_max, 0)`, scanning by decreasing label. Events further left
/// than `-x_max` are ignored. Checkpoint widths must be sorted.
pub fn evolve<R: Real>(
    sinks_init: &RootConfiguration<R>,
    sources: &[RootSource<R>],
    atoms: &[Atom<R>],
    x_max: R,
    t_max: R,
    checkpoints: &[R],
) -> Result<RootEvolution<R>> {
    if !(x_max >= R::zero()) || !(t_max > R::zero()) {
        return Err(Error::InvalidParameter(format!("x_max = {x_max}, t_max = {t_max}")));
    }
    for s in sinks_init.heights.iter() {
        check_height(s.0, t_max)?;
    }
    if checkpoints.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter("checkpoints must be sorted".into()));
    }
    enum Ev<R> {
        Atom(R, u32),
        Source(u32),
    }
    let mut events: Vec<(R, Ev<R>)> = Vec::with_capacity(atoms.len() + sources.len());
    for a in atoms {
        if !(a.label < R::zero()) || !a.label.is_finite() {
            return Err(Error::InvalidParameter(format!("atom label {} is not negative", a.label)));
        }
        check_height(a.time, t_max)?;
        if a.lives == 0 {
            return Err(Error::InvalidParameter("an atom needs at least one life".into()));
        }
        if -a.label <= x_max {
            events.push((-a.label, Ev::Atom(a.time, a.lives)));
        }
    }
    for s in sources {
        if !(s.position < R::zero()) || !s.position.is_finite() {
            return Err(Error::InvalidParameter(format!("source at {} is not negative", s.position)));
        }
        if -s.position <= x_max {
            events.push((-s.position, Ev::Source(s.lives)));
        }
    }
    events.sort_by(|a, b| OrdKey(a.0).cmp(&OrdKey(b.0)));
    if let Some(w) = events.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::DuplicateLabel(-w[0].0.as_f64()));
    }

    let mut config = sinks_init.clone();
    let mut snaps = Vec::with_capacity(checkpoints.len());
    let mut k = 0;
    for (x, ev) in events {
        while k < checkpoints.len() && checkpoints[k] < x {
            snaps.push((checkpoints[k], config.clone()));
            k += 1;
        }
        match ev {
            Ev::Atom(s, nu) => config.apply_atom(s, nu)?,
            Ev::Source(nu) => config.apply_source(nu),
        }
    }
    for &c in &checkpoints[k..] {
        snaps.push((c, config.clone()));
    }
    Ok(RootEvolution {
        x_max,
        final_config: config,
        checkpoints: snaps,
    })
}

/// Pathwise comparison of the root process with the forward construction.
#[derive(Debug, Clone, PartialEq)]
pub struct DualityOutcome<R: Real> {
    /// Heights produced by the root process at `x = 1`.
    pub root_process: Vec<R>,
    /// Times of the root events of the graphical representation.
    pub root_events: Vec<R>,
    /// Root count of heap sorting the atoms by time.
    pub sort_count: usize,
}

impl<R: Real> DualityOutcome<R> {
    pub fn agrees(&self) -> bool {
        self.root_process == self.root_events && self.root_process.len() == self.sort_count
    }
}

/// Runs both constructions on atoms of `[0, 1] x (0, t_max)`.
pub fn duality_check<R: Real>(atoms: &[Atom<R>], t_max: R) -> Result<DualityOutcome<R>> {
    let shifted: Vec<Atom<R>> = atoms
        .iter()
        .map(|a| Atom::new(a.label - R::one(), a.time, a.lives))
        .collect();
    if shifted.iter().any(|a| !(a.label < R::zero())) {
        return Err(Error::InvalidParameter("labels must lie in [0, 1)".into()));
    }
    let roots = evolve(&RootConfiguration::new(), &[], &shifted, R::one(), t_max, &[])?;
    let mut by_time = atoms.to_vec();
    by_time.sort_by_key(|a| OrdKey(a.time));
    let sim = simulate_on_atoms(Horizon::new(R::zero(), R::one(), t_max)?, &by_time, &SourcesSinks::none(), &[])?;
    let mut events: Vec<R> = sim.record.root_events.iter().map(|r| r.time).collect();
    events.sort_by_key(|&t| OrdKey(t));
    Ok(DualityOutcome {
        root_process: roots.final_config.heights(),
        root_events: events,
        sort_count: sim.state.root_count(),
    })
}

/// Right-continuous non-decreasing step function on `[0, 1]` that becomes
/// `+inf` at `a_f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "R: Real")]
pub struct MonotoneBoundary<R> {
    /// `(x, value)`: `f = value` on `[x, next x)`; `f = 0` before the first.
    steps: Vec<(R, R)>,
    a_f: R,
}

impl<R: Real> MonotoneBoundary<R> {
    pub fn new(steps: Vec<(R, R)>, a_f: R) -> Result<Self> {
        let mut prev: Option<(R, R)> = None;
        for &(x, v) in &steps {
            if !x.is_finite() || !v.is_finite() || v < R::zero() {
                return Err(Error::InvalidParameter(format!("bad step ({x}, {v})")));
            }
            if let Some((px, pv)) = prev {
                if !(x > px) || v < pv {
                    return Err(Error::InvalidParameter("steps must be increasing and non-decreasing".into()));
                }
            }
            prev = Some((x, v));
        }
        if let Some((x, _)) = prev {
            if !(a_f > x) {
                return Err(Error::InvalidParameter(format!("a_f = {a_f} before the last step")));
            }
        }
        Ok(Self { steps, a_f })
    }

    /// `f == 0` with `a_f = +inf`.
    pub fn zero() -> Self {
        Self {
            steps: Vec::new(),
            a_f: R::infinity(),
        }
    }

    /// Lowest non-decreasing step majorant of `points`, infinite from `a_f`.
    pub fn majorant(points: &[(R, R)], a_f: R) -> Result<Self> {
        let mut pts: Vec<(R, R)> = points.to_vec();
        pts.sort_by_key(|p| OrdKey(p.0));
        let mut steps: Vec<(R, R)> = Vec::new();
        let mut level = R::zero();
        for (x, v) in pts {
            if v > level {
                level = v;
                match steps.last_mut() {
                    Some(last) if last.0 == x => last.1 = v,
                    _ => steps.push((x, v)),
                }
            }
        }
        Self::new(steps, a_f)
    }

    pub fn a_f(&self) -> R {
        self.a_f
    }

    pub fn steps(&self) -> &[(R, R)] {
        &self.steps
    }

    pub fn eval(&self, x: R) -> R {
        if x >= self.a_f {
            return R::infinity();
        }
        let i = self.steps.partition_point(|s| s.0 <= x);
        if i == 0 {
            R::zero()
        } else {
            self.steps[i - 1].1
        }
    }

    /// Whether `(x, t)` lies strictly above the graph, left of `a_f`.
    pub fn contains(&self, x: R, t: R) -> bool {
        x < self.a_f && t > self.eval(x)
    }
}

/// `(x, t, nu) -> (x, t - f(x), nu)` for atoms strictly above `f`.
pub fn falling_map<R: Real>(atoms: &[Atom<R>], f: &MonotoneBoundary<R>) -> Result<Vec<Atom<R>>> {
    atoms
        .iter()
        .map(|a| {
            if !f.contains(a.label, a.time) {
                return Err(Error::BelowBoundary {
                    label: a.label.as_f64(),
                    time: a.time.as_f64(),
                });
            }
            Ok(Atom::new(a.label, a.time - f.eval(a.label), a.lives))
        })
        .collect()
}

/// Root count of the atoms with time `<= t`, sorted in time order.
pub fn root_count_below<R: Real>(atoms: &[Atom<R>], t: R) -> Result<usize> {
    let mut inside: Vec<Atom<R>> = atoms.iter().filter(|a| a.time <= t).copied().collect();
    inside.sort_by_key(|a| OrdKey(a.time));
    let mut s = SortState::counting(false);
    for a in inside {
        s.insert_at(a.label, a.time, a.lives)?;
    }
    Ok(s.root_count())
}

/// The three counts `R(xi on B_t)`, `R(F(xi on B_t))`, `R(F(xi) on B_t)`,
/// which are non-decreasing in that order.
pub fn falling_counts<R: Real>(atoms: &[Atom<R>], f: &MonotoneBoundary<R>, t: R) -> Result<[usize; 3]> {
    let in_box: Vec<Atom<R>> = atoms.iter().filter(|a| a.time <= t).copied().collect();
    let a = root_count_below(&in_box, t)?;
    let b = root_count_below(&falling_map(&in_box, f)?, t)?;
    let c = root_count_below(&falling_map(atoms, f)?, t)?;
    Ok([a, b, c])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_events_keeps_sinks() {
        let init = RootConfiguration::from_heights(&[0.3, 0.6], 1.0).unwrap();
        let out = evolve(&init, &[], &[], 2.0, 1.0, &[]).unwrap();
        assert_eq!(out.final_config, init);
    }

    #[test]
    fn atom_absorbs_at_most_what_is_above() {
        let init = RootConfiguration::from_heights(&[0.2, 0.6, 0.8], 1.0).unwrap();
        let out = evolve(&init, &[], &[Atom::new(-0.5, 0.4, 3)], 1.0, 1.0, &[]).unwrap();
        assert_eq!(out.final_config.heights(), vec![0.2, 0.4]);
    }

    #[test]
    fn source_absorbs_lowest() {
        let init = RootConfiguration::from_heights(&[0.2, 0.6, 0.8], 1.0).unwrap();
        let src = [RootSource { position: -0.5, lives: 2 }];
        let out = evolve(&init, &src, &[], 1.0, 1.0, &[0.25, 0.75]).unwrap();
        assert_eq!(out.final_config.heights(), vec![0.8]);
        assert_eq!(out.checkpoints[0].1, init);
        assert_eq!(out.checkpoints[1].1.heights(), vec![0.8]);
    }

    #[test]
    fn rejects_heights_and_ties() {
        assert!(evolve(&RootConfiguration::new(), &[], &[Atom::new(-0.5, 1.0, 1)], 1.0, 1.0, &[]).is_err());
        let init = RootConfiguration::from_heights(&[0.5], 1.0).unwrap();
        assert!(evolve(&init, &[], &[Atom::new(-0.5, 0.5, 1)], 1.0, 1.0, &[]).is_err());
    }

    #[test]
    fn single_atom_duality() {
        let d = duality_check(&[Atom::new(0.4, 0.3, 2)], 1.0).unwrap();
        assert!(d.agrees());
        assert_eq!(d.root_process, vec![0.3]);
    }

    #[test]
    fn boundary_eval() {
        let f = MonotoneBoundary::<f64>::new(vec![(0.2, 1.4)], 1.0).unwrap();
        assert_eq!(f.eval(0.1), 0.0);
        assert_eq!(f.eval(0.2), 1.4);
        assert!(f.eval(1.0).is_infinite());
        assert!(MonotoneBoundary::new(vec![(0.2, 1.0), (0.3, 0.5)], 1.0).is_err());
        let m = MonotoneBoundary::majorant(&[(0.5, 0.3), (0.2, 0.1), (0.4, 0.05)], 0.9).unwrap();
        assert_eq!(m.steps(), &[(0.2, 0.1), (0.5, 0.3)]);
    }

    #[test]
    fn falling_rejects_points_below() {
        let f = MonotoneBoundary::<f64>::new(vec![(0.2, 1.4)], 1.0).unwrap();
        assert!(falling_map(&[Atom::new(0.3, 1.0, 1)], &f).is_err());
        assert!(falling_map(&[Atom::new(0.3, 1.4, 1)], &f).is_err());
        let z = MonotoneBoundary::zero();
        let a = [Atom::new(0.3, 0.7, 2)];
        assert_eq!(falling_map(&a, &z).unwrap(), a.to_vec());
    }

    #[test]
    fn three_panel_instance() {
        let f = MonotoneBoundary::<f64>::new(vec![(0.2, 1.4)], 1.0).unwrap();
        let atoms = [Atom::new(0.67, 1.66, 1), Atom::new(0.11, 1.22, 1), Atom::new(0.2, 2.6, 2)];
        assert_eq!(falling_counts(&atoms, &f, 2.0).unwrap(), [1, 2, 3]);
    }
}
