//! Rightmost insertion by a second-class particle.
//!
//! Adding an atom to the right of every existing label changes the forest
//! only along one path. Starting from the new atom, the particle moves left
//! until it meets a vertex alive at its height (or the left edge, which makes
//! a new root). The current atom attaches there. If that vertex was alive at
//! the top it simply loses a life and the path ends. Otherwise its last child
//! is displaced, and the particle climbs to that child's height and continues
//! left from the vertex it was displaced from.

use crate::distributions::Atom;
use crate::error::{Error, Result};
use crate::hammersley_process::{GraphicalRecord, HorizontalSegment, RootEvent, VerticalSegment};
use crate::scalar::{OrdKey, Real};

use super::{Slot, SortState};

/// Result of [`insert_rightmost`].
#[derive(Debug, Clone, PartialEq)]
pub struct RightmostInsertion<R> {
    pub vertex: usize,
    /// The particle left through the left edge: one more tree.
    pub created_root: bool,
    /// Corners of the second-class particle path, starting at the atom.
    pub path: Vec<(R, R)>,
}

/// Inserts `atom`, whose label exceeds every label present, into a finished
/// run without re-sorting. `state` and `record` must describe the same run
/// (as returned together by the simulator) and the run must have no sinks.
pub fn insert_rightmost<R: Real>(
    state: &mut SortState<R>,
    record: &mut GraphicalRecord<R>,
    atom: Atom<R>,
) -> Result<RightmostInsertion<R>> {
    if !state.opts.keep_forest || state.num_vertices != record.num_vertices() {
        return Err(Error::InvalidParameter("state and record describe different runs".into()));
    }
    if !record.sink_events.is_empty() {
        return Err(Error::Unsupported("rightmost insertion into a run with sinks".into()));
    }
    if atom.lives == 0 {
        return Err(Error::InvalidParameter("an item needs at least one life".into()));
    }
    let h = record.horizon;
    if !(atom.time > R::zero() && atom.time <= h.t_max) || !atom.time.is_finite() {
        return Err(Error::InvalidParameter(format!("time {} outside (0, t_max]", atom.time)));
    }
    if let Some(&last) = record.label_order.last() {
        let max = record.vertical_segments[last].label;
        if !(atom.label > max) {
            return Err(Error::LabelNotMaximal {
                label: atom.label.as_f64(),
                max: max.as_f64(),
            });
        }
    }
    if atom.label > h.x_hi {
        return Err(Error::InvalidParameter(format!("label {} beyond x_hi", atom.label)));
    }
    state.claim_label(atom.label)?;

    let old_min = state.tracked_min();
    let new_id = state.num_vertices;
    state.alive.insert(OrdKey(atom.label), Slot { id: new_id, remaining: atom.lives });
    state.push_vertex(atom.label, atom.time, atom.lives, None, false);
    state.n += 1;
    state.last_time = Some(state.last_time.map_or(atom.time, |t| t.max(atom.time)));
    record.atoms.push(atom);
    record.vertical_segments.push(VerticalSegment {
        vertex: new_id,
        label: atom.label,
        t_birth: atom.time,
        t_end: h.t_max,
        dead: false,
    });
    record.horizontal_segments.push(HorizontalSegment {
        time: atom.time,
        x_from: h.x_lo,
        x_to: atom.label,
        child: new_id,
        parent: None,
    });
    record.rank.push(record.label_order.len());
    record.label_order.push(new_id);

    let ns = record.sources.len();
    let mut path = vec![(atom.label, atom.time)];
    let mut current = new_id;
    let mut height = atom.time;
    let mut scan_end = record.label_order.len() - 1;
    let created_root = loop {
        let found = record.label_order[..scan_end].iter().rev().copied().find(|&v| {
            let s = &record.vertical_segments[v];
            s.t_birth < height && (!s.dead || s.t_end > height)
        });
        let Some(q) = found else {
            path.push((h.x_lo, height));
            state.root_count += 1;
            state.vertices[current].parent = None;
            record.root_events.push(RootEvent {
                time: height,
                vertex: current,
            });
            let seg = &mut record.horizontal_segments[current - ns];
            seg.x_from = h.x_lo;
            seg.parent = None;
            break true;
        };
        let q_label = record.vertical_segments[q].label;
        path.push((q_label, height));
        state.vertices[current].parent = Some(q);
        let seg = &mut record.horizontal_segments[current - ns];
        seg.x_from = q_label;
        seg.parent = Some(q);
        let pos = {
            let times = &state.vertices;
            state.vertices[q].children.partition_point(|&c| times[c].time < height)
        };
        state.vertices[q].children.insert(pos, current);

        if !record.vertical_segments[q].dead {
            path.push((q_label, h.t_max));
            let died = state.use_life_silently(q);
            if died {
                let death = state.vertices[q].death_time.expect("just died");
                let vs = &mut record.vertical_segments[q];
                vs.dead = true;
                vs.t_end = death;
            }
            break false;
        }
        let displaced = state.vertices[q].children.pop().expect("a dead vertex has children");
        let new_death = state.vertices[state.vertices[q].children[state.vertices[q].children.len() - 1]].time;
        let old_death = record.vertical_segments[q].t_end;
        state.vertices[q].death_time = Some(new_death);
        record.vertical_segments[q].t_end = new_death;
        path.push((q_label, old_death));
        current = displaced;
        height = state.vertices[displaced].time;
        scan_end = record.rank[q];
    };
    state.refresh_leading_dead(old_min);
    Ok(RightmostInsertion {
        vertex: new_id,
        created_root,
        path,
    })
}

impl<R: Real> SortState<R> {
    /// Takes a life from an alive vertex whose new child is already linked;
    /// the death time becomes the time of its last child.
    fn use_life_silently(&mut self, id: usize) -> bool {
        let key = OrdKey(self.vertices[id].label);
        let slot = self.alive.get_mut(&key).expect("alive vertex");
        slot.remaining -= 1;
        let v = &mut self.vertices[id];
        v.remaining_lives -= 1;
        if v.remaining_lives > 0 {
            return false;
        }
        let last = *v.children.last().expect("child just added");
        let death = self.vertices[last].time;
        self.vertices[id].death_time = Some(death);
        self.alive.remove(&key);
        self.num_dead += 1;
        if let Some(dead) = self.dead.as_mut() {
            dead.insert(key);
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hammersley_process::{simulate_on_atoms, Horizon, SourcesSinks};

    fn run(atoms: &[Atom<f64>]) -> (SortState<f64>, GraphicalRecord<f64>) {
        let mut sorted = atoms.to_vec();
        sorted.sort_by_key(|a| OrdKey(a.time));
        let sim = simulate_on_atoms(Horizon::new(0.0, 1.0, 1.0).unwrap(), &sorted, &SourcesSinks::none(), &[]).unwrap();
        (sim.state, sim.record)
    }

    #[test]
    fn matches_resort_on_a_small_case() {
        let base = [
            Atom::new(0.1, 0.2, 1),
            Atom::new(0.3, 0.4, 1),
            Atom::new(0.2, 0.6, 2),
            Atom::new(0.4, 0.8, 1),
        ];
        let extra = Atom::new(0.9, 0.3, 1);
        let (mut state, mut record) = run(&base);
        let out = insert_rightmost(&mut state, &mut record, extra).unwrap();
        let mut all = base.to_vec();
        all.push(extra);
        let (full, _) = run(&all);
        assert_eq!(state.root_count(), full.root_count());
        assert_eq!(state.life_word().unwrap(), full.life_word().unwrap());
        assert_eq!(out.path[0], (0.9, 0.3));
        state.check_invariants().unwrap();
        record.validate().unwrap();
    }

    #[test]
    fn label_must_be_maximal() {
        let (mut state, mut record) = run(&[Atom::new(0.5, 0.5, 1)]);
        assert!(matches!(
            insert_rightmost(&mut state, &mut record, Atom::new(0.4, 0.7, 1)),
            Err(Error::LabelNotMaximal { .. })
        ));
    }

    #[test]
    fn into_empty_run_creates_a_root() {
        let (mut state, mut record) = run(&[]);
        let out = insert_rightmost(&mut state, &mut record, Atom::new(0.5, 0.5, 2)).unwrap();
        assert!(out.created_root);
        assert_eq!(out.path, vec![(0.5, 0.5), (0.0, 0.5)]);
    }
}
