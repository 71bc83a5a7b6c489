//! Observational equivalence over a networked-plant-shaped automaton.
//!
//! Two states are observationally equivalently reachable when some words
//! reaching them from the initial state have the same projection onto the
//! observable alphabet. The relation is computed through the observer: the
//! subset construction that treats all non-observable events as silent. A
//! state's class `OBS(x)` is the union of the observer subset-states that
//! contain `x`; unreachable states get an empty class.

use std::collections::{BTreeMap, BTreeSet};

use crate::events::{EventId, EventTable};
use crate::tdes::{StateId, Tdes};

#[derive(Debug, Clone)]
pub struct ObsRelation {
    /// For each state of the underlying automaton, the sorted set of states
    /// observationally equivalently reachable with it.
    classes: BTreeMap<StateId, BTreeSet<StateId>>,
    /// The determinized observer; each state decodes to its subset.
    pub observer: Tdes,
    /// Subset contents of each observer state.
    subsets: Vec<BTreeSet<StateId>>,
}

impl ObsRelation {
    /// `OBS(x)`; empty for states the observer never reaches.
    pub fn class(&self, x: StateId) -> BTreeSet<StateId> {
        self.classes.get(&x).cloned().unwrap_or_default()
    }

    /// `OBS(X') = ∪ OBS(x)` over `x ∈ X'`.
    pub fn class_of_set(&self, xs: &BTreeSet<StateId>) -> BTreeSet<StateId> {
        let mut out = BTreeSet::new();
        for &x in xs {
            out.extend(self.class(x));
        }
        out
    }

    pub fn observer_subsets(&self) -> &[BTreeSet<StateId>] {
        &self.subsets
    }
}

/// Builds the observer of `t` for the given observable alphabet and derives
/// the OBS relation from the subset-states.
pub fn obs_relation(t: &Tdes, observable: &BTreeSet<EventId>, events: &EventTable) -> ObsRelation {
    let keep: BTreeSet<EventId> = observable
        .iter()
        .copied()
        .filter(|e| t.alphabet.contains(e))
        .collect();
    let observer = t
        .natural_projection(&keep, events)
        .expect("observable alphabet filtered to the automaton alphabet");
    // Recover each observer state's subset from its decode payload.
    let mut subsets: Vec<BTreeSet<StateId>> = Vec::with_capacity(observer.state_count());
    for s in observer.states() {
        let payload = observer.decode(s).expect("projection states carry their subset");
        let set: BTreeSet<StateId> = payload
            .split('+')
            .map(|name| t.state_by_name(name).expect("subset member exists in source"))
            .collect();
        subsets.push(set);
    }
    let mut classes: BTreeMap<StateId, BTreeSet<StateId>> = BTreeMap::new();
    for set in &subsets {
        for &x in set {
            classes.entry(x).or_default().extend(set.iter().copied());
        }
    }
    ObsRelation {
        classes,
        observer,
        subsets,
    }
}
