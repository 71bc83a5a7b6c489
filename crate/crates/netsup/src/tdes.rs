//! Deterministic partial-transition automata over an event alphabet containing
//! `tick`, and the classical operations on them: reachability, blocking and
//! time-lock analysis, synchronous product, natural projection and requirement
//! completion.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use thiserror::Error;

use crate::events::{EventId, EventTable};

/// Index of a state inside one [`Tdes`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateId(pub usize);

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TdesError {
    #[error("projection alphabet contains `{0}` which is not in the automaton alphabet")]
    ProjectionAlphabet(String),
    #[error("duplicate transition from `{state}` on `{event}`")]
    DuplicateTransition { state: String, event: String },
    #[error("unknown state `{0}`")]
    UnknownState(String),
}

/// A timed discrete-event system: finite deterministic automaton with a
/// partial transition function, one initial state and a set of marked states.
///
/// `decode` carries an opaque human-readable payload per state (source-state
/// sets for projections, composite tuples for networked constructions). It is
/// never interpreted by the operations here.
#[derive(Debug, Clone)]
pub struct Tdes {
    pub name: String,
    state_names: Vec<String>,
    state_index: HashMap<String, StateId>,
    pub alphabet: BTreeSet<EventId>,
    trans: BTreeMap<(StateId, EventId), StateId>,
    pub initial: StateId,
    pub marked: BTreeSet<StateId>,
    decode: Vec<Option<String>>,
}

impl Tdes {
    /// Creates an automaton with a single initial state.
    pub fn new(name: &str, alphabet: impl IntoIterator<Item = EventId>, initial: &str) -> Self {
        let mut t = Tdes {
            name: name.to_string(),
            state_names: Vec::new(),
            state_index: HashMap::new(),
            alphabet: alphabet.into_iter().collect(),
            trans: BTreeMap::new(),
            initial: StateId(0),
            marked: BTreeSet::new(),
            decode: Vec::new(),
        };
        t.add_state(initial);
        t
    }

    /// Adds a state (idempotent per name), returning its id.
    pub fn add_state(&mut self, name: &str) -> StateId {
        if let Some(&id) = self.state_index.get(name) {
            return id;
        }
        let id = StateId(self.state_names.len());
        self.state_names.push(name.to_string());
        self.state_index.insert(name.to_string(), id);
        self.decode.push(None);
        id
    }

    pub fn state_count(&self) -> usize {
        self.state_names.len()
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> {
        (0..self.state_names.len()).map(StateId)
    }

    pub fn state_name(&self, s: StateId) -> &str {
        &self.state_names[s.0]
    }

    pub fn state_by_name(&self, name: &str) -> Option<StateId> {
        self.state_index.get(name).copied()
    }

    pub fn mark(&mut self, s: StateId) {
        self.marked.insert(s);
    }

    pub fn set_decode(&mut self, s: StateId, payload: String) {
        self.decode[s.0] = Some(payload);
    }

    pub fn decode(&self, s: StateId) -> Option<&str> {
        self.decode[s.0].as_deref()
    }

    /// Inserts a transition, rejecting nondeterminism.
    pub fn add_trans(&mut self, src: StateId, ev: EventId, dst: StateId) -> Result<(), TdesError> {
        if self.trans.contains_key(&(src, ev)) {
            return Err(TdesError::DuplicateTransition {
                state: self.state_names[src.0].clone(),
                event: format!("{}", ev.0),
            });
        }
        self.trans.insert((src, ev), dst);
        Ok(())
    }

    /// Removes a transition if present; returns whether one was removed.
    pub fn remove_trans(&mut self, src: StateId, ev: EventId) -> bool {
        self.trans.remove(&(src, ev)).is_some()
    }

    pub fn step(&self, s: StateId, ev: EventId) -> Option<StateId> {
        self.trans.get(&(s, ev)).copied()
    }

    pub fn run(&self, from: StateId, word: &[EventId]) -> Option<StateId> {
        let mut s = from;
        for &e in word {
            s = self.step(s, e)?;
        }
        Some(s)
    }

    pub fn accepts_word(&self, word: &[EventId]) -> bool {
        self.run(self.initial, word).is_some()
    }

    /// Outgoing transitions of a state, ordered by event id.
    pub fn outgoing(&self, s: StateId) -> impl Iterator<Item = (EventId, StateId)> + '_ {
        self.trans
            .range((s, EventId(0))..=(s, EventId(usize::MAX)))
            .map(|(&(_, e), &d)| (e, d))
    }

    pub fn transitions(&self) -> impl Iterator<Item = (StateId, EventId, StateId)> + '_ {
        self.trans.iter().map(|(&(s, e), &d)| (s, e, d))
    }

    pub fn transition_count(&self) -> usize {
        self.trans.len()
    }

    pub fn enabled_events(&self, s: StateId) -> Vec<EventId> {
        self.outgoing(s).map(|(e, _)| e).collect()
    }

    /// States reachable from `from` inside this automaton.
    pub fn reachable_from(&self, from: StateId) -> BTreeSet<StateId> {
        let mut seen = BTreeSet::from([from]);
        let mut queue = VecDeque::from([from]);
        while let Some(s) = queue.pop_front() {
            for (_, d) in self.outgoing(s) {
                if seen.insert(d) {
                    queue.push_back(d);
                }
            }
        }
        seen
    }

    /// Checks the well-formedness rules; returns a list of human-readable
    /// violations (empty when valid).
    pub fn validate(&self, events: &EventTable) -> Vec<String> {
        let mut problems = Vec::new();
        if !self.alphabet.contains(&events.tick()) {
            problems.push("tick absent from alphabet".to_string());
        }
        for (&(s, e), &d) in &self.trans {
            if s.0 >= self.state_names.len() || d.0 >= self.state_names.len() {
                problems.push(format!("transition endpoint out of range: {} -> {}", s.0, d.0));
            }
            if !self.alphabet.contains(&e) {
                problems.push(format!(
                    "transition from `{}` labelled `{}` not in alphabet",
                    self.state_names[s.0],
                    events.name(e)
                ));
            }
        }
        for &m in &self.marked {
            if m.0 >= self.state_names.len() {
                problems.push(format!("marked state out of range: {}", m.0));
            }
        }
        if self.initial.0 >= self.state_names.len() {
            problems.push("initial state out of range".to_string());
        }
        for &e in &self.alphabet {
            if e.0 >= events.len() {
                problems.push(format!("alphabet id {} unknown to the event table", e.0));
            }
        }
        problems
    }

    /// Restriction to the states reachable from the initial state. State ids
    /// are renumbered in BFS order (events in id order); names, marking and
    /// decode payloads are preserved.
    pub fn reach(&self) -> Tdes {
        let mut order = Vec::new();
        let mut map: HashMap<StateId, StateId> = HashMap::new();
        let mut queue = VecDeque::from([self.initial]);
        map.insert(self.initial, StateId(0));
        order.push(self.initial);
        while let Some(s) = queue.pop_front() {
            for (_, d) in self.outgoing(s) {
                if let std::collections::hash_map::Entry::Vacant(slot) = map.entry(d) {
                    slot.insert(StateId(order.len()));
                    order.push(d);
                    queue.push_back(d);
                }
            }
        }
        let mut out = Tdes {
            name: self.name.clone(),
            state_names: Vec::with_capacity(order.len()),
            state_index: HashMap::new(),
            alphabet: self.alphabet.clone(),
            trans: BTreeMap::new(),
            initial: StateId(0),
            marked: BTreeSet::new(),
            decode: Vec::with_capacity(order.len()),
        };
        for &old in &order {
            let id = StateId(out.state_names.len());
            out.state_names.push(self.state_names[old.0].clone());
            out.state_index.insert(self.state_names[old.0].clone(), id);
            out.decode.push(self.decode[old.0].clone());
            if self.marked.contains(&old) {
                out.marked.insert(id);
            }
        }
        for (&(s, e), &d) in &self.trans {
            if let (Some(&ns), Some(&nd)) = (map.get(&s), map.get(&d)) {
                out.trans.insert((ns, e), nd);
            }
        }
        out
    }

    /// Reachable states from which no marked state can be reached.
    pub fn blocking_states(&self) -> BTreeSet<StateId> {
        let reachable = self.reachable_from(self.initial);
        // Backward closure from the marked states over the reachable part.
        let mut preds: HashMap<StateId, Vec<StateId>> = HashMap::new();
        for (&(s, _), &d) in &self.trans {
            if reachable.contains(&s) && reachable.contains(&d) {
                preds.entry(d).or_default().push(s);
            }
        }
        let mut ok: BTreeSet<StateId> = self
            .marked
            .iter()
            .copied()
            .filter(|m| reachable.contains(m))
            .collect();
        let mut queue: VecDeque<StateId> = ok.iter().copied().collect();
        while let Some(s) = queue.pop_front() {
            if let Some(ps) = preds.get(&s) {
                for &p in ps {
                    if ok.insert(p) {
                        queue.push_back(p);
                    }
                }
            }
        }
        reachable.into_iter().filter(|s| !ok.contains(s)).collect()
    }

    /// Reachable states from which no `tick` can ever be performed, i.e. no
    /// word `w tick` is defined.
    pub fn timelock_states(&self, events: &EventTable) -> BTreeSet<StateId> {
        let tick = events.tick();
        let reachable = self.reachable_from(self.initial);
        let mut preds: HashMap<StateId, Vec<StateId>> = HashMap::new();
        for (&(s, _), &d) in &self.trans {
            if reachable.contains(&s) && reachable.contains(&d) {
                preds.entry(d).or_default().push(s);
            }
        }
        // Seeds: states with tick enabled.
        let mut live: BTreeSet<StateId> = reachable
            .iter()
            .copied()
            .filter(|&s| self.trans.contains_key(&(s, tick)))
            .collect();
        let mut queue: VecDeque<StateId> = live.iter().copied().collect();
        while let Some(s) = queue.pop_front() {
            if let Some(ps) = preds.get(&s) {
                for &p in ps {
                    if live.insert(p) {
                        queue.push_back(p);
                    }
                }
            }
        }
        reachable.into_iter().filter(|s| !live.contains(s)).collect()
    }

    /// `true` when every reachable state can reach a marked state.
    pub fn is_nonblocking(&self) -> bool {
        self.blocking_states().is_empty()
    }

    /// `true` when every reachable state can eventually perform `tick`.
    pub fn is_tlf(&self, events: &EventTable) -> bool {
        self.timelock_states(events).is_empty()
    }

    /// Synchronous product. Shared events synchronize, non-shared events
    /// interleave; a pair is marked when both components are marked. Only the
    /// reachable part is produced and each state decodes to its pair.
    pub fn sync_product(&self, other: &Tdes) -> Tdes {
        let alphabet: BTreeSet<EventId> = self.alphabet.union(&other.alphabet).copied().collect();
        let shared: BTreeSet<EventId> = self
            .alphabet
            .intersection(&other.alphabet)
            .copied()
            .collect();
        let mut out = Tdes {
            name: format!("{}||{}", self.name, other.name),
            state_names: Vec::new(),
            state_index: HashMap::new(),
            alphabet: alphabet.clone(),
            trans: BTreeMap::new(),
            initial: StateId(0),
            marked: BTreeSet::new(),
            decode: Vec::new(),
        };
        let mut index: HashMap<(StateId, StateId), StateId> = HashMap::new();
        let mut queue = VecDeque::new();
        let start = (self.initial, other.initial);
        let name0 = format!(
            "{}|{}",
            self.state_name(self.initial),
            other.state_name(other.initial)
        );
        let id0 = out.add_state(&name0);
        out.set_decode(
            id0,
            format!(
                "({},{})",
                self.state_name(self.initial),
                other.state_name(other.initial)
            ),
        );
        index.insert(start, id0);
        queue.push_back(start);
        if self.marked.contains(&self.initial) && other.marked.contains(&other.initial) {
            out.mark(id0);
        }
        while let Some((a, b)) = queue.pop_front() {
            let src = index[&(a, b)];
            for &e in &alphabet {
                let next = if shared.contains(&e) {
                    match (self.step(a, e), other.step(b, e)) {
                        (Some(na), Some(nb)) => Some((na, nb)),
                        _ => None,
                    }
                } else if self.alphabet.contains(&e) {
                    self.step(a, e).map(|na| (na, b))
                } else {
                    other.step(b, e).map(|nb| (a, nb))
                };
                if let Some(pair) = next {
                    let dst = *index.entry(pair).or_insert_with(|| {
                        let name =
                            format!("{}|{}", self.state_name(pair.0), other.state_name(pair.1));
                        let id = out.add_state(&name);
                        out.set_decode(
                            id,
                            format!(
                                "({},{})",
                                self.state_name(pair.0),
                                other.state_name(pair.1)
                            ),
                        );
                        if self.marked.contains(&pair.0) && other.marked.contains(&pair.1) {
                            out.marked.insert(id);
                        }
                        queue.push_back(pair);
                        id
                    });
                    out.trans.insert((src, e), dst);
                }
            }
        }
        out
    }

    /// Natural projection onto `keep`: events outside `keep` become silent and
    /// the result is determinized by the subset construction. A result state
    /// decodes to its (sorted) set of source states and is marked when that
    /// set contains a marked source state.
    pub fn natural_projection(
        &self,
        keep: &BTreeSet<EventId>,
        events: &EventTable,
    ) -> Result<Tdes, TdesError> {
        for &e in keep {
            if !self.alphabet.contains(&e) {
                return Err(TdesError::ProjectionAlphabet(events.name(e).to_string()));
            }
        }
        let silent: BTreeSet<EventId> = self.alphabet.difference(keep).copied().collect();
        let closure = |set: &BTreeSet<StateId>| -> BTreeSet<StateId> {
            let mut out = set.clone();
            let mut queue: VecDeque<StateId> = out.iter().copied().collect();
            while let Some(s) = queue.pop_front() {
                for &e in &silent {
                    if let Some(d) = self.step(s, e) {
                        if out.insert(d) {
                            queue.push_back(d);
                        }
                    }
                }
            }
            out
        };
        let subset_name = |set: &BTreeSet<StateId>| -> String {
            set.iter()
                .map(|&s| self.state_name(s))
                .collect::<Vec<_>>()
                .join("+")
        };

        let start = closure(&BTreeSet::from([self.initial]));
        let mut out = Tdes::new(&format!("P({})", self.name), keep.iter().copied(), "");
        // Rename the auto-created state to the canonical subset name.
        out.state_names[0] = subset_name(&start);
        out.state_index.clear();
        out.state_index.insert(out.state_names[0].clone(), StateId(0));
        out.set_decode(StateId(0), subset_name(&start));
        if start.iter().any(|s| self.marked.contains(s)) {
            out.mark(StateId(0));
        }
        let mut index: HashMap<BTreeSet<StateId>, StateId> = HashMap::new();
        index.insert(start.clone(), StateId(0));
        let mut queue = VecDeque::from([start]);
        while let Some(set) = queue.pop_front() {
            let src = index[&set];
            for &e in keep {
                let mut raw = BTreeSet::new();
                for &s in &set {
                    if let Some(d) = self.step(s, e) {
                        raw.insert(d);
                    }
                }
                if raw.is_empty() {
                    continue;
                }
                let target = closure(&raw);
                let dst = match index.get(&target) {
                    Some(&id) => id,
                    None => {
                        let id = out.add_state(&subset_name(&target));
                        out.set_decode(id, subset_name(&target));
                        if target.iter().any(|s| self.marked.contains(s)) {
                            out.marked.insert(id);
                        }
                        index.insert(target.clone(), id);
                        queue.push_back(target.clone());
                        id
                    }
                };
                out.trans.insert((src, e), dst);
            }
        }
        Ok(out)
    }

    /// Requirement completion: a fresh unmarked dead state `q_d` absorbs every
    /// transition left undefined on the original states. `q_d` itself gets no
    /// outgoing transitions.
    pub fn complete(&self) -> Tdes {
        let mut out = self.clone();
        out.name = format!("{}_complete", self.name);
        let mut dead_name = String::from("qd");
        while out.state_index.contains_key(&dead_name) {
            dead_name.push('_');
        }
        let dead = out.add_state(&dead_name);
        let alphabet: Vec<EventId> = out.alphabet.iter().copied().collect();
        for s in 0..out.state_names.len() {
            let s = StateId(s);
            if s == dead {
                continue;
            }
            for &e in &alphabet {
                out.trans.entry((s, e)).or_insert(dead);
            }
        }
        out
    }

    /// All words of length at most `k` in the language, enumerated exactly.
    pub fn bounded_language(&self, k: usize) -> BTreeSet<Vec<EventId>> {
        let mut words = BTreeSet::new();
        let mut frontier: Vec<(StateId, Vec<EventId>)> = vec![(self.initial, Vec::new())];
        words.insert(Vec::new());
        for _ in 0..k {
            let mut next = Vec::new();
            for (s, w) in frontier {
                for (e, d) in self.outgoing(s) {
                    let mut w2 = w.clone();
                    w2.push(e);
                    words.insert(w2.clone());
                    next.push((d, w2));
                }
            }
            frontier = next;
        }
        words
    }

    /// Marked words of length at most `k`.
    pub fn bounded_marked_language(&self, k: usize) -> BTreeSet<Vec<EventId>> {
        self.bounded_language(k)
            .into_iter()
            .filter(|w| {
                self.run(self.initial, w)
                    .map(|s| self.marked.contains(&s))
                    .unwrap_or(false)
            })
            .collect()
    }

    /// Language inclusion `P_alphabet(L(self)) ⊆ P_alphabet(L(other))`.
    ///
    /// Both sides are projected onto `alphabet` first. On failure a shortest
    /// witness word (ties broken by event name) from the difference is
    /// returned.
    pub fn language_included(
        &self,
        other: &Tdes,
        alphabet: &BTreeSet<EventId>,
        events: &EventTable,
    ) -> Result<Option<Vec<EventId>>, TdesError> {
        let keep_a: BTreeSet<EventId> = alphabet
            .iter()
            .copied()
            .filter(|e| self.alphabet.contains(e))
            .collect();
        let keep_b: BTreeSet<EventId> = alphabet
            .iter()
            .copied()
            .filter(|e| other.alphabet.contains(e))
            .collect();
        let pa = self.natural_projection(&keep_a, events)?;
        let pb = other.natural_projection(&keep_b, events)?;
        // BFS over the product of pa with the partial automaton pb; a word in
        // L(pa) whose letter is either outside pb's alphabet or undefined in pb
        // witnesses non-inclusion. Events are explored in name order so the
        // reported witness is deterministic.
        let mut order: Vec<EventId> = pa.alphabet.iter().copied().collect();
        order.sort_by(|&x, &y| events.name(x).cmp(events.name(y)));
        let mut seen: BTreeSet<(StateId, StateId)> = BTreeSet::new();
        let mut queue: VecDeque<(StateId, StateId, Vec<EventId>)> = VecDeque::new();
        seen.insert((pa.initial, pb.initial));
        queue.push_back((pa.initial, pb.initial, Vec::new()));
        while let Some((sa, sb, word)) = queue.pop_front() {
            for &e in &order {
                if let Some(da) = pa.step(sa, e) {
                    let mut w2 = word.clone();
                    w2.push(e);
                    match pb.step(sb, e) {
                        Some(db) => {
                            if seen.insert((da, db)) {
                                queue.push_back((da, db, w2));
                            }
                        }
                        None => return Ok(Some(w2)),
                    }
                }
            }
        }
        Ok(None)
    }

    /// Exact language equality over the union alphabet, with a witness word on
    /// the side that has it when the languages differ.
    pub fn language_equal(
        &self,
        other: &Tdes,
        events: &EventTable,
    ) -> Result<Option<Vec<EventId>>, TdesError> {
        let alph: BTreeSet<EventId> = self.alphabet.union(&other.alphabet).copied().collect();
        if let Some(w) = self.language_included(other, &alph, events)? {
            return Ok(Some(w));
        }
        other.language_included(self, &alph, events)
    }
}
