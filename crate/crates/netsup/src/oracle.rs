//! Word-level reference implementations used to cross-check the graph
//! algorithms on small instances. Everything here enumerates bounded
//! languages directly and is deliberately independent of the reachability,
//! projection and synthesis code paths it validates. Production code never
//! calls into this module; the test suites do.

use std::collections::{BTreeMap, BTreeSet};

use crate::events::{EventId, EventTable};
use crate::netplant::NetworkConfig;
use crate::tdes::{StateId, Tdes};

/// Projection of a word onto an alphabet.
pub fn project_word(word: &[EventId], keep: &BTreeSet<EventId>) -> Vec<EventId> {
    word.iter().copied().filter(|e| keep.contains(e)).collect()
}

/// `{ P_keep(w) : w ∈ L(t), |w| ≤ depth }`, computed word by word.
pub fn projected_words(t: &Tdes, keep: &BTreeSet<EventId>, depth: usize) -> BTreeSet<Vec<EventId>> {
    t.bounded_language(depth)
        .iter()
        .map(|w| project_word(w, keep))
        .collect()
}

/// States that end some word of length at most `depth`, layer by layer.
fn states_within(t: &Tdes, depth: usize) -> BTreeSet<StateId> {
    let mut reached = BTreeSet::from([t.initial]);
    let mut frontier = BTreeSet::from([t.initial]);
    for _ in 0..depth {
        let mut next = BTreeSet::new();
        for &s in &frontier {
            for (_, d) in t.outgoing(s) {
                if reached.insert(d) {
                    next.insert(d);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    reached
}

/// Bounded nonblocking check from the definition: every state that ends a
/// word of length ≤ `depth` has a continuation of length ≤ `depth` into a
/// marked state. Sound and complete when `depth` covers every simple path.
pub fn nonblocking_by_words(t: &Tdes, depth: usize) -> bool {
    // ok_k(s): some word of length ≤ k leads from s into a marked state.
    let mut ok: BTreeSet<StateId> = t.marked.clone();
    for _ in 0..depth {
        let mut grew = false;
        for s in t.states() {
            if !ok.contains(&s) && t.outgoing(s).any(|(_, d)| ok.contains(&d)) {
                ok.insert(s);
                grew = true;
            }
        }
        if !grew {
            break;
        }
    }
    states_within(t, depth).iter().all(|s| ok.contains(s))
}

/// Bounded time-lock-freeness check from the definition: every state that
/// ends a word of length ≤ `depth` has some continuation `w tick` defined
/// within `depth` steps.
pub fn tlf_by_words(t: &Tdes, events: &EventTable, depth: usize) -> bool {
    let tick = events.tick();
    let mut ok: BTreeSet<StateId> = t
        .states()
        .filter(|&s| t.step(s, tick).is_some())
        .collect();
    for _ in 0..depth {
        let mut grew = false;
        for s in t.states() {
            if !ok.contains(&s) && t.outgoing(s).any(|(_, d)| ok.contains(&d)) {
                ok.insert(s);
                grew = true;
            }
        }
        if !grew {
            break;
        }
    }
    states_within(t, depth).iter().all(|s| ok.contains(s))
}

/// Observational equivalence by explicit double-word enumeration: relates the
/// endpoints of any two words (length ≤ depth) with equal projections onto
/// `observable`.
pub fn obs_by_words(
    t: &Tdes,
    observable: &BTreeSet<EventId>,
    depth: usize,
) -> BTreeMap<StateId, BTreeSet<StateId>> {
    let mut by_projection: BTreeMap<Vec<EventId>, BTreeSet<StateId>> = BTreeMap::new();
    for w in t.bounded_language(depth) {
        let s = t.run(t.initial, &w).unwrap();
        by_projection
            .entry(project_word(&w, observable))
            .or_default()
            .insert(s);
    }
    let mut rel: BTreeMap<StateId, BTreeSet<StateId>> = BTreeMap::new();
    for group in by_projection.values() {
        for &s in group {
            rel.entry(s).or_default().extend(group.iter().copied());
        }
    }
    rel
}

/// Word-quantified timed networked controllability: for every word of the
/// supervised plant and every uncontrollable event (or tick) the plant can
/// extend its projection with, the supervised plant allows the extension, or
/// tick is preempted by some forcible or observed event.
pub fn controllability_by_words(
    nsp: &Tdes,
    g: &Tdes,
    events: &EventTable,
    cfg: &NetworkConfig,
    depth: usize,
) -> Option<(Vec<EventId>, EventId)> {
    let tick = events.tick();
    let plant_alphabet: BTreeSet<EventId> = events.plant_alphabet().into_iter().collect();
    let mut uncontrollable: Vec<EventId> = events
        .active_events()
        .into_iter()
        .filter(|&e| events.is_uncontrollable_active(e))
        .collect();
    uncontrollable.push(tick);
    for w in nsp.bounded_language(depth) {
        let pw = project_word(&w, &plant_alphabet);
        let Some(a) = g.run(g.initial, &pw) else { continue };
        let z = nsp.run(nsp.initial, &w).unwrap();
        for &u in &uncontrollable {
            if g.step(a, u).is_none() {
                continue;
            }
            if nsp.step(z, u).is_some() {
                continue;
            }
            if u == tick {
                let preempted = nsp.outgoing(z).any(|(e, _)| {
                    events.is_forcible_active(e)
                        || (cfg.enabling_forcible && events.is_enabling(e))
                        || events.is_observed(e)
                });
                if preempted {
                    continue;
                }
            }
            return Some((w, u));
        }
    }
    None
}

/// Conventional (non-networked) controllability of a supervisor `s` over the
/// same alphabet as the plant, word-quantified and bounded.
pub fn conventional_controllability(
    s: &Tdes,
    g: &Tdes,
    events: &EventTable,
    depth: usize,
) -> Option<(Vec<EventId>, EventId)> {
    let tick = events.tick();
    let supervised = s.sync_product(g);
    let mut uncontrollable: Vec<EventId> = events
        .active_events()
        .into_iter()
        .filter(|&e| events.is_uncontrollable_active(e))
        .collect();
    uncontrollable.push(tick);
    for w in supervised.bounded_language(depth) {
        let a = g.run(g.initial, &w).expect("supervised words are plant words");
        let z = supervised.run(supervised.initial, &w).unwrap();
        for &u in &uncontrollable {
            if g.step(a, u).is_none() || supervised.step(z, u).is_some() {
                continue;
            }
            if u == tick {
                let preempted = supervised
                    .outgoing(z)
                    .any(|(e, _)| events.is_forcible_active(e));
                if preempted {
                    continue;
                }
            }
            return Some((w, u));
        }
    }
    None
}

/// Witness search for timely command delivery: for a plant word `w σ` with a
/// controllable `σ`, finds a networked-plant word `w0 σe w1 σ` whose plant
/// projection of `w0 w1` is `w` and where exactly `Nc` ticks separate the
/// command from the execution.
pub fn command_on_time(
    np: &Tdes,
    w: &[EventId],
    sigma: EventId,
    events: &EventTable,
    cfg: &NetworkConfig,
) -> bool {
    let enabling = match events.enabling_of(sigma) {
        Some(e) => e,
        None => return false,
    };
    let tick = events.tick();
    // DFS over (np state, plant prefix consumed, ticks since the command or
    // None before it). Non-plant events are free moves; plant events must
    // consume the next letter of `w`.
    let mut seen: BTreeSet<(StateId, usize, Option<u32>)> = BTreeSet::new();
    let mut stack = vec![(np.initial, 0usize, None::<u32>)];
    while let Some((s, i, phase)) = stack.pop() {
        if !seen.insert((s, i, phase)) {
            continue;
        }
        if i == w.len() && phase == Some(cfg.nc) && np.step(s, sigma).is_some() {
            return true;
        }
        for (e, d) in np.outgoing(s) {
            let plant_event = events.is_active(e) || events.is_tick(e);
            if plant_event {
                if i < w.len() && w[i] == e {
                    let phase2 = match phase {
                        Some(t) if e == tick => Some(t + 1),
                        other => other,
                    };
                    if phase2.is_none_or(|t| t <= cfg.nc) {
                        stack.push((d, i + 1, phase2));
                    }
                }
            } else if e == enabling && phase.is_none() {
                stack.push((d, i, Some(0)));
            } else if events.is_observed(e) || (events.is_enabling(e) && e != enabling) {
                stack.push((d, i, phase));
            }
        }
    }
    false
}
