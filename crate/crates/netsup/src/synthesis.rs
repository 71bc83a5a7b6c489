//! Supervisor synthesis over a networked plant.
//!
//! Starting from the networked plant, the loop repeatedly: computes the bad
//! states (blocking and/or time-locked), closes them under uncontrollable
//! reachability (uncontrollable and observed events always, tick when no
//! forcible event can preempt it), disables enabling events and tick that lead
//! into the closure — uniformly across observation-equivalent states — prunes
//! the closure and restricts to the reachable part. It stops when no bad state
//! remains (success) or the initial state falls into the closure (no result).
//! The supervisor is the final automaton projected onto the events the
//! supervisor can see: enabling events, observed events and tick.

use std::collections::{BTreeMap, BTreeSet};

use crate::events::{EventId, EventTable};
use crate::netplant::{BadSetMode, ForcibleClause, NetworkConfig, NetworkedPlant};
use crate::obs::{obs_relation, ObsRelation};
use crate::tdes::{StateId, Tdes};

/// Synthesis result: a networked supervisor over `Σe ∪ Σo ∪ {tick}`, or a
/// certified refusal with the uncontrollable chain that condemns the initial
/// state.
#[derive(Debug, Clone)]
pub enum SynthesisResult {
    Supervisor(Tdes),
    NoResult { reason: String },
}

#[derive(Debug, Clone, Default, serde::Serialize)]
pub struct IterationLog {
    /// Transitions disabled this iteration, as `(state, event)` names.
    pub disabled: Vec<(String, String)>,
    /// States pruned this iteration.
    pub removed_states: Vec<String>,
    /// Size of the bad set that drove the iteration.
    pub bad_set_size: usize,
}

#[derive(Debug, Clone)]
pub struct SynthesisOutcome {
    pub result: SynthesisResult,
    pub iterations: usize,
    pub log: Vec<IterationLog>,
    /// The restricted networked plant right before the final projection
    /// (absent on no-result).
    pub restricted: Option<Tdes>,
}

impl SynthesisOutcome {
    pub fn supervisor(&self) -> Option<&Tdes> {
        match &self.result {
            SynthesisResult::Supervisor(ns) => Some(ns),
            SynthesisResult::NoResult { .. } => None,
        }
    }
}

/// Blocking and/or time-locked states of `t`, per the configured mode.
pub fn bad_states(t: &Tdes, events: &EventTable, mode: BadSetMode) -> BTreeSet<StateId> {
    match mode {
        BadSetMode::Both => {
            let mut s = t.blocking_states();
            s.extend(t.timelock_states(events));
            s
        }
        BadSetMode::BlockingOnly => t.blocking_states(),
        BadSetMode::TlfOnly => t.timelock_states(events),
    }
}

/// Forcible events enabled at `y`: plant-forcible actives, plus enabling
/// events when they are configured forcible.
fn forcible_enabled(t: &Tdes, y: StateId, events: &EventTable, cfg: &NetworkConfig) -> BTreeSet<EventId> {
    t.outgoing(y)
        .map(|(e, _)| e)
        .filter(|&e| {
            events.is_forcible_active(e) || (cfg.enabling_forcible && events.is_enabling(e))
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct UnconClosure {
    pub set: BTreeSet<StateId>,
    /// For states added by closure: the uncontrollable step into the set that
    /// condemned them.
    parent: BTreeMap<StateId, (EventId, StateId)>,
}

impl UnconClosure {
    /// Chain of uncontrollable steps from `from` into the original bad set.
    pub fn chain(&self, from: StateId, t: &Tdes, events: &EventTable) -> String {
        let mut out = vec![t.state_name(from).to_string()];
        let mut cur = from;
        while let Some(&(e, next)) = self.parent.get(&cur) {
            out.push(format!("-{}-> {}", events.name(e), t.state_name(next)));
            cur = next;
        }
        out.join(" ")
    }
}

/// Least set containing `bs` and closed under uncontrollable predecessors:
/// any state entering the set by an active or observed event, and any state
/// entering by tick that cannot be saved by a forcible preemption.
pub fn uncon_closure(
    t: &Tdes,
    bs: &BTreeSet<StateId>,
    obs: &ObsRelation,
    events: &EventTable,
    cfg: &NetworkConfig,
) -> UnconClosure {
    let mut set = bs.clone();
    let mut parent = BTreeMap::new();
    // Fixpoint by repeated sweeps; state spaces here are small and sweeps are
    // at most |states| deep.
    loop {
        let mut grew = false;
        for y in t.states() {
            if set.contains(&y) {
                continue;
            }
            let mut hit: Option<(EventId, StateId)> = None;
            for (e, d) in t.outgoing(y) {
                if !set.contains(&d) {
                    continue;
                }
                if events.is_active(e) || events.is_observed(e) {
                    hit = Some((e, d));
                    break;
                }
                if events.is_tick(e) {
                    let escapes = match cfg.forcible_clause {
                        ForcibleClause::OwnState => !forcible_enabled(t, y, events, cfg).is_empty(),
                        ForcibleClause::ClassIntersection => {
                            let mut common: Option<BTreeSet<EventId>> = None;
                            for &y2 in obs.class(y).iter() {
                                let f = forcible_enabled(t, y2, events, cfg);
                                common = Some(match common {
                                    None => f,
                                    Some(c) => c.intersection(&f).copied().collect(),
                                });
                                if common.as_ref().is_some_and(|c| c.is_empty()) {
                                    break;
                                }
                            }
                            common.is_some_and(|c| !c.is_empty())
                        }
                    };
                    if !escapes {
                        hit = Some((e, d));
                        break;
                    }
                }
            }
            if let Some((e, d)) = hit {
                set.insert(y);
                parent.insert(y, (e, d));
                grew = true;
            }
        }
        if !grew {
            return UnconClosure { set, parent };
        }
    }
}

/// States where synthesis disabled tick without any forcible justification:
/// no forcible event enabled, no tick in the current automaton, but tick was
/// defined at the same state in the original networked plant.
pub fn bpre(
    current: &Tdes,
    np: &Tdes,
    events: &EventTable,
    cfg: &NetworkConfig,
) -> BTreeSet<StateId> {
    let tick = events.tick();
    current
        .states()
        .filter(|&y| {
            forcible_enabled(current, y, events, cfg).is_empty()
                && current.step(y, tick).is_none()
                && np
                    .state_by_name(current.state_name(y))
                    .map(|x| np.step(x, tick).is_some())
                    .unwrap_or(false)
        })
        .collect()
}

/// Sub-automaton on `keep`, dropping transitions that touch removed states.
fn restrict(t: &Tdes, keep: &BTreeSet<StateId>) -> Tdes {
    let mut out = t.clone();
    let doomed: Vec<(StateId, EventId)> = out
        .transitions()
        .filter(|(s, _, d)| !keep.contains(s) || !keep.contains(d))
        .map(|(s, e, _)| (s, e))
        .collect();
    for (s, e) in doomed {
        out.remove_trans(s, e);
    }
    out.marked.retain(|s| keep.contains(s));
    out
}

/// Renames states to `prefix0..prefixN` in id order, keeping decode payloads.
fn relabel(t: &Tdes, prefix: &str) -> Tdes {
    let mut out = Tdes::new(&t.name, t.alphabet.iter().copied(), &format!("{prefix}0"));
    for s in t.states() {
        let id = if s == t.initial {
            out.initial
        } else {
            out.add_state(&format!("{prefix}{}", s.0))
        };
        if let Some(d) = t.decode(s) {
            out.set_decode(id, d.to_string());
        } else {
            out.set_decode(id, t.state_name(s).to_string());
        }
        if t.marked.contains(&s) {
            out.mark(id);
        }
    }
    // Ids are preserved one-to-one (initial is id 0 in both because the
    // automaton was renumbered by reach() beforehand).
    for (s, e, d) in t.transitions() {
        out.add_trans(StateId(s.0), e, StateId(d.0)).unwrap();
    }
    out
}

/// Runs the synthesis loop on a networked plant.
pub fn synthesize(
    np: &NetworkedPlant,
    events: &EventTable,
    cfg: &NetworkConfig,
) -> SynthesisOutcome {
    synthesize_ordered(np, events, cfg, false)
}

/// Like [`synthesize`], with the disable loop scanning states in reverse;
/// exists so tests can confirm the fixpoint is order-independent.
pub fn synthesize_ordered(
    np: &NetworkedPlant,
    events: &EventTable,
    cfg: &NetworkConfig,
    reverse_disable_order: bool,
) -> SynthesisOutcome {
    let observable: BTreeSet<EventId> = events.supervisor_alphabet().into_iter().collect();
    let mut disable_events: Vec<EventId> = events.enabling_events();
    disable_events.push(events.tick());
    disable_events.sort_by(|&x, &y| events.name(x).cmp(events.name(y)));

    let mut cur = np.tdes.reach();
    let budget = np.tdes.state_count() + np.tdes.transition_count() + 1;
    let mut log: Vec<IterationLog> = Vec::new();
    let mut iterations = 0usize;
    let mut bs = bad_states(&cur, events, cfg.bad_set);

    loop {
        assert!(
            iterations <= budget,
            "synthesis failed to make progress within {budget} iterations"
        );
        if bs.is_empty() {
            break;
        }
        let obs = obs_relation(&cur, &observable, events);
        let uncon = uncon_closure(&cur, &bs, &obs, events, cfg);
        if uncon.set.contains(&cur.initial) {
            let reason = format!(
                "initial state uncontrollably reaches bad set: {}",
                uncon.chain(cur.initial, &cur, events)
            );
            return SynthesisOutcome {
                result: SynthesisResult::NoResult { reason },
                iterations,
                log,
                restricted: None,
            };
        }

        let mut entry = IterationLog {
            bad_set_size: bs.len(),
            ..IterationLog::default()
        };
        let obs_uncon = obs.class_of_set(&uncon.set);
        let mut states: Vec<StateId> = cur.states().filter(|s| !uncon.set.contains(s)).collect();
        if reverse_disable_order {
            states.reverse();
        }
        for &y in &states {
            for &e in &disable_events {
                let target = match cur.step(y, e) {
                    Some(d) => d,
                    None => continue,
                };
                if !obs_uncon.contains(&target) {
                    continue;
                }
                for &y2 in obs.class(y).iter() {
                    if cur.remove_trans(y2, e) {
                        entry
                            .disabled
                            .push((cur.state_name(y2).to_string(), events.name(e).to_string()));
                    }
                }
            }
        }

        // Observation consistency: after the sweep no surviving state may
        // still steer a disableable event into the closure's observation
        // classes.
        for y in cur.states().filter(|s| !uncon.set.contains(s)) {
            for &e in &disable_events {
                if let Some(d) = cur.step(y, e) {
                    assert!(
                        !obs_uncon.contains(&d),
                        "disable sweep left `{}` at {}",
                        events.name(e),
                        cur.state_name(y)
                    );
                }
            }
        }

        let keep: BTreeSet<StateId> = cur.states().filter(|s| !uncon.set.contains(s)).collect();
        entry.removed_states = uncon
            .set
            .iter()
            .map(|&s| cur.state_name(s).to_string())
            .collect();
        let progressed = !entry.disabled.is_empty() || !entry.removed_states.is_empty();
        assert!(progressed, "iteration with nonempty bad set must shrink the automaton");
        cur = restrict(&cur, &keep).reach();
        iterations += 1;
        log.push(entry);

        bs = bpre(&cur, &np.tdes, events, cfg);
        bs.extend(bad_states(&cur, events, cfg.bad_set));
    }

    let keep: BTreeSet<EventId> = observable
        .iter()
        .copied()
        .filter(|e| cur.alphabet.contains(e))
        .collect();
    let ns = cur
        .natural_projection(&keep, events)
        .expect("supervisor alphabet is part of the networked alphabet");
    let ns = relabel(&ns.reach(), "y");
    SynthesisOutcome {
        result: SynthesisResult::Supervisor(ns),
        iterations,
        log,
        restricted: Some(cur),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures;
    use crate::netplant::{build_networked_plant, TickRule};

    fn pedestrian_cfg() -> NetworkConfig {
        NetworkConfig {
            nc: 1,
            no: 1,
            lmax: 1,
            mmax: 2,
            ..NetworkConfig::default()
        }
    }

    #[test]
    fn bad_state_modes() {
        let (g, ev) = fixtures::pedestrian();
        // The pedestrian plant itself: a3 and a4 are blocking but not
        // time-locked, so the TLF-only mode reports nothing.
        assert!(!bad_states(&g, &ev, BadSetMode::Both).is_empty());
        assert!(!bad_states(&g, &ev, BadSetMode::BlockingOnly).is_empty());
        assert!(bad_states(&g, &ev, BadSetMode::TlfOnly).is_empty());
    }

    #[test]
    fn uncon_closure_clauses() {
        let mut ev = EventTable::new();
        let u = ev.add_active("u", false, false).unwrap();
        let f = ev.add_active("f", true, true).unwrap();
        let tick = ev.tick();
        let cfg = NetworkConfig::default();

        // y --u--> bad is condemned.
        let mut t = Tdes::new("t", [tick, u, f], "y");
        let y = t.state_by_name("y").unwrap();
        let bad = t.add_state("bad");
        t.add_trans(y, u, bad).unwrap();
        let obs = obs_relation(&t, &BTreeSet::from([tick]), &ev);
        let uncon = uncon_closure(&t, &BTreeSet::from([bad]), &obs, &ev, &cfg);
        assert!(uncon.set.contains(&y));

        // y --tick--> bad with no forcible event is condemned...
        let mut t = Tdes::new("t", [tick, u, f], "y");
        let y = t.state_by_name("y").unwrap();
        let bad = t.add_state("bad");
        t.add_trans(y, tick, bad).unwrap();
        let obs = obs_relation(&t, &BTreeSet::from([tick]), &ev);
        let uncon = uncon_closure(&t, &BTreeSet::from([bad]), &obs, &ev, &cfg);
        assert!(uncon.set.contains(&y));

        // ...but escapes when a forcible event is enabled alongside.
        let mut t = Tdes::new("t", [tick, u, f], "y");
        let y = t.state_by_name("y").unwrap();
        let bad = t.add_state("bad");
        let ok = t.add_state("ok");
        t.add_trans(y, tick, bad).unwrap();
        t.add_trans(y, f, ok).unwrap();
        let obs = obs_relation(&t, &BTreeSet::from([tick]), &ev);
        let uncon = uncon_closure(&t, &BTreeSet::from([bad]), &obs, &ev, &cfg);
        assert!(!uncon.set.contains(&y));
    }

    #[test]
    fn bpre_detects_unjustified_tick_removal() {
        let mut ev = EventTable::new();
        let f = ev.add_active("f", true, true).unwrap();
        let tick = ev.tick();
        let cfg = NetworkConfig::default();

        let mut np = Tdes::new("np", [tick, f], "y0");
        let y0 = np.state_by_name("y0").unwrap();
        let y1 = np.add_state("y1");
        np.add_trans(y0, tick, y1).unwrap();
        np.add_trans(y1, tick, y1).unwrap();
        np.mark(y1);

        // Supervisor view with the tick at y0 disabled and nothing forcible.
        let mut ns = np.clone();
        ns.remove_trans(y0, tick);
        assert_eq!(bpre(&ns, &np, &ev, &cfg), BTreeSet::from([y0]));

        // ns == np: nothing was disabled.
        assert!(bpre(&np, &np, &ev, &cfg).is_empty());

        // A forcible event still enabled justifies the preemption.
        let mut np2 = np.clone();
        let y2 = np2.add_state("y2");
        np2.add_trans(y0, f, y2).unwrap();
        np2.add_trans(y2, tick, y2).unwrap();
        let mut ns2 = np2.clone();
        ns2.remove_trans(y0, tick);
        assert!(bpre(&ns2, &np2, &ev, &cfg).is_empty());
    }

    #[test]
    fn empty_bad_set_returns_projection_without_iterations() {
        // A plant that is nonblocking and time-lock free end to end: the
        // supervisor is just the projection of the networked plant.
        let mut ev = EventTable::new();
        let c = ev.add_active("c", true, false).unwrap();
        ev.derive_network_events().unwrap();
        let tick = ev.tick();
        let mut g = Tdes::new("loop", [tick, c], "a0");
        let a0 = g.state_by_name("a0").unwrap();
        let a1 = g.add_state("a1");
        g.add_trans(a0, tick, a1).unwrap();
        g.add_trans(a1, c, a0).unwrap();
        g.add_trans(a1, tick, a1).unwrap();
        g.mark(a0);

        let cfg = NetworkConfig {
            nc: 1,
            no: 1,
            lmax: 1,
            mmax: 1,
            ..NetworkConfig::default()
        };
        let np = build_networked_plant(&g, &ev, &cfg).unwrap();
        let outcome = synthesize(&np, &ev, &cfg);
        assert_eq!(outcome.iterations, 0);
        let ns = outcome.supervisor().expect("plant was clean");
        let keep: BTreeSet<EventId> = ev
            .supervisor_alphabet()
            .into_iter()
            .filter(|e| np.tdes.alphabet.contains(e))
            .collect();
        let pnp = np.tdes.natural_projection(&keep, &ev).unwrap();
        assert!(ns.language_equal(&pnp, &ev).unwrap().is_none());
    }

    #[test]
    fn pedestrian_with_delays_has_no_supervisor() {
        // With one tick of delay on both channels the jump command cannot be
        // confirmed in time: forcing the jump stalls the clock (the
        // post-execution state cannot tick until the observation matures,
        // which needs a tick), while not forcing it lets the plant run into
        // the blocking branch. The honest synthesis outcome is a refusal.
        let (g, mut ev) = fixtures::pedestrian();
        ev.derive_network_events().unwrap();
        let cfg = pedestrian_cfg();
        let np = build_networked_plant(&g, &ev, &cfg).unwrap();
        let outcome = synthesize(&np, &ev, &cfg);
        match &outcome.result {
            SynthesisResult::NoResult { reason } => {
                assert!(reason.contains("initial state"), "{reason}");
            }
            SynthesisResult::Supervisor(_) => panic!("expected no result"),
        }
        assert!(outcome.iterations > 0);
    }

    #[test]
    fn pedestrian_without_forcible_enabling_also_fails() {
        let (g, mut ev) = fixtures::pedestrian();
        ev.derive_network_events().unwrap();
        let cfg = NetworkConfig {
            enabling_forcible: false,
            ..pedestrian_cfg()
        };
        let np = build_networked_plant(&g, &ev, &cfg).unwrap();
        let outcome = synthesize(&np, &ev, &cfg);
        assert!(outcome.supervisor().is_none());
    }

    #[test]
    fn pedestrian_without_delays_is_solvable() {
        let (g, mut ev) = fixtures::pedestrian();
        ev.derive_network_events().unwrap();
        let cfg = NetworkConfig {
            nc: 0,
            no: 0,
            lmax: 1,
            mmax: 2,
            ..NetworkConfig::default()
        };
        let np = build_networked_plant(&g, &ev, &cfg).unwrap();
        let outcome = synthesize(&np, &ev, &cfg);
        let ns = outcome.supervisor().expect("no-delay case is the classical one");
        assert!(ns.is_nonblocking());
        assert!(ns.is_tlf(&ev));
        // Only supervisor events appear.
        let allowed: BTreeSet<EventId> = ev.supervisor_alphabet().into_iter().collect();
        assert!(ns.alphabet.iter().all(|e| allowed.contains(e)));
    }

    #[test]
    fn disable_order_does_not_change_the_result() {
        let (g, mut ev) = fixtures::nonfifo_example_plant();
        ev.derive_network_events().unwrap();
        let cfg = NetworkConfig {
            nc: 1,
            no: 1,
            lmax: 2,
            mmax: 2,
            tick_rule: TickRule::Literal,
            ..NetworkConfig::default()
        };
        let np = build_networked_plant(&g, &ev, &cfg).unwrap();
        let fwd = synthesize_ordered(&np, &ev, &cfg, false);
        let rev = synthesize_ordered(&np, &ev, &cfg, true);
        let a = fwd.supervisor().expect("solvable fixture");
        let b = rev.supervisor().expect("solvable fixture");
        assert!(a.language_equal(b, &ev).unwrap().is_none());
        assert_eq!(a.marked.len(), b.marked.len());
    }

    #[test]
    fn nonfifo_observation_example_disables_only_the_second_command() {
        let (g, mut ev) = fixtures::nonfifo_example_plant();
        ev.derive_network_events().unwrap();
        let cfg = NetworkConfig {
            nc: 1,
            no: 1,
            lmax: 2,
            mmax: 2,
            tick_rule: TickRule::Literal,
            ..NetworkConfig::default()
        };
        let np = build_networked_plant(&g, &ev, &cfg).unwrap();
        let outcome = synthesize(&np, &ev, &cfg);
        let ns = outcome.supervisor().expect("supervisor exists");
        let be = ev.lookup("b_e").unwrap();
        // b_e must not be the first command...
        assert!(ns.step(ns.initial, be).is_none());
        // ...but is still used after a_e.
        let ae = ev.lookup("a_e").unwrap();
        let y = ns.step(ns.initial, ae).unwrap();
        assert!(ns.step(y, be).is_some());
    }

    #[test]
    fn nonfifo_control_channel_returns_no_result() {
        let (g, mut ev) = fixtures::nonfifo_example_plant();
        ev.derive_network_events().unwrap();
        let cfg = NetworkConfig {
            nc: 1,
            no: 1,
            lmax: 2,
            mmax: 2,
            tick_rule: TickRule::Literal,
            fifo_control: false,
            ..NetworkConfig::default()
        };
        let np = build_networked_plant(&g, &ev, &cfg).unwrap();
        let outcome = synthesize(&np, &ev, &cfg);
        assert!(outcome.supervisor().is_none());
    }
}
