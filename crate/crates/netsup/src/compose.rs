//! Timed asynchronous composition of a networked supervisor with the plant,
//! producing the networked supervised plant (NSP), plus a step-wise trace
//! simulator for replaying words through the result.
//!
//! The composite runs the same five rules as the networked plant, with the
//! supervisor automaton in place of the predictive component: commands are
//! emitted when the supervisor does, executions are gated by the plant and the
//! control channel, tick requires both parties and no ready observation, and
//! deliveries additionally require the supervisor to accept the observed
//! event.

use std::collections::{BTreeSet, HashMap, VecDeque};

use thiserror::Error;

use crate::channels::{ControlChannel, ObservationChannel};
use crate::events::{EventId, EventTable};
use crate::netplant::NetworkConfig;
use crate::tdes::{StateId, Tdes};

/// Composite state of the networked supervised plant.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NspState {
    /// Plant state.
    pub a: StateId,
    /// Supervisor state.
    pub y: StateId,
    pub m: ObservationChannel,
    pub l: ControlChannel,
}

impl NspState {
    pub fn render(&self, g: &Tdes, ns: &Tdes, events: &EventTable) -> String {
        format!(
            "({},{},{},{})",
            g.state_name(self.a),
            ns.state_name(self.y),
            self.m.render(events),
            self.l.render(events)
        )
    }
}

#[derive(Debug, Clone)]
pub struct SupervisedPlant {
    pub tdes: Tdes,
    pub decode: Vec<NspState>,
    /// Per-edge drops on full channels, as `(state, event)` names.
    pub drops: Vec<(String, String)>,
}

#[derive(Debug, Error)]
pub enum ComposeError {
    #[error("supervisor alphabet mismatch: expected enabling/observed events and tick, found `{0}`")]
    AlphabetMismatch(String),
    #[error("event `{event}` not enabled at `{state}`; enabled: {enabled}")]
    NotEnabled {
        state: String,
        event: String,
        enabled: String,
    },
    #[error("unknown state id {0}")]
    UnknownState(usize),
}

/// Builds `NS || G` over the delayed channels.
pub fn compose(
    ns: &Tdes,
    g: &Tdes,
    events: &EventTable,
    cfg: &NetworkConfig,
) -> Result<SupervisedPlant, ComposeError> {
    let expected: BTreeSet<EventId> = events.supervisor_alphabet().into_iter().collect();
    for &e in &ns.alphabet {
        if !expected.contains(&e) {
            return Err(ComposeError::AlphabetMismatch(events.name(e).to_string()));
        }
    }

    let tick = events.tick();
    let empty_l = if cfg.fifo_control {
        ControlChannel::empty_fifo()
    } else {
        ControlChannel::empty_unordered()
    };
    let z0 = NspState {
        a: g.initial,
        y: ns.initial,
        m: ObservationChannel::empty(),
        l: empty_l,
    };

    let nsp_alphabet = events.nsp_alphabet();
    let mut out = Tdes::new(&format!("NSP({})", g.name), nsp_alphabet.iter().copied(), "z0");
    let mut decode = vec![z0.clone()];
    out.set_decode(StateId(0), z0.render(g, ns, events));
    if g.marked.contains(&z0.a) && ns.marked.contains(&z0.y) {
        out.mark(StateId(0));
    }
    let mut drops = Vec::new();

    let mut event_order: Vec<EventId> = nsp_alphabet;
    event_order.sort_by(|&x, &y| events.name(x).cmp(events.name(y)));

    let mut index: HashMap<NspState, StateId> = HashMap::from([(z0.clone(), StateId(0))]);
    let mut queue = VecDeque::from([z0]);
    while let Some(cur) = queue.pop_front() {
        let src = index[&cur];
        let mut successors: Vec<(EventId, NspState)> = Vec::new();
        for &e in &event_order {
            if events.is_enabling(e) {
                // 1) the supervisor sends a command
                if let Some(ny) = ns.step(cur.y, e) {
                    let base = events.base(e);
                    let (l2, dropped) = cur
                        .l
                        .app(base, cfg.nc, cfg.lmax, events)
                        .expect("enabling events have controllable bases");
                    if dropped {
                        drops.push((out.state_name(src).to_string(), events.name(e).to_string()));
                    }
                    successors.push((
                        e,
                        NspState {
                            a: cur.a,
                            y: ny,
                            m: cur.m.clone(),
                            l: l2,
                        },
                    ));
                }
            } else if events.is_controllable_active(e) {
                // 2) the plant executes a matured command
                let ready = if cfg.fifo_control {
                    cur.l.head().ok() == Some((e, 0))
                } else {
                    cur.l.contains_ready(e)
                };
                if ready {
                    if let Some(na) = g.step(cur.a, e) {
                        let l2 = if cfg.fifo_control {
                            cur.l.tail().expect("ready head implies nonempty")
                        } else {
                            cur.l.remove_ready(e).expect("readiness checked")
                        };
                        let (m2, dropped) = cur.m.insert(e, cfg.no, cfg.mmax, events).unwrap();
                        if dropped {
                            drops.push((out.state_name(src).to_string(), events.name(e).to_string()));
                        }
                        successors.push((
                            e,
                            NspState {
                                a: na,
                                y: cur.y,
                                m: m2,
                                l: l2,
                            },
                        ));
                    }
                }
            } else if events.is_uncontrollable_active(e) {
                // 3) spontaneous plant event
                if let Some(na) = g.step(cur.a, e) {
                    let (m2, dropped) = cur.m.insert(e, cfg.no, cfg.mmax, events).unwrap();
                    if dropped {
                        drops.push((out.state_name(src).to_string(), events.name(e).to_string()));
                    }
                    successors.push((
                        e,
                        NspState {
                            a: na,
                            y: cur.y,
                            m: m2,
                            l: cur.l.clone(),
                        },
                    ));
                }
            } else if events.is_tick(e) {
                // 4) both sides tick, unless a delivery is pending
                if let (Some(na), Some(ny)) = (g.step(cur.a, tick), ns.step(cur.y, tick)) {
                    if cur.m.ready().is_empty() {
                        successors.push((
                            e,
                            NspState {
                                a: na,
                                y: ny,
                                m: cur.m.dec(),
                                l: cur.l.dec(),
                            },
                        ));
                    }
                }
            } else if events.is_observed(e) {
                // 5) the supervisor receives a matured observation
                if let Some(ny) = ns.step(cur.y, e) {
                    let base = events.base(e);
                    if cur.m.count(base, 0) > 0 {
                        successors.push((
                            e,
                            NspState {
                                a: cur.a,
                                y: ny,
                                m: cur.m.remove(base, 0),
                                l: cur.l.clone(),
                            },
                        ));
                    }
                }
            }
        }
        for (e, next) in successors {
            // Both projections track their automata exactly.
            if events.is_active(e) || events.is_tick(e) {
                debug_assert_eq!(Some(next.a), g.step(cur.a, e));
            } else {
                debug_assert_eq!(next.a, cur.a);
            }
            if ns.alphabet.contains(&e) {
                debug_assert_eq!(Some(next.y), ns.step(cur.y, e));
            } else {
                debug_assert_eq!(next.y, cur.y);
            }
            let dst = match index.get(&next) {
                Some(&id) => id,
                None => {
                    let id = out.add_state(&format!("z{}", decode.len()));
                    out.set_decode(id, next.render(g, ns, events));
                    if g.marked.contains(&next.a) && ns.marked.contains(&next.y) {
                        out.mark(id);
                    }
                    decode.push(next.clone());
                    index.insert(next.clone(), id);
                    queue.push_back(next);
                    id
                }
            };
            out.add_trans(src, e, dst).expect("worklist generates each edge once");
        }
    }

    Ok(SupervisedPlant {
        tdes: out,
        decode,
        drops,
    })
}

/// One replay step through a composed automaton; returns the successor and a
/// `state | event | decode` log line for both endpoints.
pub fn simulate_step(
    nsp: &SupervisedPlant,
    s: StateId,
    event: EventId,
    events: &EventTable,
) -> Result<(StateId, String), ComposeError> {
    if s.0 >= nsp.tdes.state_count() {
        return Err(ComposeError::UnknownState(s.0));
    }
    match nsp.tdes.step(s, event) {
        Some(d) => {
            let line = format!(
                "{} | {} | {} -> {} | {}",
                nsp.tdes.state_name(s),
                events.name(event),
                nsp.tdes.decode(s).unwrap_or("-"),
                nsp.tdes.state_name(d),
                nsp.tdes.decode(d).unwrap_or("-"),
            );
            Ok((d, line))
        }
        None => Err(ComposeError::NotEnabled {
            state: nsp.tdes.state_name(s).to_string(),
            event: events.name(event).to_string(),
            enabled: nsp
                .tdes
                .enabled_events(s)
                .iter()
                .map(|&e| events.name(e))
                .collect::<Vec<_>>()
                .join(" "),
        }),
    }
}
