//! Construction of the networked plant: all behavior the plant can exhibit
//! when commands and observations travel through the delayed channels.
//!
//! The construction pairs the plant with a predictive copy `G'` (the plant
//! projected onto controllable events and tick) that runs `Nc` ticks ahead,
//! plus the two channel states. From a composite state `(a, a', m, l)`:
//!
//! 1. an enabling event `σ_e` fires when `G'` enables `σ`, queueing `(σ, Nc)`,
//! 2. a controllable `σ` executes when the plant enables it and its command is
//!    ready at the front of the control channel,
//! 3. an uncontrollable event executes freely,
//! 4. `tick` fires when the plant can tick and no observation is ready; both
//!    channels count down and `G'` advances when it can tick itself,
//! 5. an observed event `σ_o` fires when `(σ, 0)` is in the observation
//!    channel.
//!
//! Two readings of the tick guard exist (see [`TickRule`]); the worked figures
//! of the underlying theory are consistent only with [`TickRule::Figure`] for
//! some examples and [`TickRule::Literal`] for others, so the rule is explicit
//! configuration and recorded in diagnostics.

use std::collections::{BTreeSet, HashMap, VecDeque};

use thiserror::Error;

use crate::channels::{ControlChannel, ObservationChannel};
use crate::events::{EventId, EventTable};
use crate::tdes::{StateId, Tdes};

/// Gate used for tick in the networked plant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TickRule {
    /// Tick is enabled whenever the plant can tick and no observation is
    /// ready; the predictive component advances when it can.
    #[default]
    Figure,
    /// Additionally requires that no controllable event is enabled in the
    /// predictive component, making pending commands urgent.
    Literal,
}

/// Which bad states the synthesis removes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BadSetMode {
    #[default]
    Both,
    BlockingOnly,
    TlfOnly,
}

/// How the tick clause of the uncontrollable closure treats forcible events
/// across an observation class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ForcibleClause {
    /// A state escapes the closure when it has some forcible event enabled.
    #[default]
    OwnState,
    /// A state escapes only when a forcible event is enabled uniformly across
    /// its whole observation class.
    ClassIntersection,
}

/// Channel delays, capacities and the semantic switches of the construction.
#[derive(Debug, Clone)]
pub struct NetworkConfig {
    /// Control-channel delay in ticks.
    pub nc: u32,
    /// Observation-channel delay in ticks.
    pub no: u32,
    /// Control-channel capacity.
    pub lmax: usize,
    /// Observation-channel capacity.
    pub mmax: usize,
    /// FIFO control channel (the main setting); `false` switches to the
    /// unordered variant.
    pub fifo_control: bool,
    pub tick_rule: TickRule,
    /// Enabling events count as forcible.
    pub enabling_forcible: bool,
    pub bad_set: BadSetMode,
    pub forcible_clause: ForcibleClause,
    /// Fail construction on assumption violations instead of warning.
    pub strict_assumptions: bool,
    /// Depth for bounded language-level checks.
    pub depth: usize,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            nc: 0,
            no: 0,
            lmax: 1,
            mmax: 1,
            fifo_control: true,
            tick_rule: TickRule::default(),
            enabling_forcible: true,
            bad_set: BadSetMode::default(),
            forcible_clause: ForcibleClause::default(),
            strict_assumptions: false,
            depth: 10,
        }
    }
}

/// Composite state of the networked plant.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NpState {
    /// Plant state.
    pub a: StateId,
    /// Predictive state.
    pub ap: StateId,
    pub m: ObservationChannel,
    pub l: ControlChannel,
}

impl NpState {
    pub fn render(&self, g: &Tdes, gprime: &Tdes, events: &EventTable) -> String {
        format!(
            "({},{},{},{})",
            g.state_name(self.a),
            gprime.state_name(self.ap),
            self.m.render(events),
            self.l.render(events)
        )
    }
}

/// A capacity bound that may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    Finite(usize),
    Unbounded,
}

impl Bound {
    pub fn fits(self, capacity: usize) -> bool {
        match self {
            Bound::Finite(b) => b <= capacity,
            Bound::Unbounded => false,
        }
    }
}

impl std::fmt::Display for Bound {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Bound::Finite(b) => write!(f, "{b}"),
            Bound::Unbounded => write!(f, "unbounded"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AssumptionReport {
    /// Enough initial ticks before the first controllable event.
    pub initial_ticks_ok: bool,
    /// Shortest violating word when not.
    pub initial_ticks_witness: Option<Vec<EventId>>,
    /// Control capacity needed so commands are never dropped.
    pub required_lmax: Bound,
    pub lmax_ok: bool,
    /// Observation capacity needed so observations are never dropped.
    pub required_mmax: Bound,
    pub mmax_ok: bool,
}

#[derive(Debug, Clone, Default)]
pub struct NpDiagnostics {
    /// `(state, event)` pairs where a command was dropped on a full channel.
    pub control_drops: Vec<(String, String)>,
    /// `(state, event)` pairs where an observation was dropped.
    pub obs_drops: Vec<(String, String)>,
    /// Ticks taken while the predictive component could not follow.
    pub predictive_stalls: usize,
}

/// The networked plant together with its predictive component and the typed
/// decoding of every composite state.
#[derive(Debug, Clone)]
pub struct NetworkedPlant {
    pub tdes: Tdes,
    pub decode: Vec<NpState>,
    pub gprime: Tdes,
    pub assumptions: AssumptionReport,
    pub diagnostics: NpDiagnostics,
}

#[derive(Debug, Error)]
pub enum NetplantError {
    #[error("plant is not well-formed: {0:?}")]
    InvalidPlant(Vec<String>),
    #[error("initial ticks assumption violated: {0}")]
    Assumption1(String),
    #[error("channel capacity assumption violated: {0}")]
    Assumption2(String),
    #[error("predictive component cannot perform {0} initial ticks")]
    NoInitialPrediction(u32),
    #[error(transparent)]
    Tdes(#[from] crate::tdes::TdesError),
}

/// `G' = P_{Σc ∪ {tick}}(G)`: the plant with uncontrollable events erased,
/// determinized. This is the component that looks ahead for commands.
pub fn predict_base(g: &Tdes, events: &EventTable) -> Result<Tdes, NetplantError> {
    let mut keep: BTreeSet<EventId> = BTreeSet::from([events.tick()]);
    for e in events.controllable_events() {
        if g.alphabet.contains(&e) {
            keep.insert(e);
        }
    }
    let mut gp = g.natural_projection(&keep, events)?;
    gp.name = format!("{}_prime", g.name);
    Ok(gp)
}

/// Checks that every run of the plant performs at least `Nc` ticks before its
/// first controllable event. Returns a shortest violating word on failure.
pub fn check_assumption1(
    g: &Tdes,
    events: &EventTable,
    cfg: &NetworkConfig,
) -> (bool, Option<Vec<EventId>>) {
    if cfg.nc == 0 {
        return (true, None);
    }
    // Breadth-first over (state, ticks so far) along prefixes free of
    // controllable events, capped at nc ticks.
    let mut seen: BTreeSet<(StateId, u32)> = BTreeSet::from([(g.initial, 0)]);
    let mut queue: VecDeque<(StateId, u32, Vec<EventId>)> =
        VecDeque::from([(g.initial, 0, Vec::new())]);
    while let Some((s, ticks, word)) = queue.pop_front() {
        for (e, d) in g.outgoing(s) {
            if events.is_controllable_active(e) {
                let mut w = word.clone();
                w.push(e);
                return (false, Some(w));
            }
            let nt = if events.is_tick(e) { ticks + 1 } else { ticks };
            if nt >= cfg.nc {
                continue;
            }
            if seen.insert((d, nt)) {
                let mut w = word.clone();
                w.push(e);
                queue.push_back((d, nt, w));
            }
        }
    }
    (true, None)
}

/// Largest number of `counted` events over any plant window containing at
/// most `tick_budget` ticks; `Unbounded` when a tick-free cycle containing a
/// counted event exists.
fn window_bound(
    g: &Tdes,
    events: &EventTable,
    tick_budget: u32,
    counted: impl Fn(EventId) -> bool,
) -> Bound {
    let reachable: Vec<StateId> = {
        let r = g.reachable_from(g.initial);
        r.into_iter().collect()
    };
    let index: HashMap<StateId, usize> = reachable.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let n = reachable.len();

    // Tick-free subgraph: Tarjan-free SCC detection via Kosaraju would do, but
    // iterative path-based is overkill here; use repeated DFS on the small
    // graphs this tool handles.
    let mut adj: Vec<Vec<(usize, bool)>> = vec![Vec::new(); n];
    for (i, &s) in reachable.iter().enumerate() {
        for (e, d) in g.outgoing(s) {
            if !events.is_tick(e) {
                adj[i].push((index[&d], counted(e)));
            }
        }
    }
    // SCCs of the tick-free subgraph (Kosaraju).
    let mut order = Vec::with_capacity(n);
    let mut visited = vec![false; n];
    for start in 0..n {
        if visited[start] {
            continue;
        }
        // Iterative post-order.
        let mut stack = vec![(start, 0usize)];
        visited[start] = true;
        while let Some(&mut (v, ref mut i)) = stack.last_mut() {
            if *i < adj[v].len() {
                let (w, _) = adj[v][*i];
                *i += 1;
                if !visited[w] {
                    visited[w] = true;
                    stack.push((w, 0));
                }
            } else {
                order.push(v);
                stack.pop();
            }
        }
    }
    let mut radj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (v, edges) in adj.iter().enumerate() {
        for &(w, _) in edges {
            radj[w].push(v);
        }
    }
    let mut comp = vec![usize::MAX; n];
    let mut ncomp = 0;
    for &v in order.iter().rev() {
        if comp[v] != usize::MAX {
            continue;
        }
        let mut stack = vec![v];
        comp[v] = ncomp;
        while let Some(u) = stack.pop() {
            for &w in &radj[u] {
                if comp[w] == usize::MAX {
                    comp[w] = ncomp;
                    stack.push(w);
                }
            }
        }
        ncomp += 1;
    }
    // A counted edge inside an SCC lies on a tick-free cycle.
    for v in 0..n {
        for &(w, cnt) in &adj[v] {
            if cnt && comp[v] == comp[w] {
                return Bound::Unbounded;
            }
        }
    }

    // Longest path over (scc, remaining tick budget) layers.
    let layers = tick_budget as usize + 1;
    // Edges between SCC nodes: within a layer via non-tick edges, to the next
    // layer via tick edges.
    let mut best = vec![vec![0usize; ncomp]; layers];
    // Topological order of SCCs: `order` is a reverse post-order of the
    // tick-free graph; component ids from Kosaraju come out in topological
    // order already.
    for layer in 0..layers {
        // Process components in topological order (increasing id).
        for c in 0..ncomp {
            let cur = best[layer][c];
            for v in 0..n {
                if comp[v] != c {
                    continue;
                }
                for &(w, cnt) in &adj[v] {
                    let wc = comp[w];
                    let gain = cur + usize::from(cnt);
                    if wc != c && gain > best[layer][wc] {
                        best[layer][wc] = gain;
                    }
                }
                if layer + 1 < layers {
                    let s = reachable[v];
                    if let Some(d) = g.step(s, events.tick()) {
                        let wc = comp[index[&d]];
                        if cur > best[layer + 1][wc] {
                            best[layer + 1][wc] = cur;
                        }
                    }
                }
            }
        }
    }
    let max = best
        .iter()
        .flat_map(|layer| layer.iter())
        .copied()
        .max()
        .unwrap_or(0);
    Bound::Finite(max)
}

/// Control capacity needed so that no enabling command is ever dropped:
/// the most controllable events in any window with at most `Nc - 1` ticks
/// (tick-free windows when `Nc` is 0).
pub fn check_assumption2(g: &Tdes, events: &EventTable, cfg: &NetworkConfig) -> (Bound, bool) {
    let budget = cfg.nc.saturating_sub(1);
    let bound = window_bound(g, events, budget, |e| events.is_controllable_active(e));
    (bound, bound.fits(cfg.lmax))
}

/// Observation capacity needed so that no observation is ever dropped: the
/// most active events in any window with at most `No` ticks.
pub fn required_mmax(g: &Tdes, events: &EventTable, cfg: &NetworkConfig) -> (Bound, bool) {
    let bound = window_bound(g, events, cfg.no, |e| events.is_active(e));
    (bound, bound.fits(cfg.mmax))
}

/// Builds the networked plant for `g` under `cfg`.
pub fn build_networked_plant(
    g: &Tdes,
    events: &EventTable,
    cfg: &NetworkConfig,
) -> Result<NetworkedPlant, NetplantError> {
    let problems = g.validate(events);
    if !problems.is_empty() {
        return Err(NetplantError::InvalidPlant(problems));
    }
    let gprime = predict_base(g, events)?;

    let (a1_ok, a1_witness) = check_assumption1(g, events, cfg);
    if !a1_ok && cfg.strict_assumptions {
        let w = a1_witness
            .as_ref()
            .map(|w| events.render_word(w))
            .unwrap_or_default();
        return Err(NetplantError::Assumption1(format!(
            "controllable event possible before {} ticks: `{w}`",
            cfg.nc
        )));
    }
    let (required_lmax, lmax_ok) = check_assumption2(g, events, cfg);
    if !lmax_ok && cfg.strict_assumptions {
        return Err(NetplantError::Assumption2(format!(
            "control channel needs capacity {required_lmax}, configured {}",
            cfg.lmax
        )));
    }
    let (req_mmax, mmax_ok) = required_mmax(g, events, cfg);
    let assumptions = AssumptionReport {
        initial_ticks_ok: a1_ok,
        initial_ticks_witness: a1_witness,
        required_lmax,
        lmax_ok,
        required_mmax: req_mmax,
        mmax_ok,
    };

    // x0 = (a0, δ'(a'0, tick^Nc), [], ε)
    let tick = events.tick();
    let mut ap0 = gprime.initial;
    for _ in 0..cfg.nc {
        ap0 = gprime
            .step(ap0, tick)
            .ok_or(NetplantError::NoInitialPrediction(cfg.nc))?;
    }
    let empty_l = if cfg.fifo_control {
        ControlChannel::empty_fifo()
    } else {
        ControlChannel::empty_unordered()
    };
    let x0 = NpState {
        a: g.initial,
        ap: ap0,
        m: ObservationChannel::empty(),
        l: empty_l,
    };

    let mut diagnostics = NpDiagnostics::default();
    let nsp_alphabet = events.nsp_alphabet();
    let mut np = Tdes::new(&format!("NP({})", g.name), nsp_alphabet.iter().copied(), "x0");
    let mut decode: Vec<NpState> = vec![x0.clone()];
    np.set_decode(StateId(0), x0.render(g, &gprime, events));
    if g.marked.contains(&x0.a) {
        np.mark(StateId(0));
    }

    // Events explored in name order so BFS numbering is reproducible.
    let mut event_order: Vec<EventId> = nsp_alphabet.clone();
    event_order.sort_by(|&x, &y| events.name(x).cmp(events.name(y)));

    let mut index: HashMap<NpState, StateId> = HashMap::from([(x0.clone(), StateId(0))]);
    let mut queue: VecDeque<NpState> = VecDeque::from([x0]);
    while let Some(cur) = queue.pop_front() {
        let src = index[&cur];
        let mut successors: Vec<(EventId, NpState)> = Vec::new();
        for &e in &event_order {
            if events.is_enabling(e) {
                // 1) command emission, guided by the predictive component
                let base = events.base(e);
                if let Some(nap) = gprime.step(cur.ap, base) {
                    let (l2, dropped) = cur
                        .l
                        .app(base, cfg.nc, cfg.lmax, events)
                        .expect("enabling events have controllable bases");
                    if dropped {
                        diagnostics
                            .control_drops
                            .push((np.state_name(src).to_string(), events.name(e).to_string()));
                    }
                    successors.push((
                        e,
                        NpState {
                            a: cur.a,
                            ap: nap,
                            m: cur.m.clone(),
                            l: l2,
                        },
                    ));
                }
            } else if events.is_controllable_active(e) {
                // 2) execution of a commanded controllable event
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
                            diagnostics
                                .obs_drops
                                .push((np.state_name(src).to_string(), events.name(e).to_string()));
                        }
                        successors.push((
                            e,
                            NpState {
                                a: na,
                                ap: cur.ap,
                                m: m2,
                                l: l2,
                            },
                        ));
                    }
                }
            } else if events.is_uncontrollable_active(e) {
                // 3) spontaneous uncontrollable event
                if let Some(na) = g.step(cur.a, e) {
                    let (m2, dropped) = cur.m.insert(e, cfg.no, cfg.mmax, events).unwrap();
                    if dropped {
                        diagnostics
                            .obs_drops
                            .push((np.state_name(src).to_string(), events.name(e).to_string()));
                    }
                    successors.push((
                        e,
                        NpState {
                            a: na,
                            ap: cur.ap,
                            m: m2,
                            l: cur.l.clone(),
                        },
                    ));
                }
            } else if events.is_tick(e) {
                // 4) time passes; observations ready to be delivered preempt it
                if let Some(na) = g.step(cur.a, e) {
                    if cur.m.ready().is_empty() {
                        let urgent_command = cfg.tick_rule == TickRule::Literal
                            && events
                                .controllable_events()
                                .iter()
                                .any(|&c| gprime.step(cur.ap, c).is_some());
                        if !urgent_command {
                            let nap = match gprime.step(cur.ap, tick) {
                                Some(nap) => nap,
                                None => {
                                    diagnostics.predictive_stalls += 1;
                                    cur.ap
                                }
                            };
                            successors.push((
                                e,
                                NpState {
                                    a: na,
                                    ap: nap,
                                    m: cur.m.dec(),
                                    l: cur.l.dec(),
                                },
                            ));
                        }
                    }
                }
            } else if events.is_observed(e) {
                // 5) delivery of a matured observation
                let base = events.base(e);
                if cur.m.count(base, 0) > 0 {
                    successors.push((
                        e,
                        NpState {
                            a: cur.a,
                            ap: cur.ap,
                            m: cur.m.remove(base, 0),
                            l: cur.l.clone(),
                        },
                    ));
                }
            }
        }
        for (e, next) in successors {
            // Plant component tracks the plant exactly.
            if events.is_active(e) || events.is_tick(e) {
                debug_assert_eq!(Some(next.a), g.step(cur.a, e));
            } else {
                debug_assert_eq!(next.a, cur.a);
            }
            let dst = match index.get(&next) {
                Some(&id) => id,
                None => {
                    let id = np.add_state(&format!("x{}", decode.len()));
                    np.set_decode(id, next.render(g, &gprime, events));
                    if g.marked.contains(&next.a) {
                        np.mark(id);
                    }
                    decode.push(next.clone());
                    index.insert(next.clone(), id);
                    queue.push_back(next);
                    id
                }
            };
            np.add_trans(src, e, dst).expect("worklist generates each edge once");
        }
    }

    if cfg.strict_assumptions && !diagnostics.control_drops.is_empty() {
        let (state, event) = &diagnostics.control_drops[0];
        return Err(NetplantError::Assumption2(format!(
            "command `{event}` dropped on a full control channel at {state} \
             ({} drops total)",
            diagnostics.control_drops.len()
        )));
    }
    Ok(NetworkedPlant {
        tdes: np,
        decode,
        gprime,
        assumptions,
        diagnostics,
    })
}
