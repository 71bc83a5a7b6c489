//! Plain-text model format.
//!
//! ```text
//! tdes <name>
//! event <name> {controllable|uncontrollable} [forcible]
//! state <name> [initial] [marked]
//! trans <src> <event|tick> <dst>
//! ```
//!
//! `tick` is implicit and never declared. `#` starts a comment running to the
//! end of the line. Sections must appear in the order events, states,
//! transitions. Unknown directives are errors. [`emit_model`] writes the
//! canonical form: events sorted by name, states in declaration order,
//! transitions sorted by source, event name and target; parsing an emitted
//! file and emitting it again is byte-identical.

use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::events::{EventId, EventTable};
use crate::tdes::Tdes;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("{path}:{line}:{col}: {msg}")]
    Parse {
        path: String,
        line: usize,
        col: usize,
        msg: String,
    },
    #[error("io error on `{path}`: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

fn err(path: &str, line: usize, col: usize, msg: impl Into<String>) -> ModelError {
    ModelError::Parse {
        path: path.to_string(),
        line,
        col,
        msg: msg.into(),
    }
}

/// Parses a model file into an automaton and its event table.
pub fn parse_model(path: &Path) -> Result<(Tdes, EventTable), ModelError> {
    let text = fs::read_to_string(path).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_model_str(&text, &path.display().to_string())
}

/// Parses model text; `path` is used only in error messages.
pub fn parse_model_str(text: &str, path: &str) -> Result<(Tdes, EventTable), ModelError> {
    #[derive(PartialEq, PartialOrd)]
    enum Section {
        Header,
        Events,
        States,
        Trans,
    }

    let mut events = EventTable::new();
    let mut name = String::new();
    let mut states: Vec<(String, bool, bool)> = Vec::new();
    let mut trans: Vec<(String, String, String, usize)> = Vec::new();
    let mut section = Section::Header;

    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        };
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        let col = raw.find(tokens[0]).unwrap_or(0) + 1;
        match tokens[0] {
            "tdes" => {
                if section != Section::Header {
                    return Err(err(path, lineno, col, "duplicate `tdes` header"));
                }
                if tokens.len() != 2 {
                    return Err(err(path, lineno, col, "expected `tdes <name>`"));
                }
                name = tokens[1].to_string();
                section = Section::Events;
            }
            "event" => {
                if section != Section::Events {
                    return Err(err(
                        path,
                        lineno,
                        col,
                        "`event` lines must follow the header and precede `state` lines",
                    ));
                }
                if tokens.len() < 3 || tokens.len() > 4 {
                    return Err(err(
                        path,
                        lineno,
                        col,
                        "expected `event <name> {controllable|uncontrollable} [forcible]`",
                    ));
                }
                let controllable = match tokens[2] {
                    "controllable" => true,
                    "uncontrollable" => false,
                    other => {
                        return Err(err(
                            path,
                            lineno,
                            col,
                            format!("expected controllability, found `{other}`"),
                        ))
                    }
                };
                let forcible = match tokens.get(3) {
                    None => false,
                    Some(&"forcible") => true,
                    Some(other) => {
                        return Err(err(path, lineno, col, format!("unknown attribute `{other}`")))
                    }
                };
                events
                    .add_active(tokens[1], controllable, forcible)
                    .map_err(|e| err(path, lineno, col, e.to_string()))?;
            }
            "state" => {
                if section == Section::Header || section == Section::Trans {
                    return Err(err(
                        path,
                        lineno,
                        col,
                        "`state` lines must follow `event` lines and precede `trans` lines",
                    ));
                }
                section = Section::States;
                if tokens.len() < 2 {
                    return Err(err(path, lineno, col, "expected `state <name> [initial] [marked]`"));
                }
                let mut initial = false;
                let mut marked = false;
                for &t in &tokens[2..] {
                    match t {
                        "initial" => initial = true,
                        "marked" => marked = true,
                        other => {
                            return Err(err(
                                path,
                                lineno,
                                col,
                                format!("unknown state attribute `{other}`"),
                            ))
                        }
                    }
                }
                if states.iter().any(|(n, _, _)| n == tokens[1]) {
                    return Err(err(path, lineno, col, format!("duplicate state `{}`", tokens[1])));
                }
                states.push((tokens[1].to_string(), initial, marked));
            }
            "trans" => {
                if section == Section::Header || section == Section::Events {
                    return Err(err(path, lineno, col, "`trans` lines must follow `state` lines"));
                }
                section = Section::Trans;
                if tokens.len() != 4 {
                    return Err(err(path, lineno, col, "expected `trans <src> <event> <dst>`"));
                }
                trans.push((
                    tokens[1].to_string(),
                    tokens[2].to_string(),
                    tokens[3].to_string(),
                    lineno,
                ));
            }
            other => {
                return Err(err(path, lineno, col, format!("unknown directive `{other}`")));
            }
        }
    }

    if name.is_empty() {
        return Err(err(path, 1, 1, "missing `tdes <name>` header"));
    }
    let initials: Vec<&String> = states
        .iter()
        .filter(|(_, ini, _)| *ini)
        .map(|(n, _, _)| n)
        .collect();
    if initials.len() != 1 {
        return Err(err(
            path,
            1,
            1,
            format!("expected exactly one initial state, found {}", initials.len()),
        ));
    }

    let mut alphabet: Vec<EventId> = vec![events.tick()];
    alphabet.extend(events.active_events());
    let mut t = Tdes::new(&name, alphabet, initials[0]);
    for (sname, _, marked) in &states {
        let id = t.add_state(sname);
        if *marked {
            t.mark(id);
        }
    }
    for (src, ev, dst, lineno) in &trans {
        let s = t
            .state_by_name(src)
            .ok_or_else(|| err(path, *lineno, 1, format!("unknown state `{src}`")))?;
        let d = t
            .state_by_name(dst)
            .ok_or_else(|| err(path, *lineno, 1, format!("unknown state `{dst}`")))?;
        let e = events
            .lookup(ev)
            .ok_or_else(|| err(path, *lineno, 1, format!("unknown event `{ev}`")))?;
        t.add_trans(s, e, d)
            .map_err(|_| err(path, *lineno, 1, format!("duplicate transition from `{src}` on `{ev}`")))?;
    }
    Ok((t, events))
}

/// Renders a model in canonical form. Works for plain plants and for
/// networked automata: enabling events are written as controllable forcible
/// declarations, observed events as uncontrollable ones, so emitted files
/// always re-parse (the derived-event semantics is not round-tripped, only
/// the automaton).
pub fn emit_model_string(t: &Tdes, events: &EventTable) -> String {
    let mut out = format!("tdes {}\n", t.name);
    let mut evs: Vec<EventId> = t
        .alphabet
        .iter()
        .copied()
        .filter(|&e| !events.is_tick(e))
        .collect();
    evs.sort_by(|&a, &b| events.name(a).cmp(events.name(b)));
    for e in evs {
        let (c, f) = match events.kind(e) {
            crate::events::EventKind::Active {
                controllable,
                forcible,
            } => (controllable, forcible),
            crate::events::EventKind::Enabling { .. } => (true, true),
            crate::events::EventKind::Observed { .. } => (false, false),
            crate::events::EventKind::Tick => continue,
        };
        out.push_str("event ");
        out.push_str(events.name(e));
        out.push_str(if c { " controllable" } else { " uncontrollable" });
        if f {
            out.push_str(" forcible");
        }
        out.push('\n');
    }
    for s in t.states() {
        out.push_str("state ");
        out.push_str(t.state_name(s));
        if s == t.initial {
            out.push_str(" initial");
        }
        if t.marked.contains(&s) {
            out.push_str(" marked");
        }
        out.push('\n');
    }
    let mut edges: Vec<(StateKey, String, StateKey)> = t
        .transitions()
        .map(|(s, e, d)| {
            (
                (s.0, t.state_name(s).to_string()),
                events.name(e).to_string(),
                (d.0, t.state_name(d).to_string()),
            )
        })
        .collect();
    edges.sort();
    for ((_, s), e, (_, d)) in edges {
        out.push_str(&format!("trans {s} {e} {d}\n"));
    }
    out
}

type StateKey = (usize, String);

/// Writes a model file in canonical form.
pub fn emit_model(t: &Tdes, events: &EventTable, path: &Path) -> Result<(), ModelError> {
    fs::write(path, emit_model_string(t, events)).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Programmatic copies of the bundled example models, shared by the test
/// suites so unit tests do not depend on fixture file paths.
pub mod fixtures {
    use super::*;

    /// The endangered-pedestrian plant: `j` is controllable and forcible, `p`
    /// uncontrollable, only `a7` is marked.
    pub fn pedestrian() -> (Tdes, EventTable) {
        let text = "\
tdes pedestrian
event j controllable forcible
event p uncontrollable
state a0 initial
state a1
state a2
state a3
state a4
state a5
state a6
state a7 marked
trans a0 tick a1
trans a1 tick a2
trans a1 j a5
trans a2 p a3
trans a2 j a6
trans a3 tick a3
trans a3 j a4
trans a4 tick a4
trans a5 tick a6
trans a6 p a7
trans a7 tick a7
";
        parse_model_str(text, "<pedestrian>").unwrap()
    }

    /// The five-state predictive automaton drawn for the pedestrian example
    /// (language-equivalent to projecting the plant onto `{tick, j}`).
    pub fn pedestrian_gprime_figure(events: &EventTable) -> Tdes {
        let tick = events.tick();
        let j = events.lookup("j").unwrap();
        let mut g = Tdes::new("gprime_fig", [tick, j], "b0");
        let b0 = g.state_by_name("b0").unwrap();
        let b1 = g.add_state("b1");
        let b2 = g.add_state("b2");
        let b3 = g.add_state("b3");
        let b4 = g.add_state("b4");
        g.add_trans(b0, tick, b1).unwrap();
        g.add_trans(b1, tick, b2).unwrap();
        g.add_trans(b1, j, b3).unwrap();
        g.add_trans(b2, tick, b2).unwrap();
        g.add_trans(b2, j, b4).unwrap();
        g.add_trans(b3, tick, b4).unwrap();
        g.add_trans(b4, tick, b4).unwrap();
        g.mark(b4);
        g
    }

    /// Plant of the non-FIFO-channel example: two controllable events `a`,
    /// `b`; doing `b` first strands the plant in unmarked `a4`.
    pub fn nonfifo_example_plant() -> (Tdes, EventTable) {
        let text = "\
tdes nonfifo_example
event a controllable
event b controllable
state a0 initial
state a1
state a2
state a3 marked
state a4
trans a0 tick a1
trans a1 a a2
trans a1 b a4
trans a2 b a3
trans a3 tick a3
trans a4 tick a4
";
        parse_model_str(text, "<nonfifo>").unwrap()
    }
}
