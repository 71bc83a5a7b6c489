//! Graphviz export. Marked states are double circles, transitions on
//! uncontrollable events (active uncontrollables, observed events, tick) are
//! dashed, and forcible event labels are underlined.

use crate::events::{EventId, EventTable};
use crate::tdes::Tdes;

fn label(e: EventId, events: &EventTable) -> String {
    let name = events.name(e);
    // Enabling events are forcible in the default setting and drawn as such.
    if events.is_forcible_active(e) || events.is_enabling(e) {
        format!("<<u>{name}</u>>")
    } else {
        format!("\"{name}\"")
    }
}

fn dashed(e: EventId, events: &EventTable) -> bool {
    events.is_tick(e) || events.is_uncontrollable_active(e) || events.is_observed(e)
}

/// Renders `t` as a DOT digraph.
pub fn to_dot(t: &Tdes, events: &EventTable) -> String {
    let mut out = String::from("digraph {\n  rankdir=LR;\n  node [shape=circle];\n");
    out.push_str("  __init [shape=point, style=invis];\n");
    for s in t.states() {
        let shape = if t.marked.contains(&s) {
            "doublecircle"
        } else {
            "circle"
        };
        let tooltip = t.decode(s).unwrap_or("");
        out.push_str(&format!(
            "  \"{}\" [shape={shape}, tooltip=\"{}\"];\n",
            t.state_name(s),
            tooltip.replace('"', "'")
        ));
    }
    out.push_str(&format!("  __init -> \"{}\";\n", t.state_name(t.initial)));
    for (s, e, d) in t.transitions() {
        let style = if dashed(e, events) { ", style=dashed" } else { "" };
        out.push_str(&format!(
            "  \"{}\" -> \"{}\" [label={}{}];\n",
            t.state_name(s),
            t.state_name(d),
            label(e, events),
            style
        ));
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures;

    #[test]
    fn dot_styles_follow_event_attributes() {
        let (g, ev) = fixtures::pedestrian();
        let dot = to_dot(&g, &ev);
        assert!(dot.contains("doublecircle"));
        // Uncontrollable p is dashed, controllable j is not.
        assert!(dot.contains("label=\"p\", style=dashed"));
        assert!(dot.contains("label=<<u>j</u>>]"));
        assert!(dot.contains("digraph"));
    }
}
