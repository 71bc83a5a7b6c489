//! Shared helpers for the integration suites.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use netsup::events::{EventId, EventTable};
use netsup::model::parse_model;
use netsup::netplant::{NetworkConfig, NetworkedPlant, TickRule};
use netsup::pipeline::remap_events;
use netsup::tdes::{StateId, Tdes};

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .canonicalize()
        .expect("fixtures directory exists")
}

/// Parses a plant fixture and derives its networked events.
pub fn load_plant(name: &str) -> (Tdes, EventTable) {
    let (t, mut ev) = parse_model(&fixture_dir().join(name)).expect("fixture parses");
    ev.derive_network_events().expect("fixture derives");
    (t, ev)
}

/// Parses a transcription fixture and remaps it onto `target` by event name.
pub fn load_into(name: &str, target: &EventTable) -> Tdes {
    let (t, ev) = parse_model(&fixture_dir().join(name)).expect("fixture parses");
    remap_events(&t, &ev, target).expect("fixture events exist in target table")
}

pub fn pedestrian_cfg() -> NetworkConfig {
    NetworkConfig {
        nc: 1,
        no: 1,
        lmax: 1,
        mmax: 2,
        ..NetworkConfig::default()
    }
}

pub fn nonfifo_cfg() -> NetworkConfig {
    NetworkConfig {
        nc: 1,
        no: 1,
        lmax: 2,
        mmax: 2,
        tick_rule: TickRule::Literal,
        ..NetworkConfig::default()
    }
}

/// Checks that every plant word of length ≤ `depth` is covered by some
/// networked word with the same plant projection.
pub fn plant_word_covered(np: &NetworkedPlant, events: &EventTable, word: &[EventId]) -> bool {
    let mut seen: BTreeSet<(StateId, usize)> = BTreeSet::new();
    let mut stack = vec![(np.tdes.initial, 0usize)];
    while let Some((s, i)) = stack.pop() {
        if i == word.len() {
            return true;
        }
        if !seen.insert((s, i)) {
            continue;
        }
        for (e, d) in np.tdes.outgoing(s) {
            if events.is_active(e) || events.is_tick(e) {
                if word[i] == e {
                    stack.push((d, i + 1));
                }
            } else {
                stack.push((d, i));
            }
        }
    }
    false
}
