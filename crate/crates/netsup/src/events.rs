//! Event registry: base plant events plus the derived enabling and observed
//! events used by the networked layer.

use std::collections::BTreeMap;

use thiserror::Error;

/// Index into an [`EventTable`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EventId(pub usize);

/// What role an event plays.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    /// The global clock event. Exactly one per table, never active.
    Tick,
    /// A plant event other than tick.
    Active { controllable: bool, forcible: bool },
    /// The command `σ_e` authorizing a controllable active event. Travels
    /// through the control channel.
    Enabling { base: EventId },
    /// The notification `σ_o` that an active event occurred. Travels through
    /// the observation channel.
    Observed { base: EventId },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EventTableError {
    #[error("duplicate event name `{0}`")]
    DuplicateName(String),
    #[error("event name `{0}` collides with a derived event name")]
    DerivedCollision(String),
    #[error("`tick` cannot be declared as an active event")]
    TickDeclared,
}

/// Registry of all events of a configuration.
///
/// Base events (tick and the active events) are registered first; derived
/// enabling and observed events are appended by [`EventTable::derive_network_events`].
/// Ids are stable, so sets of events can be kept as sorted id collections.
#[derive(Debug, Clone)]
pub struct EventTable {
    names: Vec<String>,
    kinds: Vec<EventKind>,
    by_name: BTreeMap<String, EventId>,
    tick: EventId,
    /// base controllable event -> its enabling event
    enabling_of: BTreeMap<EventId, EventId>,
    /// base active event -> its observed event
    observed_of: BTreeMap<EventId, EventId>,
}

impl EventTable {
    /// Creates a table containing only `tick`.
    pub fn new() -> Self {
        EventTable {
            names: vec!["tick".to_string()],
            kinds: vec![EventKind::Tick],
            by_name: BTreeMap::from([(String::from("tick"), EventId(0))]),
            tick: EventId(0),
            enabling_of: BTreeMap::new(),
            observed_of: BTreeMap::new(),
        }
    }

    pub fn tick(&self) -> EventId {
        self.tick
    }

    /// Registers an active plant event.
    pub fn add_active(
        &mut self,
        name: &str,
        controllable: bool,
        forcible: bool,
    ) -> Result<EventId, EventTableError> {
        if name == "tick" {
            return Err(EventTableError::TickDeclared);
        }
        if self.by_name.contains_key(name) {
            return Err(EventTableError::DuplicateName(name.to_string()));
        }
        let id = EventId(self.names.len());
        self.names.push(name.to_string());
        self.kinds.push(EventKind::Active {
            controllable,
            forcible,
        });
        self.by_name.insert(name.to_string(), id);
        Ok(id)
    }

    /// Adds `σ_e` for every controllable active event and `σ_o` for every
    /// active event. Derived names are `<name>_e` and `<name>_o`; a clash with
    /// a declared event name is rejected.
    pub fn derive_network_events(&mut self) -> Result<(), EventTableError> {
        let base: Vec<EventId> = self.active_events();
        for id in base {
            let (controllable, _) = match self.kinds[id.0] {
                EventKind::Active {
                    controllable,
                    forcible,
                } => (controllable, forcible),
                _ => unreachable!(),
            };
            if controllable {
                let name = format!("{}_e", self.names[id.0]);
                if self.by_name.contains_key(&name) {
                    return Err(EventTableError::DerivedCollision(name));
                }
                let eid = EventId(self.names.len());
                self.names.push(name.clone());
                self.kinds.push(EventKind::Enabling { base: id });
                self.by_name.insert(name, eid);
                self.enabling_of.insert(id, eid);
            }
            let name = format!("{}_o", self.names[id.0]);
            if self.by_name.contains_key(&name) {
                return Err(EventTableError::DerivedCollision(name));
            }
            let oid = EventId(self.names.len());
            self.names.push(name.clone());
            self.kinds.push(EventKind::Observed { base: id });
            self.by_name.insert(name, oid);
            self.observed_of.insert(id, oid);
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, id: EventId) -> &str {
        &self.names[id.0]
    }

    pub fn kind(&self, id: EventId) -> EventKind {
        self.kinds[id.0]
    }

    pub fn lookup(&self, name: &str) -> Option<EventId> {
        self.by_name.get(name).copied()
    }

    pub fn is_tick(&self, id: EventId) -> bool {
        id == self.tick
    }

    pub fn is_active(&self, id: EventId) -> bool {
        matches!(self.kinds[id.0], EventKind::Active { .. })
    }

    pub fn is_controllable_active(&self, id: EventId) -> bool {
        matches!(
            self.kinds[id.0],
            EventKind::Active {
                controllable: true,
                ..
            }
        )
    }

    pub fn is_uncontrollable_active(&self, id: EventId) -> bool {
        matches!(
            self.kinds[id.0],
            EventKind::Active {
                controllable: false,
                ..
            }
        )
    }

    pub fn is_forcible_active(&self, id: EventId) -> bool {
        matches!(self.kinds[id.0], EventKind::Active { forcible: true, .. })
    }

    pub fn is_enabling(&self, id: EventId) -> bool {
        matches!(self.kinds[id.0], EventKind::Enabling { .. })
    }

    pub fn is_observed(&self, id: EventId) -> bool {
        matches!(self.kinds[id.0], EventKind::Observed { .. })
    }

    /// The base event of a derived event, or the event itself.
    pub fn base(&self, id: EventId) -> EventId {
        match self.kinds[id.0] {
            EventKind::Enabling { base } | EventKind::Observed { base } => base,
            _ => id,
        }
    }

    pub fn enabling_of(&self, base: EventId) -> Option<EventId> {
        self.enabling_of.get(&base).copied()
    }

    pub fn observed_of(&self, base: EventId) -> Option<EventId> {
        self.observed_of.get(&base).copied()
    }

    /// All active events, in id order.
    pub fn active_events(&self) -> Vec<EventId> {
        (0..self.names.len())
            .map(EventId)
            .filter(|&e| self.is_active(e))
            .collect()
    }

    pub fn controllable_events(&self) -> Vec<EventId> {
        (0..self.names.len())
            .map(EventId)
            .filter(|&e| self.is_controllable_active(e))
            .collect()
    }

    pub fn enabling_events(&self) -> Vec<EventId> {
        (0..self.names.len())
            .map(EventId)
            .filter(|&e| self.is_enabling(e))
            .collect()
    }

    pub fn observed_events(&self) -> Vec<EventId> {
        (0..self.names.len())
            .map(EventId)
            .filter(|&e| self.is_observed(e))
            .collect()
    }

    /// `Σ_G = Σ_a ∪ {tick}`.
    pub fn plant_alphabet(&self) -> Vec<EventId> {
        let mut v = vec![self.tick];
        v.extend(self.active_events());
        v.sort();
        v
    }

    /// `Σ_NS = Σ_e ∪ Σ_o ∪ {tick}`: everything the supervisor sees and emits.
    pub fn supervisor_alphabet(&self) -> Vec<EventId> {
        let mut v = vec![self.tick];
        v.extend(self.enabling_events());
        v.extend(self.observed_events());
        v.sort();
        v
    }

    /// `Σ_NSP = Σ_e ∪ Σ_o ∪ Σ_G`.
    pub fn nsp_alphabet(&self) -> Vec<EventId> {
        let mut v = self.plant_alphabet();
        v.extend(self.enabling_events());
        v.extend(self.observed_events());
        v.sort();
        v
    }

    /// Renders a word as space-separated event names.
    pub fn render_word(&self, word: &[EventId]) -> String {
        word.iter()
            .map(|&e| self.name(e))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl Default for EventTable {
    fn default() -> Self {
        Self::new()
    }
}
