//! The two communication channels of the networked control loop.
//!
//! The control channel carries enabling commands toward the plant as a FIFO
//! list of `(event, remaining ticks)` pairs; a non-FIFO variant keeps the same
//! pairs as a multiset. The observation channel carries notifications of
//! executed events toward the supervisor and is always a multiset. Counters
//! start at the channel delay and are decremented on every tick; an entry
//! whose counter would drop below zero leaves the channel.
//!
//! All operations are value-to-value; a full channel silently ignores an
//! insertion but the fact is reported so that capacity problems can be
//! surfaced in diagnostics instead of quietly changing the semantics.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::events::{EventId, EventTable};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ChannelError {
    #[error("head/tail of empty control channel is undefined")]
    EmptyChannel,
    #[error("`{0}` is not a controllable active event")]
    NotControllable(String),
    #[error("`{0}` is not an active event")]
    NotActive(String),
}

/// FIFO (or, in the variant, unordered) buffer of pending enabling commands.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ControlChannel {
    items: Vec<(EventId, u32)>,
    fifo: bool,
}

impl ControlChannel {
    pub fn empty_fifo() -> Self {
        ControlChannel {
            items: Vec::new(),
            fifo: true,
        }
    }

    /// Multiset variant; items are kept sorted so equal contents compare equal.
    pub fn empty_unordered() -> Self {
        ControlChannel {
            items: Vec::new(),
            fifo: false,
        }
    }

    pub fn is_fifo(&self) -> bool {
        self.fifo
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[(EventId, u32)] {
        &self.items
    }

    /// Appends `(σ, counter)` unless the channel already holds `lmax` entries.
    /// The boolean reports whether the command was dropped.
    pub fn app(
        &self,
        event: EventId,
        counter: u32,
        lmax: usize,
        events: &EventTable,
    ) -> Result<(ControlChannel, bool), ChannelError> {
        if !events.is_controllable_active(event) {
            return Err(ChannelError::NotControllable(events.name(event).to_string()));
        }
        if self.items.len() >= lmax {
            return Ok((self.clone(), true));
        }
        let mut next = self.clone();
        if self.fifo {
            next.items.push((event, counter));
        } else {
            let pos = next
                .items
                .binary_search(&(event, counter))
                .unwrap_or_else(|i| i);
            next.items.insert(pos, (event, counter));
        }
        Ok((next, false))
    }

    /// First element of a nonempty FIFO channel.
    pub fn head(&self) -> Result<(EventId, u32), ChannelError> {
        self.items.first().copied().ok_or(ChannelError::EmptyChannel)
    }

    /// Channel without its first element.
    pub fn tail(&self) -> Result<ControlChannel, ChannelError> {
        if self.items.is_empty() {
            return Err(ChannelError::EmptyChannel);
        }
        let mut next = self.clone();
        next.items.remove(0);
        Ok(next)
    }

    /// Whether `(σ,0)` is present (the non-FIFO readiness test).
    pub fn contains_ready(&self, event: EventId) -> bool {
        self.items.contains(&(event, 0))
    }

    /// Removes one `(σ,0)` occurrence (non-FIFO consumption).
    pub fn remove_ready(&self, event: EventId) -> Result<ControlChannel, ChannelError> {
        match self.items.iter().position(|&it| it == (event, 0)) {
            Some(pos) => {
                let mut next = self.clone();
                next.items.remove(pos);
                Ok(next)
            }
            None => Err(ChannelError::EmptyChannel),
        }
    }

    /// Decrements every counter; entries already at zero expire and leave the
    /// channel. Relative order of the survivors is preserved.
    pub fn dec(&self) -> ControlChannel {
        let mut next = self.clone();
        next.items = self
            .items
            .iter()
            .filter(|&&(_, n)| n > 0)
            .map(|&(e, n)| (e, n - 1))
            .collect();
        next
    }

    /// Canonical rendering, e.g. `[(j,1),(k,0)]`.
    pub fn render(&self, events: &EventTable) -> String {
        let mut s = String::from("[");
        for (i, &(e, n)) in self.items.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            let _ = write!(s, "({},{})", events.name(e), n);
        }
        s.push(']');
        s
    }
}

/// Multiset of in-flight observations: `(event, remaining ticks) -> count`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ObservationChannel {
    counts: BTreeMap<(EventId, u32), u32>,
}

impl ObservationChannel {
    pub fn empty() -> Self {
        ObservationChannel::default()
    }

    /// Total number of buffered observations.
    pub fn len(&self) -> usize {
        self.counts.values().map(|&c| c as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn count(&self, event: EventId, counter: u32) -> u32 {
        self.counts.get(&(event, counter)).copied().unwrap_or(0)
    }

    pub fn entries(&self) -> impl Iterator<Item = ((EventId, u32), u32)> + '_ {
        self.counts.iter().map(|(&k, &v)| (k, v))
    }

    /// Inserts `(σ, counter)` unless the channel already holds `mmax`
    /// observations. The boolean reports whether it was dropped.
    pub fn insert(
        &self,
        event: EventId,
        counter: u32,
        mmax: usize,
        events: &EventTable,
    ) -> Result<(ObservationChannel, bool), ChannelError> {
        if !events.is_active(event) {
            return Err(ChannelError::NotActive(events.name(event).to_string()));
        }
        if self.len() >= mmax {
            return Ok((self.clone(), true));
        }
        let mut next = self.clone();
        *next.counts.entry((event, counter)).or_insert(0) += 1;
        Ok((next, false))
    }

    /// Removes one `(σ, counter)` occurrence, saturating at zero.
    pub fn remove(&self, event: EventId, counter: u32) -> ObservationChannel {
        let mut next = self.clone();
        if let Some(c) = next.counts.get_mut(&(event, counter)) {
            *c -= 1;
            if *c == 0 {
                next.counts.remove(&(event, counter));
            }
        }
        next
    }

    /// Shifts every counter down by one; entries at zero vanish.
    pub fn dec(&self) -> ObservationChannel {
        let mut next = ObservationChannel::empty();
        for (&(e, n), &c) in &self.counts {
            if n > 0 {
                *next.counts.entry((e, n - 1)).or_insert(0) += c;
            }
        }
        next
    }

    /// Events with a ready (counter zero) observation, in id order.
    pub fn ready(&self) -> Vec<EventId> {
        self.counts
            .keys()
            .filter(|&&(_, n)| n == 0)
            .map(|&(e, _)| e)
            .collect()
    }

    /// Canonical rendering, e.g. `{(j,0):1,(p,1):2}`.
    pub fn render(&self, events: &EventTable) -> String {
        let mut s = String::from("{");
        for (i, (&(e, n), &c)) in self.counts.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            let _ = write!(s, "({},{}):{}", events.name(e), n, c);
        }
        s.push('}');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> (EventTable, EventId, EventId, EventId) {
        let mut ev = EventTable::new();
        let j = ev.add_active("j", true, true).unwrap();
        let k = ev.add_active("k", true, false).unwrap();
        let p = ev.add_active("p", false, false).unwrap();
        (ev, j, k, p)
    }

    #[test]
    fn app_and_full_drop() {
        let (ev, j, k, _) = table();
        let l = ControlChannel::empty_fifo();
        let (l1, dropped) = l.app(j, 1, 1, &ev).unwrap();
        assert!(!dropped);
        assert_eq!(l1.items(), &[(j, 1)]);

        let (l2, dropped) = l1.app(j, 1, 1, &ev).unwrap();
        assert!(dropped);
        assert_eq!(l2, l1);

        let (l3, dropped) = l1.app(k, 2, 2, &ev).unwrap();
        assert!(!dropped);
        assert_eq!(l3.items(), &[(j, 1), (k, 2)]);
    }

    #[test]
    fn app_rejects_uncontrollable() {
        let (ev, _, _, p) = table();
        let l = ControlChannel::empty_fifo();
        assert!(matches!(
            l.app(p, 1, 4, &ev),
            Err(ChannelError::NotControllable(_))
        ));
    }

    #[test]
    fn head_tail() {
        let (ev, j, k, _) = table();
        let l = ControlChannel::empty_fifo();
        let (l, _) = l.app(j, 0, 4, &ev).unwrap();
        let (l, _) = l.app(k, 1, 4, &ev).unwrap();
        assert_eq!(l.head().unwrap(), (j, 0));
        assert_eq!(l.tail().unwrap().items(), &[(k, 1)]);
        assert_eq!(
            ControlChannel::empty_fifo().head(),
            Err(ChannelError::EmptyChannel)
        );
        let singleton = ControlChannel::empty_fifo().app(j, 1, 4, &ev).unwrap().0;
        assert!(singleton.tail().unwrap().is_empty());
    }

    #[test]
    fn dec_expires_and_preserves_order() {
        let (ev, j, k, _) = table();
        let l = ControlChannel::empty_fifo();
        let (l, _) = l.app(j, 0, 4, &ev).unwrap();
        assert!(l.dec().is_empty());

        let l = ControlChannel::empty_fifo();
        let (l, _) = l.app(j, 2, 4, &ev).unwrap();
        let (l, _) = l.app(k, 1, 4, &ev).unwrap();
        assert_eq!(l.dec().items(), &[(j, 1), (k, 0)]);
        assert!(ControlChannel::empty_fifo().dec().is_empty());
    }

    #[test]
    fn obs_insert_remove_ready() {
        let (ev, j, _, p) = table();
        let m = ObservationChannel::empty();
        let (m, dropped) = m.insert(p, 1, 2, &ev).unwrap();
        assert!(!dropped);
        assert_eq!(m.len(), 1);

        let (m2, dropped) = m.insert(p, 1, 1, &ev).unwrap();
        assert!(dropped);
        assert_eq!(m2, m);

        let (m3, _) = m.insert(p, 0, 2, &ev).unwrap();
        assert_eq!(m3.ready(), vec![p]);
        let m4 = m3.remove(p, 0);
        assert!(m4.ready().is_empty());
        assert_eq!(m4.count(p, 1), 1);

        let (m5, _) = ObservationChannel::empty().insert(j, 1, 4, &ev).unwrap();
        let (m5, _) = m5.insert(j, 1, 4, &ev).unwrap();
        assert_eq!(m5.dec().count(j, 0), 2);
    }

    #[test]
    fn obs_insert_rejects_non_active() {
        let (mut ev, j, _, _) = table();
        ev.derive_network_events().unwrap();
        let je = ev.enabling_of(j).unwrap();
        assert!(matches!(
            ObservationChannel::empty().insert(je, 1, 4, &ev),
            Err(ChannelError::NotActive(_))
        ));
    }

    #[test]
    fn rendering_is_canonical() {
        let (ev, j, k, p) = table();
        let l = ControlChannel::empty_fifo();
        let (l, _) = l.app(j, 1, 4, &ev).unwrap();
        let (l, _) = l.app(k, 0, 4, &ev).unwrap();
        assert_eq!(l.render(&ev), "[(j,1),(k,0)]");
        let m = ObservationChannel::empty();
        let (m, _) = m.insert(p, 0, 4, &ev).unwrap();
        let (m, _) = m.insert(j, 1, 4, &ev).unwrap();
        let (m, _) = m.insert(j, 1, 4, &ev).unwrap();
        assert_eq!(m.render(&ev), "{(j,1):2,(p,0):1}");
    }
}
