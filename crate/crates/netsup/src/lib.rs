//! Networked supervisory control synthesis for timed discrete-event systems.
//!
//! A plant is modelled as a deterministic automaton whose alphabet contains the
//! clock event `tick`. Control commands and observations travel through delayed
//! channels: the supervisor sends an enabling event `σ_e` through a FIFO control
//! channel (delay `Nc` ticks, capacity `Lmax`) and receives an observed event
//! `σ_o` through a non-FIFO observation channel (delay `No` ticks, capacity
//! `Mmax`). The crate builds the networked plant for such a configuration, runs
//! the synthesis fixpoint that prunes blocking, time-locked and uncontrollably
//! bad states under observation consistency, and independently verifies the
//! results: nonblockingness, time-lock freeness, timed networked
//! controllability and safety against a requirement automaton.
//!
//! Entry points:
//! - [`model`] parses and emits the plain-text automaton format,
//! - [`netplant::build_networked_plant`] constructs the networked plant,
//! - [`synthesis::synthesize`] runs the synthesis loop,
//! - [`compose::compose`] builds the networked supervised plant,
//! - [`verify`] holds the independent result checkers,
//! - [`pipeline::run_pipeline`] wires everything together for the CLI.

pub mod channels;
pub mod compose;
pub mod dot;
pub mod events;
pub mod model;
pub mod netplant;
pub mod obs;
pub mod oracle;
pub mod pipeline;
pub mod synthesis;
pub mod tdes;
pub mod verify;

pub use events::{EventId, EventKind, EventTable};
pub use netplant::NetworkConfig;
pub use tdes::{StateId, Tdes};
