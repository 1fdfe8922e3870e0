//! Traces, asynchronous automata and their decompositions.

pub mod alphabet;
pub mod atm;
pub mod automaton;
pub mod cascade;
pub mod decompose;
pub mod error;
pub mod fixtures;
pub mod gossip;
pub mod loctl;
pub mod monoid;
pub mod trace;
pub mod transducer;
pub mod verify;

pub use alphabet::{ActionId, DistributedAlphabet, ProcessId};
pub use error::{Error, Result};
pub use trace::{Config, EventId, Trace};
