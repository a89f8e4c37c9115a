//! Behavior-profile driven message dissemination for opportunistic human
//! networks: trace ingestion, eigen-behavior profiles, stability analysis,
//! encounter statistics, and encounter-driven dissemination protocols with a
//! trace-replay simulator.

pub mod analysis;
pub mod cli;
pub mod encounter;
pub mod error;
pub mod profile;
pub mod protocols;
pub mod rng;
pub mod sim;
pub mod trace;

pub use error::{Error, Result};
