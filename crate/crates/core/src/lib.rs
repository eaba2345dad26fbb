//! Simulation of covert ephemeral messaging through the caches and pending
//! interest tables of named-data routers.
//!
//! Layers, bottom up: [`ndn`] names and packets, [`node`] router/consumer/
//! producer state machines, [`netsim`] the discrete-event network, [`covert`]
//! the encoding techniques and [`harness`] the experiment driver.

pub mod covert;
pub mod harness;
pub mod ndn;
pub mod netsim;
pub mod node;
pub mod serde_duration;
pub mod stats;
pub mod time;

pub use covert::{Message, ProtocolParams, Symbol, Technique};
pub use harness::{ExperimentSpec, HarnessError, TrialReport};
pub use netsim::{build_topology, Preset, Simulation, TopologySpec};
pub use time::SimTime;

pub type Summary = stats::Summary<f64>;
pub type ThresholdFit = stats::ThresholdFit<f64>;
