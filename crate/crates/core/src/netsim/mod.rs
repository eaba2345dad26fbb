//! Deterministic discrete-event network simulation.

mod clock;
mod engine;
mod link;
mod rng;
mod sim;
mod topology;

pub use clock::{local_clock, ClockModel};
pub use engine::{Engine, EngineError, SimEvent};
pub use link::{transmit, Jitter, LinkCounters, LinkError, LinkModel};
pub use rng::{fnv1a, RngStreams};
pub use sim::{
    build_topology, data_for, Action, ConsumerSnapshot, CsSnapshot, EventSnapshot, NetworkState,
    PacketKind, PitSnapshot, RouterSnapshot, Simulation, TraceRecord, TrafficClass,
    BACKGROUND_REQUEST_BASE,
};
pub use topology::{
    BackgroundSpec, NodeId, NodeInfo, NodeKind, Preset, Roles, Topology, TopologyError,
    TopologySpec,
};
