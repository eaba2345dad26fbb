//! Forwarding-plane state machines: router, producer and consumer face.

mod consumer;
mod cs;
mod pit;
mod producer;
mod router;

use serde::{Deserialize, Serialize};

pub use consumer::{
    Consumer, RequestId, RequestRecord, RequestSpec, TimeoutAction, TrafficCounters,
};
pub use cs::{ContentStore, ContentStoreEntry, InsertOutcome, ReplacementPolicy};
pub use pit::{Pit, PitEntry};
pub use producer::{producer_respond, Catalog, CatalogEntry};
pub use router::{
    DataOutcome, ExpireCounts, Fib, ForwardOutcome, OutcomeKind, Packet, Router, RouterConfig,
    RouterConfigError,
};

/// A router interface, identified by the neighbour node on the other end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FaceId(pub u32);
