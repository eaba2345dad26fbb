use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::Name;

/// Average interest size on the wire.
pub const DEFAULT_INTEREST_BYTES: u32 = 41;
/// Average data packet size on the wire.
pub const DEFAULT_DATA_BYTES: u32 = 377;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PacketError {
    #[error("scope {0} not allowed (only 1 or 2)")]
    BadScope(u8),
    #[error("wire size must be at least one byte")]
    ZeroWireSize,
    #[error("freshness must be positive")]
    ZeroFreshness,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interest {
    name: Name,
    scope: Option<u8>,
    nonce: u64,
    wire_size_bytes: u32,
}

impl Interest {
    pub fn new(name: Name, nonce: u64) -> Self {
        Self {
            name,
            scope: None,
            nonce,
            wire_size_bytes: DEFAULT_INTEREST_BYTES,
        }
    }

    pub fn with_scope(mut self, scope: Option<u8>) -> Result<Self, PacketError> {
        if let Some(s) = scope {
            if !(1..=2).contains(&s) {
                return Err(PacketError::BadScope(s));
            }
        }
        self.scope = scope;
        Ok(self)
    }

    pub fn with_wire_size(mut self, bytes: u32) -> Result<Self, PacketError> {
        if bytes == 0 {
            return Err(PacketError::ZeroWireSize);
        }
        self.wire_size_bytes = bytes;
        Ok(self)
    }

    pub fn name(&self) -> &Name {
        &self.name
    }

    pub fn scope(&self) -> Option<u8> {
        self.scope
    }

    pub fn nonce(&self) -> u64 {
        self.nonce
    }

    pub fn wire_size_bytes(&self) -> u32 {
        self.wire_size_bytes
    }
}

/// A named data packet. The payload is opaque; signatures are not modelled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataPacket {
    name: Name,
    payload: Arc<[u8]>,
    freshness: Duration,
    wire_size_bytes: u32,
}

impl DataPacket {
    pub fn new(name: Name, payload: impl Into<Arc<[u8]>>, freshness: Duration) -> Result<Self, PacketError> {
        if freshness.is_zero() {
            return Err(PacketError::ZeroFreshness);
        }
        Ok(Self {
            name,
            payload: payload.into(),
            freshness,
            wire_size_bytes: DEFAULT_DATA_BYTES,
        })
    }

    pub fn with_wire_size(mut self, bytes: u32) -> Result<Self, PacketError> {
        if bytes == 0 {
            return Err(PacketError::ZeroWireSize);
        }
        self.wire_size_bytes = bytes;
        Ok(self)
    }

    pub fn name(&self) -> &Name {
        &self.name
    }

    pub fn payload(&self) -> &[u8] {
        &self.payload
    }

    pub fn freshness(&self) -> Duration {
        self.freshness
    }

    pub fn wire_size_bytes(&self) -> u32 {
        self.wire_size_bytes
    }
}

/// True iff the interest's name is a prefix of the data packet's name.
pub fn matches(interest: &Interest, data: &DataPacket) -> bool {
    interest.name.is_prefix_of(&data.name)
}
