//! Names, interests, data packets, and the matching rule between them.

mod name;
mod packet;

pub use name::{
    is_prefix_of, parse_name, parse_name_with, Name, NameError, NameLimits, DEFAULT_MAX_COMPONENTS,
    DEFAULT_MAX_COMPONENT_LEN,
};
pub use packet::{matches, DataPacket, Interest, PacketError, DEFAULT_DATA_BYTES, DEFAULT_INTEREST_BYTES};
