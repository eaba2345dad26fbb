use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Duration;

use crate::ndn::{DataPacket, Interest, Name, DEFAULT_DATA_BYTES};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CatalogEntry {
    pub payload: Arc<[u8]>,
    pub freshness: Duration,
    pub wire_size_bytes: u32,
}

/// Content a producer can serve: explicit full names plus "generative"
/// namespaces where any name strictly below the prefix exists.
#[derive(Debug, Clone, Default)]
pub struct Catalog {
    entries: BTreeMap<Name, CatalogEntry>,
    generative: BTreeMap<Name, CatalogEntry>,
}

impl Catalog {
    pub fn insert(&mut self, name: Name, entry: CatalogEntry) {
        self.entries.insert(name, entry);
    }

    pub fn add_namespace(&mut self, prefix: Name, template: CatalogEntry) {
        self.generative.insert(prefix, template);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, name: &Name) -> bool {
        self.entries.contains_key(name)
    }

    pub fn namespaces(&self) -> impl Iterator<Item = &Name> {
        self.generative.keys()
    }

    /// Lexicographically least explicit entry matching the interest, else a
    /// generated packet if the interest names something inside a namespace.
    pub fn respond(&self, interest: &Interest) -> Option<DataPacket> {
        let prefix = interest.name();
        let explicit = self
            .entries
            .range(prefix.clone()..)
            .take_while(|(n, _)| prefix.is_prefix_of(n))
            .next();
        let (name, entry) = match explicit {
            Some((n, e)) => (n.clone(), e),
            None => {
                let (_, e) = self
                    .generative
                    .iter()
                    .find(|(ns, _)| ns.len() < prefix.len() && ns.is_prefix_of(prefix))?;
                (prefix.clone(), e)
            }
        };
        let data = DataPacket::new(name, entry.payload.clone(), entry.freshness).ok()?;
        data.with_wire_size(entry.wire_size_bytes).ok()
    }
}

impl CatalogEntry {
    pub fn new(payload: impl Into<Arc<[u8]>>, freshness: Duration) -> Self {
        Self {
            payload: payload.into(),
            freshness,
            wire_size_bytes: DEFAULT_DATA_BYTES,
        }
    }
}

/// Stateless responder: answers from its catalog, stays silent otherwise.
pub fn producer_respond(catalog: &Catalog, interest: &Interest) -> Option<DataPacket> {
    catalog.respond(interest)
}
