use std::collections::{BTreeMap, BTreeSet};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::cs::{ContentStore, InsertOutcome, ReplacementPolicy};
use super::pit::Pit;
use super::FaceId;
use crate::ndn::{DataPacket, Interest, Name};
use crate::time::SimTime;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RouterConfigError {
    #[error("pit_lifetime must be positive")]
    ZeroPitLifetime,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RouterConfig {
    /// Entry count; zero disables caching.
    pub cache_capacity: usize,
    pub replacement_policy: ReplacementPolicy,
    #[serde(rename = "pit_lifetime_ms", with = "crate::serde_duration::millis")]
    pub pit_lifetime: Duration,
    pub serve_stale: bool,
    /// When false, data is cached only the second time the same name is forwarded.
    pub cache_on_first_pass: bool,
    #[serde(rename = "cache_hit_extra_delay_ms", with = "crate::serde_duration::millis")]
    pub cache_hit_extra_delay: Duration,
    /// A cache hit restarts the entry's freshness window.
    pub refresh_on_hit: bool,
}

impl Default for RouterConfig {
    fn default() -> Self {
        Self {
            cache_capacity: 4096,
            replacement_policy: ReplacementPolicy::Lru,
            // Arbitrary; routers publish no standard PIT expiration.
            pit_lifetime: Duration::from_secs(4),
            serve_stale: false,
            cache_on_first_pass: true,
            cache_hit_extra_delay: Duration::ZERO,
            refresh_on_hit: true,
        }
    }
}

impl RouterConfig {
    pub fn validate(&self) -> Result<(), RouterConfigError> {
        if self.pit_lifetime.is_zero() {
            return Err(RouterConfigError::ZeroPitLifetime);
        }
        Ok(())
    }
}

/// Name-prefix forwarding table with a single next hop per route.
#[derive(Debug, Clone, Default)]
pub struct Fib {
    routes: BTreeMap<Name, FaceId>,
    default_route: Option<FaceId>,
}

impl Fib {
    pub fn add_route(&mut self, prefix: Name, face: FaceId) {
        self.routes.insert(prefix, face);
    }

    pub fn set_default(&mut self, face: FaceId) {
        self.default_route = Some(face);
    }

    /// Longest-prefix match, falling back to the default route.
    pub fn lookup(&self, name: &Name) -> Option<FaceId> {
        (1..=name.len())
            .rev()
            .find_map(|l| self.routes.get(&name.prefix(l)?).copied())
            .or(self.default_route)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum OutcomeKind {
    PitMissForwarded,
    PitHitCollapsed,
    PitHitDuplicateDropped,
    CacheHit,
    ScopeDropped,
}

impl OutcomeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            OutcomeKind::PitMissForwarded => "PIT_MISS_FORWARDED",
            OutcomeKind::PitHitCollapsed => "PIT_HIT_COLLAPSED",
            OutcomeKind::PitHitDuplicateDropped => "PIT_HIT_DUPLICATE_DROPPED",
            OutcomeKind::CacheHit => "CACHE_HIT",
            OutcomeKind::ScopeDropped => "SCOPE_DROPPED",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Packet {
    Interest(Interest),
    Data(DataPacket),
}

impl Packet {
    pub fn name(&self) -> &Name {
        match self {
            Packet::Interest(i) => i.name(),
            Packet::Data(d) => d.name(),
        }
    }

    pub fn wire_size_bytes(&self) -> u32 {
        match self {
            Packet::Interest(i) => i.wire_size_bytes(),
            Packet::Data(d) => d.wire_size_bytes(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForwardOutcome {
    pub kind: OutcomeKind,
    pub emitted: Vec<(Packet, FaceId)>,
    /// Hold time before `emitted` leaves the router.
    pub delay: Duration,
    /// PIT miss with no FIB route: entry created, nothing forwarded.
    pub no_route: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataOutcome {
    pub emitted: Vec<(DataPacket, FaceId)>,
    pub cached: bool,
    pub unsolicited: bool,
    pub evicted: Option<Name>,
}

/// Counts returned by [`Router::expire`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExpireCounts {
    pub pit: usize,
    pub stale: usize,
}

/// An NDN forwarder: PIT, Content Store and FIB.
#[derive(Debug, Clone)]
pub struct Router {
    config: RouterConfig,
    pit: Pit,
    cs: ContentStore,
    fib: Fib,
    // Names forwarded once but not yet cached (meta-cache admission).
    seen_once: BTreeMap<Name, SimTime>,
    seen_expiry: BTreeSet<(SimTime, Name)>,
}

impl Router {
    pub fn new(config: RouterConfig) -> Result<Self, RouterConfigError> {
        config.validate()?;
        let cs = ContentStore::new(config.cache_capacity, config.replacement_policy);
        Ok(Self {
            config,
            pit: Pit::default(),
            cs,
            fib: Fib::default(),
            seen_once: BTreeMap::new(),
            seen_expiry: BTreeSet::new(),
        })
    }

    pub fn config(&self) -> &RouterConfig {
        &self.config
    }

    pub fn pit(&self) -> &Pit {
        &self.pit
    }

    pub fn content_store(&self) -> &ContentStore {
        &self.cs
    }

    pub fn fib(&self) -> &Fib {
        &self.fib
    }

    pub fn fib_mut(&mut self) -> &mut Fib {
        &mut self.fib
    }

    pub fn seen_once(&self) -> impl Iterator<Item = (&Name, &SimTime)> {
        self.seen_once.iter()
    }

    /// Handles an interest that has crossed `hops` links to reach this router.
    pub fn handle_interest(
        &mut self,
        interest: &Interest,
        hops: u8,
        face: FaceId,
        now: SimTime,
    ) -> ForwardOutcome {
        self.expire(now);
        let name = interest.name();
        // Scope s admits nodes at most s-1 links from the consumer.
        let reach = interest.scope().map(|s| s.saturating_sub(1));
        if reach.is_some_and(|r| hops > r) {
            return ForwardOutcome {
                kind: OutcomeKind::ScopeDropped,
                emitted: Vec::new(),
                delay: Duration::ZERO,
                no_route: false,
            };
        }

        if let Some(data) =
            self.cs
                .lookup(name, now, self.config.serve_stale, self.config.refresh_on_hit)
        {
            return ForwardOutcome {
                kind: OutcomeKind::CacheHit,
                emitted: vec![(Packet::Data(data), face)],
                delay: self.config.cache_hit_extra_delay,
                no_route: false,
            };
        }

        if let Some(entry) = self.pit.live(name, now) {
            let kind = if entry.arrival_faces.contains(&face) {
                OutcomeKind::PitHitDuplicateDropped
            } else {
                self.pit.add_face(name, face);
                OutcomeKind::PitHitCollapsed
            };
            return ForwardOutcome {
                kind,
                emitted: Vec::new(),
                delay: Duration::ZERO,
                no_route: false,
            };
        }

        if reach.is_some_and(|r| hops.saturating_add(1) > r) {
            return ForwardOutcome {
                kind: OutcomeKind::ScopeDropped,
                emitted: Vec::new(),
                delay: Duration::ZERO,
                no_route: false,
            };
        }

        self.pit.insert(name.clone(), face, now, self.config.pit_lifetime);
        let next_hop = self.fib.lookup(name);
        ForwardOutcome {
            kind: OutcomeKind::PitMissForwarded,
            emitted: next_hop
                .map(|f| vec![(Packet::Interest(interest.clone()), f)])
                .unwrap_or_default(),
            delay: Duration::ZERO,
            no_route: next_hop.is_none(),
        }
    }

    pub fn handle_data(&mut self, data: &DataPacket, _face: FaceId, now: SimTime) -> DataOutcome {
        self.expire(now);
        let matched = self.pit.take_matching(data.name(), now);
        if matched.is_empty() {
            return DataOutcome {
                emitted: Vec::new(),
                cached: false,
                unsolicited: true,
                evicted: None,
            };
        }
        let faces: BTreeSet<FaceId> = matched
            .iter()
            .flat_map(|e| e.arrival_faces.iter().copied())
            .collect();
        let (cached, evicted) = self.admit(data, now);
        DataOutcome {
            emitted: faces.into_iter().map(|f| (data.clone(), f)).collect(),
            cached,
            unsolicited: false,
            evicted,
        }
    }

    fn admit(&mut self, data: &DataPacket, now: SimTime) -> (bool, Option<Name>) {
        if !self.config.cache_on_first_pass {
            let name = data.name();
            match self.seen_once.remove(name) {
                Some(at) => {
                    self.seen_expiry.remove(&(at, name.clone()));
                }
                None => {
                    let until = now + data.freshness();
                    self.seen_once.insert(name.clone(), until);
                    self.seen_expiry.insert((until, name.clone()));
                    return (false, None);
                }
            }
        }
        match self.cs.insert(data.clone(), now) {
            InsertOutcome::Inserted { evicted } => (true, evicted),
            InsertOutcome::Replaced => (true, None),
            InsertOutcome::Rejected => (false, None),
        }
    }

    /// Drops expired PIT entries and, unless stale content is served, stale
    /// cache entries.
    pub fn expire(&mut self, now: SimTime) -> ExpireCounts {
        let pit = self.pit.expire(now);
        let stale = if self.config.serve_stale {
            0
        } else {
            self.cs.remove_stale(now)
        };
        while let Some((at, _)) = self.seen_expiry.first() {
            if *at > now {
                break;
            }
            let (_, name) = self.seen_expiry.pop_first().expect("non-empty");
            self.seen_once.remove(&name);
        }
        ExpireCounts { pit, stale }
    }

    /// Forgets all soft state (reboot).
    pub fn reset(&mut self) {
        self.pit.clear();
        self.cs.clear();
        self.seen_once.clear();
        self.seen_expiry.clear();
    }
}
