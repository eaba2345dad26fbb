//! Bounded Content Store with freshness and LRU/LFU replacement.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::ndn::{DataPacket, Name};
use crate::time::SimTime;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReplacementPolicy {
    #[default]
    Lru,
    Lfu,
    /// No replacement: a full store refuses new entries.
    None,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContentStoreEntry {
    pub data: DataPacket,
    /// Time of the last insertion or refresh.
    pub inserted_at: SimTime,
    pub stale_at: SimTime,
    pub last_access: SimTime,
    pub access_count: u64,
    rank: (u64, u64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InsertOutcome {
    Inserted { evicted: Option<Name> },
    Replaced,
    Rejected,
}

#[derive(Debug, Clone)]
pub struct ContentStore {
    capacity: usize,
    policy: ReplacementPolicy,
    entries: BTreeMap<Name, ContentStoreEntry>,
    order: BTreeMap<(u64, u64), Name>,
    by_stale: BTreeSet<(SimTime, Name)>,
    tick: u64,
}

impl ContentStore {
    pub fn new(capacity: usize, policy: ReplacementPolicy) -> Self {
        Self {
            capacity,
            policy,
            entries: BTreeMap::new(),
            order: BTreeMap::new(),
            by_stale: BTreeSet::new(),
            tick: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
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

    pub fn get(&self, name: &Name) -> Option<&ContentStoreEntry> {
        self.entries.get(name)
    }

    /// Entries in name order.
    pub fn entries(&self) -> impl Iterator<Item = (&Name, &ContentStoreEntry)> {
        self.entries.iter()
    }

    /// Names from next-to-evict to last-to-evict.
    pub fn eviction_order(&self) -> impl Iterator<Item = &Name> {
        self.order.values()
    }

    fn next_tick(&mut self) -> u64 {
        self.tick += 1;
        self.tick
    }

    fn rank_for(&self, count: u64, tick: u64) -> (u64, u64) {
        match self.policy {
            ReplacementPolicy::Lfu => (count, tick),
            ReplacementPolicy::Lru | ReplacementPolicy::None => (0, tick),
        }
    }

    /// Lexicographically least entry under `prefix` that can be served at
    /// `now`, without touching recency.
    pub fn peek_match(&self, prefix: &Name, now: SimTime, serve_stale: bool) -> Option<&Name> {
        self.entries
            .range(prefix.clone()..)
            .take_while(|(n, _)| prefix.is_prefix_of(n))
            .find(|(_, e)| serve_stale || e.stale_at > now)
            .map(|(n, _)| n)
    }

    /// Serves the lexicographically least matching entry and records the access.
    /// With `refresh` the entry's freshness window restarts at `now`.
    pub fn lookup(
        &mut self,
        prefix: &Name,
        now: SimTime,
        serve_stale: bool,
        refresh: bool,
    ) -> Option<DataPacket> {
        let name = self.peek_match(prefix, now, serve_stale)?.clone();
        let tick = self.next_tick();
        let policy_rank = {
            let e = &self.entries[&name];
            self.rank_for(e.access_count + 1, tick)
        };
        let e = self.entries.get_mut(&name).expect("matched");
        self.order.remove(&e.rank);
        e.rank = policy_rank;
        e.access_count += 1;
        e.last_access = now;
        if refresh {
            self.by_stale.remove(&(e.stale_at, name.clone()));
            e.inserted_at = now;
            e.stale_at = now + e.data.freshness();
            self.by_stale.insert((e.stale_at, name.clone()));
        }
        self.order.insert(policy_rank, name);
        Some(e.data.clone())
    }

    pub fn insert(&mut self, data: DataPacket, now: SimTime) -> InsertOutcome {
        if self.capacity == 0 {
            return InsertOutcome::Rejected;
        }
        let name = data.name().clone();
        let tick = self.next_tick();
        if let Some(old) = self.entries.get(&name) {
            let count = old.access_count;
            let (old_rank, old_stale) = (old.rank, old.stale_at);
            self.order.remove(&old_rank);
            self.by_stale.remove(&(old_stale, name.clone()));
            let rank = self.rank_for(count, tick);
            let stale_at = now + data.freshness();
            self.entries.insert(
                name.clone(),
                ContentStoreEntry {
                    data,
                    inserted_at: now,
                    stale_at,
                    last_access: now,
                    access_count: count,
                    rank,
                },
            );
            self.order.insert(rank, name.clone());
            self.by_stale.insert((stale_at, name));
            return InsertOutcome::Replaced;
        }
        let mut evicted = None;
        if self.entries.len() >= self.capacity {
            if self.policy == ReplacementPolicy::None {
                return InsertOutcome::Rejected;
            }
            let (_, victim) = self.order.pop_first().expect("full store has entries");
            let e = self.entries.remove(&victim).expect("indexed");
            self.by_stale.remove(&(e.stale_at, victim.clone()));
            evicted = Some(victim);
        }
        let rank = self.rank_for(0, tick);
        let stale_at = now + data.freshness();
        self.entries.insert(
            name.clone(),
            ContentStoreEntry {
                data,
                inserted_at: now,
                stale_at,
                last_access: now,
                access_count: 0,
                rank,
            },
        );
        self.order.insert(rank, name.clone());
        self.by_stale.insert((stale_at, name));
        InsertOutcome::Inserted { evicted }
    }

    /// Removes entries whose `stale_at <= now`; returns how many.
    pub fn remove_stale(&mut self, now: SimTime) -> usize {
        let mut n = 0;
        while let Some((at, _)) = self.by_stale.first() {
            if *at > now {
                break;
            }
            let (_, name) = self.by_stale.pop_first().expect("non-empty");
            if let Some(e) = self.entries.remove(&name) {
                self.order.remove(&e.rank);
            }
            n += 1;
        }
        n
    }

    pub fn clear(&mut self) {
        self.entries.clear();
        self.order.clear();
        self.by_stale.clear();
    }

    /// Position of `name` in eviction order (0 = next victim).
    pub fn eviction_rank(&self, name: &Name) -> Option<usize> {
        let rank = self.entries.get(name)?.rank;
        Some(self.order.range(..rank).count())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ndn::parse_name;
    use proptest::prelude::*;
    use std::time::Duration;

    fn d(name: &str, fresh_ms: u64) -> DataPacket {
        DataPacket::new(parse_name(name).unwrap(), vec![0], Duration::from_millis(fresh_ms)).unwrap()
    }

    fn n(s: &str) -> Name {
        parse_name(s).unwrap()
    }

    #[test]
    fn lru_evicts_least_recently_accessed() {
        let mut cs = ContentStore::new(2, ReplacementPolicy::Lru);
        let t = SimTime::ZERO;
        cs.insert(d("/a", 1000), t);
        cs.insert(d("/b", 1000), t);
        assert!(cs.lookup(&n("/a"), t, false, false).is_some());
        let out = cs.insert(d("/c", 1000), t);
        assert_eq!(out, InsertOutcome::Inserted { evicted: Some(n("/b")) });
        assert!(cs.contains(&n("/a")) && cs.contains(&n("/c")));
    }

    #[test]
    fn lfu_evicts_least_frequent() {
        let mut cs = ContentStore::new(2, ReplacementPolicy::Lfu);
        let t = SimTime::ZERO;
        cs.insert(d("/a", 1000), t);
        cs.insert(d("/b", 1000), t);
        cs.lookup(&n("/b"), t, false, false);
        cs.lookup(&n("/b"), t, false, false);
        cs.lookup(&n("/a"), t, false, false);
        let out = cs.insert(d("/c", 1000), t);
        assert_eq!(out, InsertOutcome::Inserted { evicted: Some(n("/a")) });
    }

    #[test]
    fn no_replacement_rejects_when_full() {
        let mut cs = ContentStore::new(1, ReplacementPolicy::None);
        cs.insert(d("/a", 1000), SimTime::ZERO);
        assert_eq!(cs.insert(d("/b", 1000), SimTime::ZERO), InsertOutcome::Rejected);
        let mut zero = ContentStore::new(0, ReplacementPolicy::Lru);
        assert_eq!(zero.insert(d("/a", 1000), SimTime::ZERO), InsertOutcome::Rejected);
        assert!(zero.is_empty());
    }

    #[test]
    fn prefix_lookup_prefers_least_name_and_skips_stale() {
        let mut cs = ContentStore::new(8, ReplacementPolicy::Lru);
        cs.insert(d("/p/C1", 1000), SimTime::ZERO);
        cs.insert(d("/p/C0", 10), SimTime::ZERO);
        let now = SimTime::from_millis(5);
        assert_eq!(cs.lookup(&n("/p"), now, false, false).unwrap().name(), &n("/p/C0"));
        let later = SimTime::from_millis(20);
        assert_eq!(cs.lookup(&n("/p"), later, false, false).unwrap().name(), &n("/p/C1"));
        assert_eq!(cs.lookup(&n("/p"), later, true, false).unwrap().name(), &n("/p/C0"));
        assert_eq!(cs.remove_stale(later), 1);
    }

    #[test]
    fn refresh_restarts_freshness() {
        let mut cs = ContentStore::new(8, ReplacementPolicy::Lru);
        cs.insert(d("/p/C1", 10), SimTime::ZERO);
        cs.lookup(&n("/p"), SimTime::from_millis(8), false, true);
        let e = cs.get(&n("/p/C1")).unwrap();
        assert_eq!(e.stale_at, SimTime::from_millis(18));
        assert_eq!(e.stale_at, e.inserted_at + e.data.freshness());
        assert_eq!(e.access_count, 1);
        assert_eq!(cs.remove_stale(SimTime::from_millis(12)), 0);
    }

    /// Reference LRU: a vector ordered from least to most recently used.
    fn brute_lru(capacity: usize, ops: &[(bool, u8)]) -> Vec<Option<u8>> {
        let mut order: Vec<u8> = Vec::new();
        let mut victims = Vec::new();
        for &(is_insert, key) in ops {
            let pos = order.iter().position(|&k| k == key);
            if is_insert {
                if let Some(p) = pos {
                    order.remove(p);
                    order.push(key);
                    victims.push(None);
                } else if order.len() >= capacity {
                    let v = order.remove(0);
                    order.push(key);
                    victims.push(Some(v));
                } else {
                    order.push(key);
                    victims.push(None);
                }
            } else {
                if let Some(p) = pos {
                    order.remove(p);
                    order.push(key);
                }
                victims.push(None);
            }
        }
        victims
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn lru_matches_reference(
            capacity in 1usize..16,
            ops in prop::collection::vec((any::<bool>(), 0u8..32), 0..10_000),
        ) {
            let mut cs = ContentStore::new(capacity, ReplacementPolicy::Lru);
            let expected = brute_lru(capacity, &ops);
            let t = SimTime::ZERO;
            for (i, &(is_insert, key)) in ops.iter().enumerate() {
                let name = n(&format!("/k/{key}"));
                let victim = if is_insert {
                    match cs.insert(d(&name.render(), 1_000_000), t) {
                        InsertOutcome::Inserted { evicted } => evicted,
                        _ => None,
                    }
                } else {
                    cs.lookup(&name, t, false, false);
                    None
                };
                let want = expected[i].map(|k| n(&format!("/k/{k}")));
                prop_assert_eq!(victim, want);
                prop_assert!(cs.len() <= capacity);
            }
        }
    }
}
