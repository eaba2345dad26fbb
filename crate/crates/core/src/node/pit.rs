use std::collections::{BTreeMap, BTreeSet};
use std::time::Duration;

use serde::Serialize;

use super::FaceId;
use crate::ndn::Name;
use crate::time::SimTime;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PitEntry {
    pub name: Name,
    pub arrival_faces: BTreeSet<FaceId>,
    pub created_at: SimTime,
    pub expires_at: SimTime,
}

impl PitEntry {
    pub fn is_live(&self, now: SimTime) -> bool {
        self.expires_at > now
    }
}

/// Pending Interest Table keyed by exact interest name.
#[derive(Debug, Clone, Default)]
pub struct Pit {
    entries: BTreeMap<Name, PitEntry>,
    expiry: BTreeSet<(SimTime, Name)>,
}

impl Pit {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, name: &Name) -> Option<&PitEntry> {
        self.entries.get(name)
    }

    pub fn live(&self, name: &Name, now: SimTime) -> Option<&PitEntry> {
        self.entries.get(name).filter(|e| e.is_live(now))
    }

    pub fn entries(&self) -> impl Iterator<Item = &PitEntry> {
        self.entries.values()
    }

    /// Creates a fresh entry, replacing any dead one under the same name.
    pub fn insert(&mut self, name: Name, face: FaceId, now: SimTime, lifetime: Duration) {
        // Lifetimes are validated positive; clamp so expires_at > created_at even at 0.
        let expires_at = (now + lifetime).max(SimTime::from_nanos(now.as_nanos() + 1));
        if let Some(old) = self.entries.remove(&name) {
            self.expiry.remove(&(old.expires_at, name.clone()));
        }
        self.expiry.insert((expires_at, name.clone()));
        self.entries.insert(
            name.clone(),
            PitEntry {
                name,
                arrival_faces: BTreeSet::from([face]),
                created_at: now,
                expires_at,
            },
        );
    }

    /// Adds a face to an existing entry. Returns false if no entry exists.
    pub fn add_face(&mut self, name: &Name, face: FaceId) -> bool {
        match self.entries.get_mut(name) {
            Some(e) => {
                e.arrival_faces.insert(face);
                true
            }
            None => false,
        }
    }

    /// Removes and returns every live entry whose name is a prefix of `data_name`,
    /// shortest name first.
    pub fn take_matching(&mut self, data_name: &Name, now: SimTime) -> Vec<PitEntry> {
        let mut out = Vec::new();
        for prefix in data_name.prefixes() {
            let live = self.entries.get(&prefix).is_some_and(|e| e.is_live(now));
            if live {
                let e = self.entries.remove(&prefix).expect("present");
                self.expiry.remove(&(e.expires_at, prefix));
                out.push(e);
            }
        }
        out
    }

    /// Drops every entry with `expires_at <= now`; returns how many.
    pub fn expire(&mut self, now: SimTime) -> usize {
        let mut n = 0;
        while let Some((at, _)) = self.expiry.first() {
            if *at > now {
                break;
            }
            let (_, name) = self.expiry.pop_first().expect("non-empty");
            self.entries.remove(&name);
            n += 1;
        }
        n
    }

    pub fn clear(&mut self) {
        self.entries.clear();
        self.expiry.clear();
    }
}
