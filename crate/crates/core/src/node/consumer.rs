//! Consumer application face: issues interests, matches returning data and
//! records round-trip times on the host's local clock.

use std::collections::BTreeMap;
use std::time::Duration;

use serde::Serialize;

use crate::ndn::{DataPacket, Interest, Name, DEFAULT_INTEREST_BYTES};
use crate::netsim::ClockModel;
use crate::time::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct RequestId(pub u64);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RequestSpec {
    /// Caller bookkeeping, echoed into every record.
    pub tag: u64,
    pub name: Name,
    pub scope: Option<u8>,
    /// Re-issues after a timeout.
    pub retries: u32,
    /// Further requests for the same name, each `repeat_gap` after the
    /// previous one is satisfied.
    pub repeats: u32,
    pub repeat_gap: Duration,
    pub lifetime: Duration,
}

impl RequestSpec {
    pub fn once(tag: u64, name: Name, lifetime: Duration) -> Self {
        Self {
            tag,
            name,
            scope: None,
            retries: 0,
            repeats: 0,
            repeat_gap: Duration::ZERO,
            lifetime,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RequestRecord {
    pub request: RequestId,
    pub tag: u64,
    pub name: Name,
    pub repeat: u32,
    pub attempts: u32,
    /// Local-clock issue time of the final attempt.
    pub issued_at: SimTime,
    pub satisfied_at: Option<SimTime>,
    pub rtt: Option<Duration>,
    pub data_name: Option<Name>,
    pub timed_out: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct TrafficCounters {
    pub interests_sent: u64,
    pub data_received: u64,
    pub bytes_sent: u64,
    pub bytes_received: u64,
    pub unsolicited: u64,
}

impl TrafficCounters {
    pub fn bytes_total(&self) -> u64 {
        self.bytes_sent + self.bytes_received
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeoutAction {
    /// Stale timer: the attempt it guarded already finished.
    Ignore,
    Retry,
    GaveUp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
struct Pending {
    #[serde(skip)]
    spec: RequestSpec,
    name: Name,
    repeat: u32,
    attempts: u32,
    issued_local: SimTime,
    seq: u64,
    in_flight: bool,
}

#[derive(Debug, Clone)]
pub struct Consumer {
    clock: ClockModel,
    interest_bytes: u32,
    pending: BTreeMap<RequestId, Pending>,
    records: Vec<RequestRecord>,
    counters: TrafficCounters,
    next_seq: u64,
}

impl Consumer {
    pub fn new(clock: ClockModel) -> Self {
        Self {
            clock,
            interest_bytes: DEFAULT_INTEREST_BYTES,
            pending: BTreeMap::new(),
            records: Vec::new(),
            counters: TrafficCounters::default(),
            next_seq: 0,
        }
    }

    pub fn with_interest_bytes(mut self, bytes: u32) -> Self {
        self.interest_bytes = bytes.max(1);
        self
    }

    pub fn clock(&self) -> &ClockModel {
        &self.clock
    }

    pub fn records(&self) -> &[RequestRecord] {
        &self.records
    }

    pub fn counters(&self) -> TrafficCounters {
        self.counters
    }

    pub fn pending_len(&self) -> usize {
        self.pending.len()
    }

    pub fn submit(&mut self, id: RequestId, spec: RequestSpec) {
        self.pending.insert(
            id,
            Pending {
                name: spec.name.clone(),
                spec,
                repeat: 0,
                attempts: 0,
                issued_local: SimTime::ZERO,
                seq: 0,
                in_flight: false,
            },
        );
    }

    /// Puts the next attempt of `id` on the wire. Returns the interest, the
    /// timer sequence number guarding it, and the lifetime.
    pub fn issue(&mut self, id: RequestId, now: SimTime) -> Option<(Interest, u64, Duration)> {
        let local = self.clock.local(now);
        self.next_seq += 1;
        let seq = self.next_seq;
        let p = self.pending.get_mut(&id)?;
        p.attempts += 1;
        p.issued_local = local;
        p.seq = seq;
        p.in_flight = true;
        let interest = Interest::new(p.spec.name.clone(), seq)
            .with_scope(p.spec.scope)
            .ok()?
            .with_wire_size(self.interest_bytes)
            .ok()?;
        self.counters.interests_sent += 1;
        self.counters.bytes_sent += u64::from(interest.wire_size_bytes());
        Some((interest, seq, p.spec.lifetime))
    }

    /// Satisfies every in-flight request whose name is a prefix of the data
    /// name. Returns follow-up repeats to schedule as `(id, gap)`.
    pub fn on_data(&mut self, data: &DataPacket, now: SimTime) -> Vec<(RequestId, Duration)> {
        let local = self.clock.local(now);
        let matched: Vec<RequestId> = self
            .pending
            .iter()
            .filter(|(_, p)| p.in_flight && p.spec.name.is_prefix_of(data.name()))
            .map(|(id, _)| *id)
            .collect();
        if matched.is_empty() {
            self.counters.unsolicited += 1;
            return Vec::new();
        }
        self.counters.data_received += 1;
        self.counters.bytes_received += u64::from(data.wire_size_bytes());
        let mut follow_ups = Vec::new();
        for id in matched {
            let p = self.pending.get_mut(&id).expect("matched");
            self.records.push(RequestRecord {
                request: id,
                tag: p.spec.tag,
                name: p.spec.name.clone(),
                repeat: p.repeat,
                attempts: p.attempts,
                issued_at: p.issued_local,
                satisfied_at: Some(local),
                rtt: Some(local.saturating_since(p.issued_local)),
                data_name: Some(data.name().clone()),
                timed_out: false,
            });
            if p.repeat < p.spec.repeats {
                p.repeat += 1;
                p.attempts = 0;
                p.in_flight = false;
                follow_ups.push((id, p.spec.repeat_gap));
            } else {
                self.pending.remove(&id);
            }
        }
        follow_ups
    }

    pub fn on_timeout(&mut self, id: RequestId, seq: u64, _now: SimTime) -> TimeoutAction {
        let Some(p) = self.pending.get_mut(&id) else {
            return TimeoutAction::Ignore;
        };
        if !p.in_flight || p.seq != seq {
            return TimeoutAction::Ignore;
        }
        if p.attempts <= p.spec.retries {
            return TimeoutAction::Retry;
        }
        self.records.push(RequestRecord {
            request: id,
            tag: p.spec.tag,
            name: p.spec.name.clone(),
            repeat: p.repeat,
            attempts: p.attempts,
            issued_at: p.issued_local,
            satisfied_at: None,
            rtt: None,
            data_name: None,
            timed_out: true,
        });
        self.pending.remove(&id);
        TimeoutAction::GaveUp
    }

    /// Deletes every trace of past and outstanding requests, counters
    /// included.
    pub fn forget(&mut self) {
        self.pending.clear();
        self.records.clear();
        self.counters = TrafficCounters::default();
    }

    /// Outstanding requests as `(id, name, in_flight)`.
    pub fn outstanding(&self) -> impl Iterator<Item = (RequestId, &Name, bool)> {
        self.pending.iter().map(|(id, p)| (*id, &p.name, p.in_flight))
    }
}
