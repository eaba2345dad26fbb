//! Sender and receiver schedules for every technique and the matching
//! decoders. Schedules are expressed on each party's own clock.

use std::collections::BTreeMap;
use std::time::Duration;

use serde::Serialize;

use super::codebook::Codebook;
use super::{Message, ProtocolParams, Symbol, Technique};
use crate::ndn::Name;
use crate::node::{RequestRecord, RequestSpec};
use crate::time::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Party {
    Sender,
    Receiver(u32),
}

/// One interest a party will issue at local time `at`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlannedRequest {
    pub party: Party,
    pub at: SimTime,
    pub spec: RequestSpec,
}

/// Packs a codebook coordinate into a request tag.
pub fn tag(slot: usize, column: u32) -> u64 {
    ((slot as u64) << 16) | u64::from(column)
}

pub fn untag(tag: u64) -> (usize, u32) {
    ((tag >> 16) as usize, (tag & 0xffff) as u32)
}

/// What a receiver observed for one interest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RttSample {
    pub slot: usize,
    pub column: u32,
    pub name: Name,
    pub issued_at: SimTime,
    pub satisfied_at: Option<SimTime>,
    pub rtt: Option<Duration>,
    pub timed_out: bool,
    pub data_name: Option<Name>,
    pub attempts: u32,
}

impl RttSample {
    pub fn from_record(r: &RequestRecord) -> Self {
        let (slot, column) = untag(r.tag);
        Self {
            slot,
            column,
            name: r.name.clone(),
            issued_at: r.issued_at,
            satisfied_at: r.satisfied_at,
            rtt: r.rtt,
            timed_out: r.timed_out,
            data_name: r.data_name.clone(),
            attempts: r.attempts,
        }
    }
}

fn request(party: Party, at: SimTime, name: &Name, slot: usize, column: u32, lifetime: Duration) -> PlannedRequest {
    let spec = RequestSpec::once(tag(slot, column), name.clone(), lifetime);
    PlannedRequest { party, at, spec }
}

fn sender(name: &Name, slot: usize, column: u32, at: SimTime, p: &ProtocolParams, lifetime: Duration) -> PlannedRequest {
    let mut r = request(Party::Sender, at, name, slot, column, lifetime);
    r.spec.retries = p.sender_retries();
    r
}

fn reader(
    k: u32,
    name: &Name,
    slot: usize,
    column: u32,
    at: SimTime,
    p: &ProtocolParams,
    lifetime: Duration,
) -> PlannedRequest {
    let mut r = request(Party::Receiver(k), at, name, slot, column, lifetime);
    r.spec.retries = p.receiver_retries();
    r.spec.scope = p.scope2.then_some(2);
    r
}

/// Bit 1: request `name` at `at`. Bit 0: stay silent.
pub fn sbtc_send(bit: bool, name: &Name, slot: usize, at: SimTime, p: &ProtocolParams, lifetime: Duration) -> Option<PlannedRequest> {
    bit.then(|| sender(name, slot, 0, at, p, lifetime))
}

pub fn sbtc_recv(k: u32, name: &Name, slot: usize, at: SimTime, p: &ProtocolParams, lifetime: Duration) -> PlannedRequest {
    reader(k, name, slot, 0, at, p, lifetime)
}

/// Same wire behaviour as the cache technique; only the receiver timing differs.
pub fn sbtp_send(bit: bool, name: &Name, slot: usize, at: SimTime, p: &ProtocolParams, lifetime: Duration) -> Option<PlannedRequest> {
    sbtc_send(bit, name, slot, at, p, lifetime)
}

pub fn sbtp_recv(k: u32, name: &Name, slot: usize, at: SimTime, p: &ProtocolParams, lifetime: Duration) -> PlannedRequest {
    sbtc_recv(k, name, slot, at, p, lifetime)
}

pub fn tdp_send(bit: bool, pair: [&Name; 2], slot: usize, at: SimTime, p: &ProtocolParams, lifetime: Duration) -> PlannedRequest {
    let c = u32::from(bit);
    sender(pair[c as usize], slot, c, at, p, lifetime)
}

/// Both names, `t_recv` apart, C0 first.
pub fn tdp_recv(k: u32, pair: [&Name; 2], slot: usize, at: SimTime, p: &ProtocolParams, lifetime: Duration) -> [PlannedRequest; 2] {
    [
        reader(k, pair[0], slot, 0, at, p, lifetime),
        reader(k, pair[1], slot, 1, at + p.t_recv, p, lifetime),
    ]
}

pub fn matrix_send(word: u32, row: &[Name], slot: usize, at: SimTime, p: &ProtocolParams, lifetime: Duration) -> PlannedRequest {
    sender(&row[word as usize], slot, word, at, p, lifetime)
}

/// Probes every column in order, `t_recv` apart.
pub fn matrix_recv(k: u32, row: &[Name], slot: usize, at: SimTime, p: &ProtocolParams, lifetime: Duration) -> Vec<PlannedRequest> {
    row.iter()
        .enumerate()
        .map(|(j, name)| reader(k, name, slot, j as u32, at + p.t_recv * j as u32, p, lifetime))
        .collect()
}

pub fn cpc_send(word: u32, row: &[Name], slot: usize, at: SimTime, p: &ProtocolParams, lifetime: Duration) -> PlannedRequest {
    matrix_send(word, row, slot, at, p, lifetime)
}

/// One interest for the row prefix.
pub fn cpc_recv(k: u32, prefix: &Name, slot: usize, at: SimTime, p: &ProtocolParams, lifetime: Duration) -> PlannedRequest {
    reader(k, prefix, slot, 0, at, p, lifetime)
}

fn send_at(p: &ProtocolParams, slot: usize) -> SimTime {
    SimTime::ZERO + p.t0 + p.t_send * slot as u32
}

/// Local time of receiver `k`'s first read (except for the PIT technique,
/// whose reads interleave with the writes).
pub fn read_start(p: &ProtocolParams, cb: &Codebook, k: u32) -> SimTime {
    send_at(p, cb.rows().saturating_sub(1)) + p.read_gap + p.reader_stagger * k
}

/// Every interest the sender issues for `message`.
pub fn send_plan(message: &Message, cb: &Codebook, p: &ProtocolParams, lifetime: Duration) -> Vec<PlannedRequest> {
    let m = p.bits_per_word();
    let mut out = Vec::new();
    match p.technique {
        Technique::Sbtc | Technique::Sbtp => {
            for (i, &b) in message.bits().iter().enumerate() {
                out.extend(sbtc_send(b, cb.name(i, 0), i, send_at(p, i), p, lifetime));
            }
        }
        Technique::Tdp => {
            for (i, &b) in message.bits().iter().enumerate() {
                let pair = [cb.name(i, 0), cb.name(i, 1)];
                out.push(tdp_send(b, pair, i, send_at(p, i), p, lifetime));
            }
        }
        Technique::Matrix | Technique::Cpc => {
            for (i, w) in message.words(m).into_iter().enumerate() {
                out.push(matrix_send(w, cb.row(i), i, send_at(p, i), p, lifetime));
            }
        }
    }
    out
}

/// Every interest receiver `k` issues.
pub fn receive_plan(cb: &Codebook, p: &ProtocolParams, lifetime: Duration, k: u32) -> Vec<PlannedRequest> {
    let r0 = read_start(p, cb, k);
    let mut out = Vec::new();
    for i in 0..cb.rows() {
        match p.technique {
            Technique::Sbtc => out.push(sbtc_recv(k, cb.name(i, 0), i, r0 + p.t_recv * i as u32, p, lifetime)),
            Technique::Sbtp => {
                let at = send_at(p, i) + p.sbtp_spacing + p.reader_stagger * k;
                out.push(sbtp_recv(k, cb.name(i, 0), i, at, p, lifetime));
            }
            Technique::Tdp => {
                let at = r0 + p.t_recv * (2 * i) as u32;
                out.extend(tdp_recv(k, [cb.name(i, 0), cb.name(i, 1)], i, at, p, lifetime));
            }
            Technique::Matrix => {
                let at = r0 + p.t_recv * (i * cb.columns()) as u32;
                out.extend(matrix_recv(k, cb.row(i), i, at, p, lifetime));
            }
            Technique::Cpc => {
                let prefix = cb.prefix(i).expect("common-prefix codebook");
                out.push(cpc_recv(k, prefix, i, r0 + p.t_recv * i as u32, p, lifetime));
            }
        }
    }
    out
}

/// 1 iff the RTT beats the threshold. Timeouts are erasures, except under
/// scope 2 where a miss can only show up as a timeout.
pub fn decode_threshold(s: &RttSample, threshold: Duration, scope2: bool) -> Symbol {
    match s.rtt {
        Some(rtt) => Symbol::from_bit(rtt < threshold),
        None if scope2 => Symbol::Zero,
        None => Symbol::Erasure,
    }
}

/// 0 iff C0 came back strictly faster; ties decode 1. With one timeout the
/// survivor is judged against the threshold.
pub fn decode_tdp(s0: &RttSample, s1: &RttSample, threshold: Duration) -> Symbol {
    match (s0.rtt, s1.rtt) {
        (Some(a), Some(b)) => Symbol::from_bit(a >= b),
        (Some(a), None) => Symbol::from_bit(a >= threshold),
        (None, Some(b)) => Symbol::from_bit(b < threshold),
        (None, None) => Symbol::Erasure,
    }
}

/// Column with the smallest RTT; ties go to the higher column. `None` when
/// every probe timed out.
pub fn decode_matrix(samples: &[&RttSample]) -> Option<u32> {
    samples
        .iter()
        .filter_map(|s| s.rtt.map(|r| (r, s.column)))
        .min_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)))
        .map(|(_, c)| c)
}

/// Column of whichever name came back for the row prefix.
pub fn decode_cpc(s: &RttSample, cb: &Codebook, row: usize) -> Option<u32> {
    cb.column_of(row, s.data_name.as_ref()?)
}

/// Decodes a full message from one receiver's samples. Slots without any
/// sample are erasures.
pub fn decode_message(p: &ProtocolParams, cb: &Codebook, samples: &[RttSample], threshold: Duration) -> Vec<Symbol> {
    let n = cb.message_len();
    let m = p.bits_per_word() as usize;
    let mut by_slot: BTreeMap<usize, Vec<&RttSample>> = BTreeMap::new();
    for s in samples {
        by_slot.entry(s.slot).or_default().push(s);
    }
    for v in by_slot.values_mut() {
        v.sort_by_key(|s| s.column);
    }
    let mut out = vec![Symbol::Erasure; n];
    for (slot, v) in by_slot {
        match p.technique {
            Technique::Sbtc | Technique::Sbtp => {
                if slot < n {
                    out[slot] = decode_threshold(v[0], threshold, p.scope2);
                }
            }
            Technique::Tdp => {
                let s0 = v.iter().find(|s| s.column == 0);
                let s1 = v.iter().find(|s| s.column == 1);
                if let (Some(a), Some(b)) = (s0, s1) {
                    if slot < n {
                        out[slot] = decode_tdp(a, b, threshold);
                    }
                }
            }
            Technique::Matrix | Technique::Cpc => {
                let word = if p.technique == Technique::Matrix {
                    decode_matrix(&v)
                } else {
                    decode_cpc(v[0], cb, slot)
                };
                for b in 0..m {
                    let bit = slot * m + b;
                    if bit < n {
                        out[bit] = match word {
                            Some(w) => Symbol::from_bit((w >> (m - 1 - b)) & 1 == 1),
                            None => Symbol::Erasure,
                        };
                    }
                }
            }
        }
    }
    out
}
