//! One simulated message exchange: build the network, run both parties'
//! schedules, then score the receiver's decode against what the sender
//! actually managed to write.

use std::collections::BTreeMap;
use std::time::Duration;

use serde::Serialize;

use super::{ExperimentSpec, HarnessError};
use crate::covert::{
    decode_message, derive_codebook, receive_plan, send_plan, Codebook, Message, Party,
    PlannedRequest, ProtocolParams, RttSample, Symbol, Technique,
};
use crate::ndn::Name;
use crate::netsim::{build_topology, NodeId, PacketKind, RngStreams, Simulation, TopologySpec, TrafficClass};
use crate::node::{RequestId, TrafficCounters};
use crate::time::SimTime;

/// Everything needed to simulate one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialPoint {
    pub topology: TopologySpec,
    pub protocol: ProtocolParams,
    pub namespace: Name,
    pub message: Message,
    pub seed: u64,
    /// Slots whose first sender interest is dropped on its first link.
    pub drop_slots: Vec<usize>,
}

impl TrialPoint {
    pub fn new(spec: &ExperimentSpec, message: Message, seed: u64) -> Result<Self, HarnessError> {
        Ok(Self {
            topology: spec.topology.clone(),
            protocol: spec.protocol.clone(),
            namespace: spec.namespace_name()?,
            message,
            seed,
            drop_slots: Vec::new(),
        })
    }

    /// Uses a message drawn from the seed's own "message" stream.
    pub fn random(spec: &ExperimentSpec, seed: u64) -> Result<Self, HarnessError> {
        let mut rng = RngStreams::new(seed).stream("message");
        let message = Message::random(spec.n, &mut rng).map_err(|e| HarnessError::Config(e.to_string()))?;
        Self::new(spec, message, seed)
    }
}

/// Raw outcome of a simulated trial, before any threshold is applied.
#[derive(Debug, Clone)]
pub struct TrialTrace {
    pub protocol: ProtocolParams,
    pub codebook: Codebook,
    pub message: Message,
    pub seed: u64,
    /// Per receiver, in issue order.
    pub samples: Vec<Vec<RttSample>>,
    /// Name the sender requested for each slot it was active in.
    pub sent_names: BTreeMap<usize, Name>,
    /// Per slot: did the sender's request leave state at the shared router?
    pub written: Vec<bool>,
    pub sender: TrafficCounters,
    pub receivers: Vec<TrafficCounters>,
    /// True times.
    pub started: SimTime,
    pub send_done: SimTime,
    pub finished: SimTime,
    pub last_read_issue: SimTime,
    pub receiver_probes: usize,
}

impl TrialTrace {
    pub fn rows(&self) -> usize {
        self.codebook.rows()
    }

    /// The symbols that were meant to arrive.
    pub fn truth(&self) -> Vec<Symbol> {
        self.message.bits().iter().map(|&b| Symbol::from_bit(b)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialReport {
    pub technique: Technique,
    pub seed: u64,
    pub n: usize,
    pub threshold_ms: f64,
    pub correct: usize,
    /// Wrong because the sender never wrote the bit.
    pub write_errors: usize,
    /// Wrong although the bit was written.
    pub read_errors: usize,
    pub erasures: usize,
    /// Errors after resolving erasures to the majority symbol.
    pub binary_errors: usize,
    pub sender_bytes: u64,
    pub receiver_bytes: u64,
    pub sender_interests: u64,
    pub receiver_interests: u64,
    /// Nominal rates, bits per second.
    pub sender_bit_rate: f64,
    pub receiver_bit_rate: f64,
    /// Bits over the whole exchange, first send to last reply.
    pub effective_bit_rate: f64,
    pub duration_ms: f64,
    #[serde(skip)]
    pub decoded: Vec<Symbol>,
}

impl super::CsvRecord for TrialReport {
    const HEADER: &'static [&'static str] = &[
        "technique",
        "seed",
        "n",
        "threshold_ms",
        "correct",
        "write_errors",
        "read_errors",
        "erasures",
        "binary_errors",
        "sender_bytes",
        "receiver_bytes",
        "sender_interests",
        "receiver_interests",
        "sender_bit_rate",
        "receiver_bit_rate",
        "effective_bit_rate",
        "duration_ms",
    ];
}

impl TrialReport {
    pub fn errors(&self) -> usize {
        self.write_errors + self.read_errors + self.erasures
    }

    pub fn error_rate(&self) -> f64 {
        self.errors() as f64 / self.n as f64
    }

    pub fn binary_error_rate(&self) -> f64 {
        self.binary_errors as f64 / self.n as f64
    }

    pub fn decoded_string(&self) -> String {
        self.decoded.iter().map(|s| s.as_char()).collect()
    }
}

fn planned_true(sim: &Simulation, node: NodeId, local: SimTime) -> SimTime {
    sim.consumer(node).clock().to_true(local)
}

fn node_of(sim: &Simulation, party: Party) -> NodeId {
    match party {
        Party::Sender => sim.topology().roles.snd,
        Party::Receiver(k) => sim.topology().roles.rcv[k as usize],
    }
}

/// Builds the codebook a trial uses.
pub fn trial_codebook(point: &TrialPoint) -> Result<Codebook, HarnessError> {
    let seed = RngStreams::new(point.seed).derive_seed("codebook");
    derive_codebook(
        seed,
        point.message.len(),
        point.protocol.bits_per_word(),
        &point.namespace,
        point.protocol.codebook_mode(),
    )
    .map_err(|e| HarnessError::Config(e.to_string()))
}

fn check_point(point: &TrialPoint) -> Result<(), HarnessError> {
    point.protocol.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
    point.topology.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
    if point.protocol.scope2 && !point.topology.receiver_hops.is_empty() {
        return Err(HarnessError::Config(
            "scope2 requires the shared router to be the receiver's first hop".into(),
        ));
    }
    Ok(())
}

/// How the receiver schedule is laid out in time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct ReadSchedule {
    /// Added to every planned read.
    pub delay: Duration,
    pub passes: usize,
    /// Offset between the starts of consecutive passes.
    pub spacing: Duration,
    /// Refuse plans whose reads land after content expiry.
    pub enforce_expiry: bool,
}

impl Default for ReadSchedule {
    fn default() -> Self {
        Self {
            delay: Duration::ZERO,
            passes: 1,
            spacing: Duration::ZERO,
            enforce_expiry: true,
        }
    }
}

pub(crate) struct Staged {
    pub sim: Simulation,
    pub codebook: Codebook,
    pub sends: Vec<PlannedRequest>,
    /// Per receiver, every pass concatenated.
    pub reads: Vec<Vec<PlannedRequest>>,
    /// Per receiver, the request ids of each pass.
    pub read_ids: Vec<Vec<std::ops::Range<u64>>>,
}

/// A trial network with the codebook published and every planned request
/// queued.
pub(crate) fn stage(point: &TrialPoint) -> Result<Staged, HarnessError> {
    stage_with(point, ReadSchedule::default())
}

pub(crate) fn stage_with(point: &TrialPoint, sched: ReadSchedule) -> Result<Staged, HarnessError> {
    check_point(point)?;
    let cb = trial_codebook(point)?;
    let mut sim = build_topology(&point.topology, point.seed).map_err(|e| HarnessError::Config(e.to_string()))?;
    sim.publish(cb.names());
    let lifetime = point.topology.interest_lifetime;
    let sends = send_plan(&point.message, &cb, &point.protocol, lifetime);
    let reads: Vec<Vec<PlannedRequest>> = (0..point.topology.receivers)
        .map(|k| {
            let plan = receive_plan(&cb, &point.protocol, lifetime, k);
            (0..sched.passes)
                .flat_map(|pass| {
                    let shift = sched.delay + sched.spacing * pass as u32;
                    plan.iter().cloned().map(move |mut p| {
                        p.at += shift;
                        p
                    })
                })
                .collect()
        })
        .collect();

    // Reads must start before the first write could have aged out.
    let snd = sim.topology().roles.snd;
    let expiry = planned_true(&sim, snd, SimTime::ZERO + point.protocol.t0) + point.topology.freshness;
    if let Some(last) = reads.first().filter(|_| sched.enforce_expiry).and_then(|r| r.iter().map(|p| p.at).max()) {
        let last_true = planned_true(&sim, sim.topology().roles.rcv[0], last);
        if last_true >= expiry {
            return Err(HarnessError::Constraint(format!(
                "last read at {:.3} ms is not before content expiry at {:.3} ms",
                last_true.as_secs_f64() * 1e3,
                expiry.as_secs_f64() * 1e3
            )));
        }
    }

    for p in &sends {
        if point.drop_slots.contains(&crate::covert::untag(p.spec.tag).0) {
            sim.force_loss(snd, p.spec.name.clone());
        }
    }

    let mut next_id = 0u64;
    let mut submit = |sim: &mut Simulation, p: &PlannedRequest| {
        let node = node_of(sim, p.party);
        let at = planned_true(sim, node, p.at);
        sim.submit(node, RequestId(next_id), p.spec.clone(), at)
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        next_id += 1;
        Ok::<u64, HarnessError>(next_id - 1)
    };
    for p in &sends {
        submit(&mut sim, p)?;
    }
    let mut read_ids = Vec::with_capacity(reads.len());
    for plan in &reads {
        let per_pass = plan.len() / sched.passes.max(1);
        let mut ranges = Vec::with_capacity(sched.passes);
        for chunk in plan.chunks(per_pass.max(1)) {
            let mut first = None;
            for p in chunk {
                let id = submit(&mut sim, p)?;
                first.get_or_insert(id);
            }
            let start = first.expect("chunks are non-empty");
            ranges.push(start..start + chunk.len() as u64);
        }
        read_ids.push(ranges);
    }
    Ok(Staged {
        sim,
        codebook: cb,
        sends,
        reads,
        read_ids,
    })
}

/// Latest true issue time across `plans`.
pub(crate) fn last_planned(sim: &Simulation, plans: &[&[PlannedRequest]]) -> SimTime {
    plans
        .iter()
        .flat_map(|plan| plan.iter())
        .map(|p| planned_true(sim, node_of(sim, p.party), p.at))
        .max()
        .unwrap_or(SimTime::ZERO)
}

/// Slots the sender wrote, judged from the shared router's trace.
fn ground_truth(sim: &Simulation, p: &ProtocolParams, message: &Message, sent: &BTreeMap<Name, usize>, rows: usize) -> Vec<bool> {
    let roles = &sim.topology().roles;
    let face = sim.topology().rt_face_toward(roles.snd).expect("sender reaches the shared router");
    let mut written = vec![false; rows];
    for r in sim.trace() {
        if r.node != roles.rt || r.class != TrafficClass::Covert {
            continue;
        }
        let Some(&slot) = sent.get(&r.name) else { continue };
        let hit = match (r.packet, r.outcome) {
            (PacketKind::Interest, "CACHE_HIT") => r.faces.first() == Some(&face),
            (PacketKind::Interest, "PIT_MISS_FORWARDED" | "PIT_HIT_COLLAPSED") => {
                p.technique == Technique::Sbtp && r.faces.first() == Some(&face)
            }
            (PacketKind::Data, "DATA_CACHED") => r.faces.contains(&face),
            _ => false,
        };
        if hit {
            written[slot] = true;
        }
    }
    // A silent slot needs no write.
    if matches!(p.technique, Technique::Sbtc | Technique::Sbtp) {
        for (slot, &b) in message.bits().iter().enumerate() {
            if !b {
                written[slot] = true;
            }
        }
    }
    written
}

/// Runs the exchange described by `point` to completion.
pub fn simulate_trial(point: &TrialPoint) -> Result<TrialTrace, HarnessError> {
    simulate_trial_traced(point, None)
}

/// As [`simulate_trial`], also writing the event trace as NDJSON to `trace`.
pub fn simulate_trial_traced(
    point: &TrialPoint,
    trace: Option<&mut dyn std::io::Write>,
) -> Result<TrialTrace, HarnessError> {
    let Staged {
        mut sim,
        codebook: cb,
        sends,
        reads,
        ..
    } = stage(point)?;
    let roles = sim.topology().roles.clone();
    let mut plans: Vec<&[PlannedRequest]> = vec![&sends];
    plans.extend(reads.iter().map(Vec::as_slice));
    let last = last_planned(&sim, &plans);
    sim.start_background(last + point.topology.interest_lifetime);
    sim.run();
    if let Some(w) = trace {
        sim.write_trace_ndjson(w)?;
    }

    let sent_names: BTreeMap<usize, Name> = sends
        .iter()
        .map(|p| (crate::covert::untag(p.spec.tag).0, p.spec.name.clone()))
        .collect();
    let by_name: BTreeMap<Name, usize> = sent_names.iter().map(|(s, n)| (n.clone(), *s)).collect();
    let written = ground_truth(&sim, &point.protocol, &point.message, &by_name, cb.rows());

    let to_true = |node: NodeId, t: SimTime| sim.consumer(node).clock().to_true(t);
    let samples: Vec<Vec<RttSample>> = roles
        .rcv
        .iter()
        .map(|&r| {
            let mut v: Vec<RttSample> = sim.consumer(r).records().iter().map(RttSample::from_record).collect();
            v.sort_by_key(|s| (s.issued_at, s.slot, s.column));
            v
        })
        .collect();
    let end_of = |node: NodeId| {
        sim.consumer(node)
            .records()
            .iter()
            .map(|r| to_true(node, r.satisfied_at.unwrap_or(r.issued_at)))
            .max()
    };
    let started = to_true(roles.snd, SimTime::ZERO + point.protocol.t0);
    let send_done = end_of(roles.snd).unwrap_or(started);
    let finished = roles.rcv.iter().filter_map(|&r| end_of(r)).max().unwrap_or(send_done).max(send_done);
    let last_read_issue = reads
        .first()
        .and_then(|r| r.iter().map(|p| p.at).max())
        .map(|t| to_true(roles.rcv[0], t))
        .unwrap_or(started);

    Ok(TrialTrace {
        protocol: point.protocol.clone(),
        codebook: cb,
        message: point.message.clone(),
        seed: point.seed,
        samples,
        sent_names,
        written,
        sender: sim.consumer(roles.snd).counters(),
        receivers: roles.rcv.iter().map(|&r| sim.consumer(r).counters()).collect(),
        started,
        send_done,
        finished,
        last_read_issue,
        receiver_probes: reads.first().map_or(0, Vec::len),
    })
}

/// Erasures take whichever symbol was decoded more often (zero on a tie).
pub fn resolve_erasures(decoded: &[Symbol]) -> Vec<bool> {
    let ones = decoded.iter().filter(|s| **s == Symbol::One).count();
    let zeros = decoded.iter().filter(|s| **s == Symbol::Zero).count();
    let fill = ones > zeros;
    decoded.iter().map(|s| s.bit().unwrap_or(fill)).collect()
}

/// Scores receiver `k`'s view of `trace` at decision threshold `threshold`.
pub fn decode_trial(trace: &TrialTrace, threshold: Duration, k: usize) -> TrialReport {
    let p = &trace.protocol;
    let n = trace.message.len();
    let m = p.bits_per_word() as usize;
    let decoded = decode_message(p, &trace.codebook, &trace.samples[k], threshold);
    let sent = trace.message.bits();
    let (mut correct, mut write_errors, mut read_errors, mut erasures) = (0, 0, 0, 0);
    for (i, s) in decoded.iter().enumerate() {
        match s.bit() {
            None => erasures += 1,
            Some(b) if b == sent[i] => correct += 1,
            Some(_) if !trace.written[i / m] => write_errors += 1,
            Some(_) => read_errors += 1,
        }
    }
    let binary_errors = resolve_erasures(&decoded)
        .iter()
        .zip(sent)
        .filter(|(a, b)| a != b)
        .count();
    let rows = trace.rows() as f64;
    let recv_spacing = if p.technique == Technique::Sbtp { p.t_send } else { p.t_recv };
    let duration = trace.finished.saturating_since(trace.started).as_secs_f64();
    let rate = |secs: f64| if secs > 0.0 { n as f64 / secs } else { 0.0 };
    TrialReport {
        technique: p.technique,
        seed: trace.seed,
        n,
        threshold_ms: threshold.as_secs_f64() * 1e3,
        correct,
        write_errors,
        read_errors,
        erasures,
        binary_errors,
        sender_bytes: trace.sender.bytes_total(),
        receiver_bytes: trace.receivers[k].bytes_total(),
        sender_interests: trace.sender.interests_sent,
        receiver_interests: trace.receivers[k].interests_sent,
        sender_bit_rate: rate(rows * p.t_send.as_secs_f64()),
        receiver_bit_rate: rate(trace.receiver_probes as f64 * recv_spacing.as_secs_f64()),
        effective_bit_rate: rate(duration),
        duration_ms: duration * 1e3,
        decoded,
    }
}

/// Simulates and decodes at the point's own threshold.
pub fn run_trial(point: &TrialPoint) -> Result<TrialReport, HarnessError> {
    let trace = simulate_trial(point)?;
    Ok(decode_trial(&trace, point.protocol.threshold(), 0))
}

/// CPC with `k` receivers reading the same written rows; one decode per
/// receiver.
pub fn multi_recipient_cpc(point: &TrialPoint, k: u32) -> Result<Vec<TrialReport>, HarnessError> {
    let mut point = point.clone();
    point.protocol.technique = Technique::Cpc;
    point.topology.receivers = k;
    let trace = simulate_trial(&point)?;
    Ok((0..k as usize)
        .map(|r| decode_trial(&trace, point.protocol.threshold(), r))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct WriteProbe {
    /// One bits that a slow cache read saw as zero.
    pub probed: usize,
    /// One bits the router trace shows were never written.
    pub unwritten: usize,
    pub ones: usize,
}

/// Sender-side write check: the message is written as SBTC and read back
/// with `slow` spacing, slow enough that read errors all but vanish, so the
/// misread ones estimate write errors.
pub fn probe_write_errors(point: &TrialPoint, slow: Duration) -> Result<WriteProbe, HarnessError> {
    let mut point = point.clone();
    point.protocol.technique = Technique::Sbtc;
    point.protocol.t_recv = slow;
    let trace = simulate_trial(&point)?;
    let report = decode_trial(&trace, point.protocol.threshold(), 0);
    let bits = trace.message.bits();
    let probed = report
        .decoded
        .iter()
        .zip(bits)
        .filter(|(d, &b)| b && **d == Symbol::Zero)
        .count();
    let unwritten = bits
        .iter()
        .enumerate()
        .filter(|(i, &b)| b && !trace.written[*i])
        .count();
    Ok(WriteProbe {
        probed,
        unwritten,
        ones: trace.message.ones(),
    })
}

/// Receiver decodes from repeated reads of one written message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reread {
    /// Receiver 0's decode for each pass.
    pub passes: Vec<Vec<Symbol>>,
    /// After routers drop expired state, the codebook namespace still appears
    /// somewhere in the network just before the first read.
    pub mentioned_before_reads: bool,
}

/// Writes `point.message`, then runs receiver 0's read schedule `passes`
/// times, the first shifted by `delay`. No expiry check is applied, so late
/// reads are allowed.
pub fn reread_trial(point: &TrialPoint, delay: Duration, passes: usize) -> Result<Reread, HarnessError> {
    let base = {
        let cb = trial_codebook(point)?;
        let plan = receive_plan(&cb, &point.protocol, point.topology.interest_lifetime, 0);
        let first = plan.iter().map(|p| p.at).min().unwrap_or(SimTime::ZERO);
        let last = plan.iter().map(|p| p.at).max().unwrap_or(SimTime::ZERO);
        let tries = point.protocol.receiver_retries() + 1;
        (last.saturating_since(first) + point.topology.interest_lifetime * tries + Duration::from_millis(1), first)
    };
    let mut point = point.clone();
    point.topology.receivers = 1;
    let sched = ReadSchedule {
        delay,
        passes: passes.max(1),
        spacing: base.0,
        enforce_expiry: false,
    };
    let Staged {
        mut sim,
        codebook,
        read_ids,
        ..
    } = stage_with(&point, sched)?;
    let rcv = sim.topology().roles.rcv[0];
    let first_read = planned_true(&sim, rcv, base.1 + delay);
    sim.run_until(first_read.saturating_sub(Duration::from_nanos(1)));
    sim.expire_routers();
    let mentioned_before_reads = sim.network_state().mentions(codebook.namespace());
    sim.run();
    let records = sim.consumer(rcv).records();
    let passes = read_ids[0]
        .iter()
        .map(|ids| {
            let samples: Vec<RttSample> = records
                .iter()
                .filter(|r| ids.contains(&r.request.0))
                .map(RttSample::from_record)
                .collect();
            decode_message(&point.protocol, &codebook, &samples, point.protocol.threshold())
        })
        .collect();
    Ok(Reread {
        passes,
        mentioned_before_reads,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netsim::Preset;

    fn ideal(technique: Technique, n: usize) -> ExperimentSpec {
        let mut s = ExperimentSpec::preset(Preset::Lan, technique);
        s.topology = s.topology.ideal();
        s.n = n;
        if matches!(technique, Technique::Matrix | Technique::Cpc) {
            s.protocol.m = 4;
        }
        s
    }

    #[test]
    fn every_technique_is_exact_on_an_ideal_network() {
        for t in Technique::ALL {
            let spec = ideal(t, 64);
            let point = TrialPoint::random(&spec, 11).unwrap();
            let r = run_trial(&point).unwrap();
            assert_eq!(r.correct, 64, "{t}: {}", r.decoded_string());
            assert_eq!(r.binary_errors, 0);
        }
    }

    #[test]
    fn lost_writes_are_write_errors() {
        let mut spec = ideal(Technique::Sbtc, 200);
        spec.topology.sender_link.loss_prob = 0.3;
        let point = TrialPoint::random(&spec, 5).unwrap();
        let r = run_trial(&point).unwrap();
        assert!(r.write_errors > 0);
        assert_eq!(r.read_errors, 0);
        assert_eq!(r.correct + r.write_errors, 200);
    }

    #[test]
    fn one_dropped_interest_is_one_write_error() {
        let spec = ideal(Technique::Sbtc, 32);
        let mut point = TrialPoint::new(&spec, "1".repeat(32).parse().unwrap(), 3).unwrap();
        point.drop_slots = vec![17];
        let r = run_trial(&point).unwrap();
        assert_eq!((r.write_errors, r.read_errors, r.erasures), (1, 0, 0));
        assert_eq!(r.decoded[17], Symbol::Zero);
    }

    #[test]
    fn bytes_follow_counters() {
        let spec = ideal(Technique::Tdp, 10);
        let point = TrialPoint::random(&spec, 2).unwrap();
        let r = run_trial(&point).unwrap();
        assert_eq!(r.sender_interests, 10);
        assert_eq!(r.receiver_interests, 20);
        assert_eq!(r.sender_bytes, 10 * (41 + 377));
        assert_eq!(r.receiver_bytes, 20 * (41 + 377));
    }

    #[test]
    fn late_reads_violate_the_constraint() {
        let mut spec = ideal(Technique::Sbtc, 100);
        spec.protocol.t_recv = Duration::from_millis(200);
        let point = TrialPoint::random(&spec, 1).unwrap();
        assert!(matches!(run_trial(&point), Err(HarnessError::Constraint(_))));
    }

    #[test]
    fn erasures_resolve_to_majority() {
        let d = [Symbol::One, Symbol::Erasure, Symbol::One, Symbol::Zero];
        assert_eq!(resolve_erasures(&d), vec![true, true, true, false]);
    }
}
