//! The simulated network: nodes, links and the event loop that connects
//! them.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, Write};
use std::time::Duration;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::engine::{Engine, EngineError, SimEvent};
use super::link::{transmit, LinkCounters};
use super::rng::RngStreams;
use super::topology::{NodeId, NodeKind, Topology, TopologyError, TopologySpec};
use crate::ndn::{DataPacket, Name};
use crate::node::{
    Catalog, CatalogEntry, Consumer, FaceId, Packet, RequestId, RequestSpec, Router, TimeoutAction,
};
use crate::time::SimTime;

/// Which random streams a packet's link draws come from. Keeping the two
/// apart means covert traffic never shifts background timing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TrafficClass {
    Covert,
    Background,
}

impl TrafficClass {
    pub fn as_str(self) -> &'static str {
        match self {
            TrafficClass::Covert => "covert",
            TrafficClass::Background => "background",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action {
    /// A consumer puts the next attempt of a request on the wire.
    Issue { node: NodeId, request: RequestId },
    /// A packet reaches `to` over the link from `from`.
    Deliver {
        to: NodeId,
        from: NodeId,
        packet: Packet,
        hops: u8,
    },
    /// A router finishes queueing a packet and acts on it.
    Process {
        node: NodeId,
        from: NodeId,
        packet: Packet,
        hops: u8,
    },
    Timeout {
        node: NodeId,
        request: RequestId,
        seq: u64,
    },
    Background,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PacketKind {
    Interest,
    Data,
}

impl PacketKind {
    fn of(p: &Packet) -> Self {
        match p {
            Packet::Interest(_) => PacketKind::Interest,
            Packet::Data(_) => PacketKind::Data,
        }
    }
}

/// One line of the event trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceRecord {
    pub time: SimTime,
    pub node: NodeId,
    pub packet: PacketKind,
    pub name: Name,
    pub outcome: &'static str,
    pub faces: Vec<FaceId>,
    pub class: TrafficClass,
}

#[derive(Debug, Clone)]
struct RouterNode {
    router: Router,
    processing: Duration,
    busy_until: SimTime,
}

#[derive(Debug, Clone)]
enum NodeState {
    Consumer(Box<Consumer>),
    Router(Box<RouterNode>),
    Producer(Box<Catalog>),
}

#[derive(Debug, Clone)]
struct Background {
    node: NodeId,
    names: Vec<Name>,
    rate_hz: f64,
    lifetime: Duration,
    rng: ChaCha8Rng,
    issued: u64,
    until: SimTime,
    armed: bool,
}

/// Request ids at or above this value belong to the background generator.
pub const BACKGROUND_REQUEST_BASE: u64 = 1 << 62;

pub struct Simulation {
    spec: TopologySpec,
    topology: Topology,
    engine: Engine<Action>,
    nodes: Vec<NodeState>,
    link_counters: BTreeMap<(NodeId, NodeId), LinkCounters>,
    link_rngs: BTreeMap<(NodeId, NodeId, TrafficClass), ChaCha8Rng>,
    streams: RngStreams,
    trace: Vec<TraceRecord>,
    tracing: bool,
    background_ns: Option<Name>,
    background: Option<Background>,
    background_streams: RngStreams,
    forced_losses: BTreeSet<(NodeId, Name)>,
}

/// Wires up `spec` and returns a simulation at time zero with an empty
/// event queue.
pub fn build_topology(spec: &TopologySpec, seed: u64) -> Result<Simulation, TopologyError> {
    Simulation::new(spec, seed)
}

impl Simulation {
    pub fn new(spec: &TopologySpec, seed: u64) -> Result<Self, TopologyError> {
        let topology = Topology::from_spec(spec)?;
        let streams = RngStreams::new(seed);
        let roles = topology.roles.clone();
        let mut nodes = Vec::with_capacity(topology.nodes.len());
        for info in &topology.nodes {
            let state = match info.kind {
                NodeKind::Consumer => {
                    let clock = if info.id == roles.snd {
                        spec.sender_clock
                    } else if roles.rcv.contains(&info.id) {
                        spec.receiver_clock
                    } else {
                        Default::default()
                    };
                    NodeState::Consumer(Box::new(
                        Consumer::new(clock).with_interest_bytes(spec.interest_bytes),
                    ))
                }
                NodeKind::Router => {
                    let mut router = Router::new(spec.router.clone())?;
                    if let Some(up) = topology.upstream.get(&info.id) {
                        router.fib_mut().set_default(up.face());
                    }
                    NodeState::Router(Box::new(RouterNode {
                        router,
                        processing: topology.processing.get(&info.id).copied().unwrap_or_default(),
                        busy_until: SimTime::ZERO,
                    }))
                }
                NodeKind::Producer => NodeState::Producer(Box::default()),
            };
            nodes.push(state);
        }
        let mut sim = Simulation {
            spec: spec.clone(),
            topology,
            engine: Engine::new(),
            nodes,
            link_counters: BTreeMap::new(),
            link_rngs: BTreeMap::new(),
            streams,
            trace: Vec::new(),
            tracing: true,
            background_ns: None,
            background: None,
            background_streams: spec
                .background
                .as_ref()
                .and_then(|b| b.seed)
                .map_or(streams, RngStreams::new),
            forced_losses: BTreeSet::new(),
        };
        if let (Some(bg), Some(node)) = (&spec.background, roles.bg) {
            let ns = bg.namespace_name()?;
            let mut entry = CatalogEntry::new(vec![0u8; 8], bg.freshness);
            entry.wire_size_bytes = spec.data_bytes;
            sim.catalog_mut().add_namespace(ns.clone(), entry);
            let names = (0..bg.names)
                .map(|i| ns.child(format!("item{i}")).expect("short component"))
                .collect();
            sim.background = Some(Background {
                node,
                names,
                rate_hz: bg.rate_hz,
                lifetime: spec.interest_lifetime,
                rng: sim.background_streams.stream("background"),
                issued: 0,
                until: SimTime::ZERO,
                armed: false,
            });
            sim.background_ns = Some(ns);
        }
        Ok(sim)
    }

    pub fn spec(&self) -> &TopologySpec {
        &self.spec
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn now(&self) -> SimTime {
        self.engine.now()
    }

    pub fn pending_events(&self) -> usize {
        self.engine.pending()
    }

    pub fn streams(&self) -> RngStreams {
        self.streams
    }

    pub fn set_tracing(&mut self, on: bool) {
        self.tracing = on;
    }

    pub fn trace(&self) -> &[TraceRecord] {
        &self.trace
    }

    pub fn link_counters(&self) -> &BTreeMap<(NodeId, NodeId), LinkCounters> {
        &self.link_counters
    }

    pub fn consumer(&self, node: NodeId) -> &Consumer {
        match &self.nodes[node.0 as usize] {
            NodeState::Consumer(c) => c,
            _ => panic!("node {node} is not a consumer"),
        }
    }

    pub fn consumer_mut(&mut self, node: NodeId) -> &mut Consumer {
        match &mut self.nodes[node.0 as usize] {
            NodeState::Consumer(c) => c,
            _ => panic!("node {node} is not a consumer"),
        }
    }

    pub fn router(&self, node: NodeId) -> &Router {
        match &self.nodes[node.0 as usize] {
            NodeState::Router(r) => &r.router,
            _ => panic!("node {node} is not a router"),
        }
    }

    pub fn router_mut(&mut self, node: NodeId) -> &mut Router {
        match &mut self.nodes[node.0 as usize] {
            NodeState::Router(r) => &mut r.router,
            _ => panic!("node {node} is not a router"),
        }
    }

    pub fn catalog_mut(&mut self) -> &mut Catalog {
        let pr = self.topology.roles.pr;
        match &mut self.nodes[pr.0 as usize] {
            NodeState::Producer(c) => c,
            _ => unreachable!("producer role"),
        }
    }

    /// Makes the producer serve `names` with the topology's freshness and
    /// data size.
    pub fn publish<'a>(&mut self, names: impl IntoIterator<Item = &'a Name>) {
        let mut entry = CatalogEntry::new(vec![0u8; 8], self.spec.freshness);
        entry.wire_size_bytes = self.spec.data_bytes;
        let catalog = self.catalog_mut();
        for n in names {
            catalog.insert(n.clone(), entry.clone());
        }
    }

    /// Queues `spec` on consumer `node`; the first attempt goes out at true
    /// time `at`.
    pub fn submit(
        &mut self,
        node: NodeId,
        id: RequestId,
        spec: RequestSpec,
        at: SimTime,
    ) -> Result<(), EngineError> {
        self.engine.schedule(at, Action::Issue { node, request: id })?;
        self.consumer_mut(node).submit(id, spec);
        Ok(())
    }

    /// Starts the background generator (if configured); it stops issuing at
    /// `until`.
    pub fn start_background(&mut self, until: SimTime) {
        let now = self.now();
        if let Some(bg) = &mut self.background {
            bg.until = until;
            if !bg.armed && now < until {
                bg.armed = true;
                self.engine
                    .schedule(now, Action::Background)
                    .expect("now is never in the past");
            }
        }
    }

    /// Runs every event at or before `limit`, then parks the clock at `limit`.
    pub fn run_until(&mut self, limit: SimTime) {
        while let Some(ev) = self.engine.pop_until(limit) {
            self.dispatch(ev);
        }
        if limit > self.now() {
            self.engine.advance_to(limit).expect("queue drained up to limit");
        }
    }

    /// Runs until the queue is empty.
    pub fn run(&mut self) {
        while let Some(ev) = self.engine.pop() {
            self.dispatch(ev);
        }
    }

    /// Runs `expire` on every router at the current time.
    pub fn expire_routers(&mut self) {
        let now = self.now();
        for n in &mut self.nodes {
            if let NodeState::Router(r) = n {
                r.router.expire(now);
            }
        }
    }

    fn class_of(&self, name: &Name) -> TrafficClass {
        match &self.background_ns {
            Some(ns) if ns.is_prefix_of(name) => TrafficClass::Background,
            _ => TrafficClass::Covert,
        }
    }

    fn record(&mut self, node: NodeId, packet: PacketKind, name: &Name, outcome: &'static str, faces: Vec<FaceId>) {
        if self.tracing {
            let class = self.class_of(name);
            self.trace.push(TraceRecord {
                time: self.now(),
                node,
                packet,
                name: name.clone(),
                outcome,
                faces,
                class,
            });
        }
    }

    fn dispatch(&mut self, ev: SimEvent<Action>) {
        match ev.action {
            Action::Issue { node, request } => self.issue(node, request),
            Action::Deliver {
                to,
                from,
                packet,
                hops,
            } => self.deliver(to, from, packet, hops),
            Action::Process {
                node,
                from,
                packet,
                hops,
            } => self.process(node, from, packet, hops),
            Action::Timeout { node, request, seq } => self.timeout(node, request, seq),
            Action::Background => self.background_tick(),
        }
    }

    fn issue(&mut self, node: NodeId, request: RequestId) {
        let now = self.now();
        let Some((interest, seq, lifetime)) = self.consumer_mut(node).issue(request, now) else {
            return;
        };
        let up = self.topology.upstream[&node];
        self.record(node, PacketKind::Interest, interest.name(), "SENT", vec![up.face()]);
        self.send(node, up, Packet::Interest(interest), 0, Duration::ZERO);
        self.engine
            .schedule_after(lifetime, Action::Timeout { node, request, seq });
    }

    fn deliver(&mut self, to: NodeId, from: NodeId, packet: Packet, hops: u8) {
        let now = self.now();
        match &mut self.nodes[to.0 as usize] {
            NodeState::Router(r) => {
                if r.processing.is_zero() {
                    self.process(to, from, packet, hops);
                } else {
                    let start = r.busy_until.max(now);
                    let done = start + r.processing;
                    r.busy_until = done;
                    self.engine
                        .schedule(done, Action::Process { node: to, from, packet, hops })
                        .expect("service completes in the future");
                }
            }
            NodeState::Consumer(c) => {
                let Packet::Data(data) = packet else { return };
                let before = c.counters().unsolicited;
                let follow_ups = c.on_data(&data, now);
                let outcome = if c.counters().unsolicited > before {
                    "UNSOLICITED"
                } else {
                    "SATISFIED"
                };
                for (request, gap) in follow_ups {
                    self.engine.schedule_after(gap, Action::Issue { node: to, request });
                }
                self.record(to, PacketKind::Data, data.name(), outcome, vec![from.face()]);
            }
            NodeState::Producer(catalog) => {
                let Packet::Interest(interest) = packet else { return };
                match catalog.respond(&interest) {
                    Some(data) => {
                        self.record(to, PacketKind::Interest, interest.name(), "PRODUCED", vec![from.face()]);
                        self.send(to, from, Packet::Data(data), 0, Duration::ZERO);
                    }
                    None => {
                        self.record(to, PacketKind::Interest, interest.name(), "NO_MATCH", vec![from.face()]);
                    }
                }
            }
        }
    }

    fn process(&mut self, node: NodeId, from: NodeId, packet: Packet, hops: u8) {
        let now = self.now();
        let NodeState::Router(r) = &mut self.nodes[node.0 as usize] else {
            unreachable!("only routers process");
        };
        match packet {
            Packet::Interest(interest) => {
                let out = r.router.handle_interest(&interest, hops, from.face(), now);
                self.record(node, PacketKind::Interest, interest.name(), out.kind.as_str(), vec![from.face()]);
                for (p, face) in out.emitted {
                    self.send(node, face.into(), p, hops, out.delay);
                }
            }
            Packet::Data(data) => {
                let out = r.router.handle_data(&data, from.face(), now);
                let outcome = if out.unsolicited {
                    "DATA_UNSOLICITED"
                } else if out.cached {
                    "DATA_CACHED"
                } else {
                    "DATA_FORWARDED"
                };
                let faces = out.emitted.iter().map(|(_, f)| *f).collect();
                self.record(node, PacketKind::Data, data.name(), outcome, faces);
                for (d, face) in out.emitted {
                    self.send(node, face.into(), Packet::Data(d), 0, Duration::ZERO);
                }
            }
        }
    }

    fn timeout(&mut self, node: NodeId, request: RequestId, seq: u64) {
        let now = self.now();
        let name = self
            .consumer(node)
            .outstanding()
            .find(|(id, _, _)| *id == request)
            .map(|(_, n, _)| n.clone());
        match self.consumer_mut(node).on_timeout(request, seq, now) {
            TimeoutAction::Ignore => {}
            TimeoutAction::Retry => {
                if let Some(n) = &name {
                    self.record(node, PacketKind::Interest, n, "TIMEOUT_RETRY", Vec::new());
                }
                self.issue(node, request);
            }
            TimeoutAction::GaveUp => {
                if let Some(n) = &name {
                    self.record(node, PacketKind::Interest, n, "TIMEOUT", Vec::new());
                }
            }
        }
    }

    fn background_tick(&mut self) {
        let now = self.now();
        let Some(bg) = &mut self.background else { return };
        if now >= bg.until {
            bg.armed = false;
            return;
        }
        let u_gap: f64 = bg.rng.random();
        let u_name: f64 = bg.rng.random();
        let idx = ((u_name * bg.names.len() as f64) as usize).min(bg.names.len() - 1);
        let id = RequestId(BACKGROUND_REQUEST_BASE + bg.issued);
        bg.issued += 1;
        let spec = RequestSpec::once(0, bg.names[idx].clone(), bg.lifetime);
        let gap = Duration::from_secs_f64(-(1.0 - u_gap).ln() / bg.rate_hz);
        let node = bg.node;
        self.engine.schedule_after(gap, Action::Background);
        self.consumer_mut(node).submit(id, spec);
        self.issue(node, id);
    }

    /// Drops the next packet `from` puts on the wire for `name`, without
    /// consuming a random draw.
    pub fn force_loss(&mut self, from: NodeId, name: Name) {
        self.forced_losses.insert((from, name));
    }

    fn send(&mut self, from: NodeId, to: NodeId, packet: Packet, hops: u8, hold: Duration) {
        let class = self.class_of(packet.name());
        let link = self.topology.links[&(from, to)];
        let counters = self.link_counters.entry((from, to)).or_default();
        if !self.forced_losses.is_empty() && self.forced_losses.remove(&(from, packet.name().clone())) {
            counters.transmits += 1;
            counters.losses += 1;
            let kind = PacketKind::of(&packet);
            self.record(from, kind, packet.name(), "LOST", vec![to.face()]);
            return;
        }
        let streams = match class {
            TrafficClass::Covert => self.streams,
            TrafficClass::Background => self.background_streams,
        };
        let rng = self.link_rngs.entry((from, to, class)).or_insert_with(|| {
            streams.stream(&format!("link/{}->{}/{}", from.0, to.0, class.as_str()))
        });
        let kind = PacketKind::of(&packet);
        let name = packet.name().clone();
        let action = Action::Deliver {
            to,
            from,
            packet,
            hops: hops.saturating_add(1),
        };
        if transmit(&mut self.engine, &link, counters, rng, hold, action).is_none() {
            self.record(from, kind, &name, "LOST", vec![to.face()]);
        }
    }

    /// Snapshot of everything the network itself holds: router tables,
    /// consumer-side outstanding requests and in-flight events. Values that
    /// only order operations internally (cache ticks, event sequence numbers,
    /// random-stream positions) are normalised or left out.
    pub fn network_state(&self) -> NetworkState {
        let now = self.now();
        let mut routers = Vec::new();
        let mut consumers = Vec::new();
        for (i, n) in self.nodes.iter().enumerate() {
            let node = NodeId(i as u32);
            match n {
                NodeState::Router(r) => {
                    let cs = r.router.content_store();
                    routers.push(RouterSnapshot {
                        node,
                        pit: r
                            .router
                            .pit()
                            .entries()
                            .map(|e| PitSnapshot {
                                name: e.name.clone(),
                                faces: e.arrival_faces.iter().copied().collect(),
                                created_at: e.created_at,
                                expires_at: e.expires_at,
                            })
                            .collect(),
                        content_store: cs
                            .entries()
                            .map(|(name, e)| CsSnapshot {
                                name: name.clone(),
                                inserted_at: e.inserted_at,
                                stale_at: e.stale_at,
                                last_access: e.last_access,
                                access_count: e.access_count,
                                recency_rank: cs.eviction_rank(name).unwrap_or(0),
                            })
                            .collect(),
                        seen_once: r.router.seen_once().map(|(n, t)| (n.clone(), *t)).collect(),
                        backlog_ns: r.busy_until.saturating_since(now).as_nanos() as u64,
                    });
                }
                NodeState::Consumer(c) => consumers.push(ConsumerSnapshot {
                    node,
                    outstanding: c
                        .outstanding()
                        .map(|(id, name, in_flight)| (id.0, name.clone(), in_flight))
                        .collect(),
                    records: c.records().len(),
                    counters: c.counters(),
                }),
                NodeState::Producer(_) => {}
            }
        }
        let pending_events = self
            .engine
            .queued()
            .into_iter()
            .map(|e| EventSnapshot::of(e.fire_at, &e.action))
            .collect();
        NetworkState {
            now,
            routers,
            consumers,
            pending_events,
        }
    }

    pub fn write_trace_ndjson<W: Write>(&self, mut w: W) -> io::Result<()> {
        for r in &self.trace {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PitSnapshot {
    pub name: Name,
    pub faces: Vec<FaceId>,
    pub created_at: SimTime,
    pub expires_at: SimTime,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CsSnapshot {
    pub name: Name,
    pub inserted_at: SimTime,
    pub stale_at: SimTime,
    pub last_access: SimTime,
    pub access_count: u64,
    pub recency_rank: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RouterSnapshot {
    pub node: NodeId,
    pub pit: Vec<PitSnapshot>,
    pub content_store: Vec<CsSnapshot>,
    pub seen_once: Vec<(Name, SimTime)>,
    pub backlog_ns: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConsumerSnapshot {
    pub node: NodeId,
    pub outstanding: Vec<(u64, Name, bool)>,
    pub records: usize,
    pub counters: crate::node::TrafficCounters,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EventSnapshot {
    pub fire_at: SimTime,
    pub kind: &'static str,
    pub node: NodeId,
    pub peer: Option<NodeId>,
    pub name: Option<Name>,
    pub request: Option<u64>,
}

impl EventSnapshot {
    fn of(fire_at: SimTime, a: &Action) -> Self {
        let (kind, node, peer, name, request) = match a {
            Action::Issue { node, request } => ("issue", *node, None, None, Some(request.0)),
            Action::Deliver { to, from, packet, .. } => {
                ("deliver", *to, Some(*from), Some(packet.name().clone()), None)
            }
            Action::Process { node, from, packet, .. } => {
                ("process", *node, Some(*from), Some(packet.name().clone()), None)
            }
            Action::Timeout { node, request, .. } => ("timeout", *node, None, None, Some(request.0)),
            Action::Background => ("background", NodeId(u32::MAX), None, None, None),
        };
        Self {
            fire_at,
            kind,
            node,
            peer,
            name,
            request,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NetworkState {
    pub now: SimTime,
    pub routers: Vec<RouterSnapshot>,
    pub consumers: Vec<ConsumerSnapshot>,
    pub pending_events: Vec<EventSnapshot>,
}

impl NetworkState {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain data serialises")
    }

    /// True if no router holds anything under `prefix`.
    pub fn mentions(&self, prefix: &Name) -> bool {
        self.routers.iter().any(|r| {
            r.pit.iter().any(|p| prefix.is_prefix_of(&p.name))
                || r.content_store.iter().any(|c| prefix.is_prefix_of(&c.name))
                || r.seen_once.iter().any(|(n, _)| prefix.is_prefix_of(n))
        })
    }
}

/// Convenience for tests and calibration: data packet as the producer would
/// stamp it for this topology.
pub fn data_for(spec: &TopologySpec, name: Name) -> DataPacket {
    DataPacket::new(name, vec![0u8; 8], spec.freshness)
        .and_then(|d| d.with_wire_size(spec.data_bytes))
        .expect("validated spec")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ndn::parse_name;
    use crate::netsim::{Jitter, LinkModel};

    fn n(s: &str) -> Name {
        parse_name(s).unwrap()
    }

    fn ideal_lan() -> TopologySpec {
        TopologySpec::lan().ideal()
    }

    fn fetch(sim: &mut Simulation, node: NodeId, id: u64, name: &str, at: SimTime) {
        let spec = RequestSpec::once(id, n(name), sim.spec().interest_lifetime);
        sim.submit(node, RequestId(id), spec, at).unwrap();
    }

    #[test]
    fn miss_then_hit_rtts_are_analytic() {
        let spec = ideal_lan();
        let mut sim = build_topology(&spec, 1).unwrap();
        sim.publish([&n("/x/a")]);
        let rcv = sim.topology().roles.rcv[0];
        fetch(&mut sim, rcv, 1, "/x/a", SimTime::ZERO);
        fetch(&mut sim, rcv, 2, "/x/a", SimTime::from_millis(5));
        sim.run();
        let r = sim.consumer(rcv).records();
        assert_eq!(r[0].rtt, Some(Duration::from_micros(1800)));
        assert_eq!(r[1].rtt, Some(Duration::from_micros(800)));
        assert_eq!(sim.consumer(rcv).counters().bytes_total(), 836);
    }

    #[test]
    fn pit_collapse_between_sender_and_receiver() {
        let spec = ideal_lan();
        let mut sim = build_topology(&spec, 1).unwrap();
        sim.publish([&n("/x/a")]);
        let roles = sim.topology().roles.clone();
        fetch(&mut sim, roles.snd, 1, "/x/a", SimTime::ZERO);
        fetch(&mut sim, roles.rcv[0], 2, "/x/a", SimTime::from_micros(800));
        sim.run();
        let rtt = sim.consumer(roles.rcv[0]).records()[0].rtt.unwrap();
        assert_eq!(rtt, Duration::from_micros(1000));
        assert!(sim
            .trace()
            .iter()
            .any(|t| t.node == roles.rt && t.outcome == "PIT_HIT_COLLAPSED"));
    }

    #[test]
    fn extra_hops_add_their_delay() {
        let mut spec = ideal_lan();
        spec.receiver_hops = vec![
            LinkModel::fixed(Duration::from_micros(70)),
            LinkModel::fixed(Duration::from_micros(30)),
        ];
        let mut sim = build_topology(&spec, 1).unwrap();
        sim.publish([&n("/x/a")]);
        let rcv = sim.topology().roles.rcv[0];
        fetch(&mut sim, rcv, 1, "/x/a", SimTime::ZERO);
        sim.run();
        assert_eq!(sim.consumer(rcv).records()[0].rtt, Some(Duration::from_micros(2000)));
    }

    #[test]
    fn scope_two_stops_at_first_router() {
        let spec = ideal_lan();
        let mut sim = build_topology(&spec, 1).unwrap();
        sim.publish([&n("/x/a")]);
        let rcv = sim.topology().roles.rcv[0];
        let mut req = RequestSpec::once(0, n("/x/a"), spec.interest_lifetime);
        req.scope = Some(2);
        sim.submit(rcv, RequestId(0), req, SimTime::ZERO).unwrap();
        sim.run();
        assert!(sim.consumer(rcv).records()[0].timed_out);
    }

    #[test]
    fn processing_queue_serialises_arrivals() {
        let mut spec = ideal_lan();
        spec.processing = Duration::from_micros(100);
        let mut sim = build_topology(&spec, 1).unwrap();
        let names: Vec<Name> = (0..3).map(|i| n(&format!("/x/{i}"))).collect();
        sim.publish(names.iter());
        let rcv = sim.topology().roles.rcv[0];
        for i in 0..3 {
            fetch(&mut sim, rcv, i, &format!("/x/{i}"), SimTime::ZERO);
        }
        sim.run();
        let rtts: Vec<u64> = sim
            .consumer(rcv)
            .records()
            .iter()
            .map(|r| r.rtt.unwrap().as_micros() as u64)
            .collect();
        // Each packet visits Rt twice; later ones wait behind earlier ones.
        assert_eq!(rtts, vec![2000, 2100, 2200]);
    }

    #[test]
    fn loss_triggers_retry_and_counters_balance() {
        let mut spec = ideal_lan();
        spec.receiver_link = spec.receiver_link.with_loss(0.3);
        let mut sim = build_topology(&spec, 9).unwrap();
        let names: Vec<Name> = (0..200).map(|i| n(&format!("/x/{i}"))).collect();
        sim.publish(names.iter());
        let rcv = sim.topology().roles.rcv[0];
        for (i, name) in names.iter().enumerate() {
            let mut req = RequestSpec::once(i as u64, name.clone(), spec.interest_lifetime);
            req.retries = 20;
            sim.submit(rcv, RequestId(i as u64), req, SimTime::from_millis(i as u64)).unwrap();
        }
        sim.run();
        let recs = sim.consumer(rcv).records();
        assert_eq!(recs.len(), 200);
        assert!(recs.iter().all(|r| !r.timed_out));
        assert!(recs.iter().any(|r| r.attempts > 1));
        for c in sim.link_counters().values() {
            assert_eq!(c.transmits, c.deliveries + c.losses);
        }
    }

    #[test]
    fn background_traffic_is_isolated_from_covert_draws() {
        let mut spec = TopologySpec::lan();
        spec.background = Some(Default::default());
        let run = |covert: bool| {
            let mut sim = build_topology(&spec, 4).unwrap();
            sim.publish([&n("/x/a")]);
            sim.start_background(SimTime::from_millis(100));
            if covert {
                let snd = sim.topology().roles.snd;
                fetch(&mut sim, snd, 1, "/x/a", SimTime::from_millis(10));
            }
            sim.run();
            let bg = sim.topology().roles.bg.unwrap();
            sim.consumer(bg).records().to_vec()
        };
        let a = run(false);
        assert!(!a.is_empty());
        assert_eq!(a, run(true));
    }

    #[test]
    fn network_state_ignores_cache_ticks() {
        let spec = TopologySpec {
            router: crate::node::RouterConfig {
                pit_lifetime: Duration::from_millis(20),
                ..Default::default()
            },
            ..ideal_lan()
        };
        let mut sim = build_topology(&spec, 1).unwrap();
        sim.publish([&n("/x/a")]);
        let s0 = sim.network_state();
        assert!(s0.routers.iter().all(|r| r.content_store.is_empty()));
        let rcv = sim.topology().roles.rcv[0];
        fetch(&mut sim, rcv, 1, "/x/a", SimTime::ZERO);
        sim.run();
        assert!(sim.network_state().mentions(&n("/x")));
        sim.run_until(SimTime::from_millis(11_000));
        sim.expire_routers();
        assert!(!sim.network_state().mentions(&n("/x")));
    }

    #[test]
    fn jittered_runs_are_reproducible() {
        let mut spec = TopologySpec::lan();
        spec.receiver_link = spec.receiver_link.with_jitter(Jitter::Uniform {
            half_width: Duration::from_micros(50),
        });
        let run = || {
            let mut sim = build_topology(&spec, 3).unwrap();
            sim.publish([&n("/x/a"), &n("/x/b")]);
            let rcv = sim.topology().roles.rcv[0];
            fetch(&mut sim, rcv, 1, "/x/a", SimTime::ZERO);
            fetch(&mut sim, rcv, 2, "/x/b", SimTime::from_micros(10));
            sim.run();
            sim.trace().to_vec()
        };
        assert_eq!(run(), run());
    }
}
