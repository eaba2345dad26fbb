//! Sender, receivers, a shared router and a producer, with optional extra
//! routers in front of the shared one.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::clock::ClockModel;
use super::link::{Jitter, LinkError, LinkModel};
use crate::ndn::{parse_name, Name, NameError, DEFAULT_DATA_BYTES, DEFAULT_INTEREST_BYTES};
use crate::node::{FaceId, RouterConfig, RouterConfigError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    /// The face a neighbour uses to reach this node.
    pub fn face(self) -> FaceId {
        FaceId(self.0)
    }
}

impl From<FaceId> for NodeId {
    fn from(f: FaceId) -> Self {
        NodeId(f.0)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Lan,
    TestbedLike,
}

impl Preset {
    pub fn as_str(self) -> &'static str {
        match self {
            Preset::Lan => "lan",
            Preset::TestbedLike => "testbed-like",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Preset {
    type Err = TopologyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lan" => Ok(Preset::Lan),
            "testbed-like" | "testbed_like" | "testbed" => Ok(Preset::TestbedLike),
            other => Err(TopologyError::UnknownPreset(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TopologyError {
    #[error("unknown preset {0:?} (expected lan or testbed-like)")]
    UnknownPreset(String),
    #[error("no link between the shared router and the producer")]
    MissingCoreLink,
    #[error("at least one receiver is required")]
    NoReceivers,
    #[error("link {0}: {1}")]
    Link(String, LinkError),
    #[error("router: {0}")]
    Router(#[from] RouterConfigError),
    #[error("bad name {0:?}: {1}")]
    Name(String, NameError),
    #[error("{0}")]
    Invalid(String),
}

/// Poisson interests for a set of popular names, issued by an extra
/// consumer attached to the shared router.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackgroundSpec {
    pub rate_hz: f64,
    pub namespace: String,
    /// Number of distinct names requested, chosen uniformly.
    pub names: u32,
    #[serde(rename = "freshness_ms", with = "crate::serde_duration::millis")]
    pub freshness: Duration,
    pub link: LinkModel,
    /// Separate master seed for background arrivals and their link draws;
    /// the trial seed is used when absent.
    pub seed: Option<u64>,
}

impl Default for BackgroundSpec {
    fn default() -> Self {
        Self {
            rate_hz: 200.0,
            namespace: "/popular".into(),
            names: 50,
            freshness: Duration::from_millis(500),
            link: LinkModel::fixed(Duration::from_micros(300)),
            seed: None,
        }
    }
}

impl BackgroundSpec {
    pub fn namespace_name(&self) -> Result<Name, TopologyError> {
        parse_name(&self.namespace).map_err(|e| TopologyError::Name(self.namespace.clone(), e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopologySpec {
    /// Sender to its first router.
    pub sender_link: LinkModel,
    /// Each receiver to its first router.
    pub receiver_link: LinkModel,
    /// Shared router to producer.
    pub core_link: Option<LinkModel>,
    /// Extra routers between the sender and the shared router, one per link.
    pub sender_hops: Vec<LinkModel>,
    pub receiver_hops: Vec<LinkModel>,
    pub receivers: u32,
    pub router: RouterConfig,
    /// FIFO service time per packet at the shared router.
    #[serde(rename = "processing_us", with = "crate::serde_duration::micros")]
    pub processing: Duration,
    pub sender_clock: ClockModel,
    pub receiver_clock: ClockModel,
    /// Freshness the producer stamps on message content.
    #[serde(rename = "freshness_ms", with = "crate::serde_duration::millis")]
    pub freshness: Duration,
    /// Consumer-side interest lifetime (retransmission timer).
    #[serde(rename = "interest_lifetime_ms", with = "crate::serde_duration::millis")]
    pub interest_lifetime: Duration,
    pub interest_bytes: u32,
    pub data_bytes: u32,
    pub background: Option<BackgroundSpec>,
}

impl Default for TopologySpec {
    fn default() -> Self {
        Self::lan()
    }
}

impl TopologySpec {
    /// Sub-millisecond links with tight jitter: hit and miss RTTs never meet.
    pub fn lan() -> Self {
        let sigma = Jitter::Normal {
            sigma: Duration::from_micros(10),
        };
        let access = LinkModel::fixed(Duration::from_micros(400)).with_jitter(sigma);
        Self {
            sender_link: access,
            receiver_link: access,
            core_link: Some(LinkModel::fixed(Duration::from_micros(500)).with_jitter(sigma)),
            sender_hops: Vec::new(),
            receiver_hops: Vec::new(),
            receivers: 1,
            router: RouterConfig {
                pit_lifetime: Duration::from_millis(20),
                ..RouterConfig::default()
            },
            processing: Duration::ZERO,
            sender_clock: ClockModel::default(),
            receiver_clock: ClockModel::default(),
            freshness: Duration::from_secs(10),
            interest_lifetime: Duration::from_millis(25),
            interest_bytes: DEFAULT_INTEREST_BYTES,
            data_bytes: DEFAULT_DATA_BYTES,
            background: None,
        }
    }

    /// Wide-area access links with a heavy right tail and a short, steady
    /// hop to the producer: hit and miss RTTs overlap by a few percent.
    pub fn testbed_like() -> Self {
        let access = LinkModel::fixed(Duration::from_millis(93))
            .with_jitter(Jitter::LogNormal { mu: 0.0, sigma: 0.7 });
        Self {
            sender_link: access,
            receiver_link: access,
            core_link: Some(
                LinkModel::fixed(Duration::from_micros(2500)).with_jitter(Jitter::Normal {
                    sigma: Duration::from_micros(100),
                }),
            ),
            sender_hops: Vec::new(),
            receiver_hops: Vec::new(),
            receivers: 1,
            router: RouterConfig {
                pit_lifetime: Duration::from_secs(1),
                ..RouterConfig::default()
            },
            processing: Duration::from_micros(8),
            sender_clock: ClockModel::default(),
            receiver_clock: ClockModel::default(),
            freshness: Duration::from_secs(120),
            interest_lifetime: Duration::from_millis(1200),
            interest_bytes: DEFAULT_INTEREST_BYTES,
            data_bytes: DEFAULT_DATA_BYTES,
            background: None,
        }
    }

    pub fn preset(p: Preset) -> Self {
        match p {
            Preset::Lan => Self::lan(),
            Preset::TestbedLike => Self::testbed_like(),
        }
    }

    /// Jitter-free, loss-free copy.
    pub fn ideal(mut self) -> Self {
        for l in self.links_mut() {
            l.jitter = Jitter::None;
            l.loss_prob = 0.0;
        }
        self.sender_clock = ClockModel::default();
        self.receiver_clock = ClockModel::default();
        self
    }

    /// Applies `f` to every link model in the spec.
    pub fn links_mut(&mut self) -> impl Iterator<Item = &mut LinkModel> {
        std::iter::once(&mut self.sender_link)
            .chain(std::iter::once(&mut self.receiver_link))
            .chain(self.core_link.iter_mut())
            .chain(self.sender_hops.iter_mut())
            .chain(self.receiver_hops.iter_mut())
    }

    pub fn validate(&self) -> Result<(), TopologyError> {
        let core = self.core_link.as_ref().ok_or(TopologyError::MissingCoreLink)?;
        if self.receivers == 0 {
            return Err(TopologyError::NoReceivers);
        }
        self.router.validate()?;
        let check = |label: &str, l: &LinkModel| {
            l.validate().map_err(|e| TopologyError::Link(label.to_string(), e))
        };
        check("sender", &self.sender_link)?;
        check("receiver", &self.receiver_link)?;
        check("core", core)?;
        for (i, l) in self.sender_hops.iter().enumerate() {
            check(&format!("sender_hops[{i}]"), l)?;
        }
        for (i, l) in self.receiver_hops.iter().enumerate() {
            check(&format!("receiver_hops[{i}]"), l)?;
        }
        if self.freshness.is_zero() {
            return Err(TopologyError::Invalid("freshness must be positive".into()));
        }
        if self.interest_lifetime.is_zero() {
            return Err(TopologyError::Invalid("interest lifetime must be positive".into()));
        }
        if self.interest_bytes == 0 || self.data_bytes == 0 {
            return Err(TopologyError::Invalid("wire sizes must be at least one byte".into()));
        }
        for c in [&self.sender_clock, &self.receiver_clock] {
            if !(c.drift.is_finite() && c.drift > 0.0) {
                return Err(TopologyError::Invalid(format!("clock drift {} must be positive", c.drift)));
            }
        }
        if let Some(bg) = &self.background {
            bg.namespace_name()?;
            if !(bg.rate_hz.is_finite() && bg.rate_hz > 0.0) || bg.names == 0 {
                return Err(TopologyError::Invalid(
                    "background needs a positive rate and at least one name".into(),
                ));
            }
            if bg.freshness.is_zero() {
                return Err(TopologyError::Invalid("background freshness must be positive".into()));
            }
            check("background", &bg.link)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Consumer,
    Router,
    Producer,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NodeInfo {
    pub id: NodeId,
    pub label: String,
    pub kind: NodeKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Roles {
    pub snd: NodeId,
    pub rt: NodeId,
    pub pr: NodeId,
    pub rcv: Vec<NodeId>,
    pub bg: Option<NodeId>,
}

/// The wiring derived from a [`TopologySpec`]. Links are stored per
/// direction; both directions of a pair share one model.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub nodes: Vec<NodeInfo>,
    pub links: BTreeMap<(NodeId, NodeId), LinkModel>,
    pub roles: Roles,
    /// Next hop toward the producer for every non-producer node.
    pub upstream: BTreeMap<NodeId, NodeId>,
    /// Per-router FIFO service time.
    pub processing: BTreeMap<NodeId, Duration>,
}

impl Topology {
    pub fn from_spec(spec: &TopologySpec) -> Result<Self, TopologyError> {
        spec.validate()?;
        let mut t = Topology {
            nodes: Vec::new(),
            links: BTreeMap::new(),
            roles: Roles {
                snd: NodeId(0),
                rt: NodeId(0),
                pr: NodeId(0),
                rcv: Vec::new(),
                bg: None,
            },
            upstream: BTreeMap::new(),
            processing: BTreeMap::new(),
        };
        let snd = t.add("Snd", NodeKind::Consumer);
        let rt = t.add("Rt", NodeKind::Router);
        let pr = t.add("Pr", NodeKind::Producer);
        t.processing.insert(rt, spec.processing);
        t.connect(rt, pr, *spec.core_link.as_ref().expect("validated"));
        t.chain(snd, "SndHop", spec.sender_link, &spec.sender_hops, rt);
        let mut rcv = Vec::new();
        for k in 0..spec.receivers {
            let label = if spec.receivers == 1 { "Rcv".to_string() } else { format!("Rcv{k}") };
            let r = t.add(&label, NodeKind::Consumer);
            t.chain(r, &format!("{label}Hop"), spec.receiver_link, &spec.receiver_hops, rt);
            rcv.push(r);
        }
        let bg = spec.background.as_ref().map(|b| {
            let id = t.add("Bg", NodeKind::Consumer);
            t.connect(id, rt, b.link);
            id
        });
        t.roles = Roles { snd, rt, pr, rcv, bg };
        Ok(t)
    }

    fn add(&mut self, label: &str, kind: NodeKind) -> NodeId {
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(NodeInfo {
            id,
            label: label.to_string(),
            kind,
        });
        id
    }

    fn connect(&mut self, down: NodeId, up: NodeId, link: LinkModel) {
        self.links.insert((down, up), link);
        self.links.insert((up, down), link);
        self.upstream.insert(down, up);
    }

    // consumer -first- H1 -hops[0]- H2 ... Hk -hops[k-1]- rt
    fn chain(&mut self, consumer: NodeId, label: &str, first: LinkModel, hops: &[LinkModel], rt: NodeId) {
        let mut prev = consumer;
        let mut link = first;
        for (i, next_link) in hops.iter().enumerate() {
            let h = self.add(&format!("{label}{i}"), NodeKind::Router);
            self.processing.insert(h, Duration::ZERO);
            self.connect(prev, h, link);
            prev = h;
            link = *next_link;
        }
        self.connect(prev, rt, link);
    }

    pub fn label(&self, id: NodeId) -> &str {
        &self.nodes[id.0 as usize].label
    }

    pub fn kind(&self, id: NodeId) -> NodeKind {
        self.nodes[id.0 as usize].kind
    }

    /// The face on the shared router through which `node`'s traffic arrives.
    pub fn rt_face_toward(&self, node: NodeId) -> Option<FaceId> {
        let mut cur = node;
        loop {
            let up = *self.upstream.get(&cur)?;
            if up == self.roles.rt {
                return Some(cur.face());
            }
            cur = up;
        }
    }

    /// Links between `node` and the shared router, in path order.
    pub fn path_to_rt(&self, node: NodeId) -> Vec<LinkModel> {
        let mut out = Vec::new();
        let mut cur = node;
        while cur != self.roles.rt {
            let Some(&up) = self.upstream.get(&cur) else { break };
            out.push(self.links[&(cur, up)]);
            cur = up;
        }
        out
    }
}
