//! Configurations, actions, replayable traces and static fragments.
//!
//! Time is the configuration ordinal inside a trace. Every transition is an
//! [`Action`] whose payload fully determines the successor, so a trace can be
//! replayed from its first configuration and must reproduce every stored
//! configuration exactly.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::lsa::LsaState;
use crate::overlays::can::{CanMessage, CanState};
use crate::overlays::pastry::{PastryMessage, PastryState};
use crate::protocols::leader::{LeaderMessage, LeaderState};
use crate::protocols::query::{QueryMessage, QueryState};

/// Identifier of one node instance. Never reused once the node disconnects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct NodeId(pub u64);

// Map keys inside tagged enums reach the deserializer as strings.
impl<'de> Deserialize<'de> for NodeId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = NodeId;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a node id")
            }
            fn visit_u64<E: serde::de::Error>(self, v: u64) -> Result<NodeId, E> {
                Ok(NodeId(v))
            }
            fn visit_i64<E: serde::de::Error>(self, v: i64) -> Result<NodeId, E> {
                u64::try_from(v).map(NodeId).map_err(E::custom)
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> Result<NodeId, E> {
                v.parse().map(NodeId).map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ActionKind {
    Internal,
    IO,
    DataWrite,
    Connect,
    Disconnect,
}

impl ActionKind {
    /// Connect and Disconnect are the only kinds that change the active set.
    pub fn is_dynamic(self) -> bool {
        matches!(self, ActionKind::Connect | ActionKind::Disconnect)
    }
}

/// Opaque data item, compared by value.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DataItem(#[serde(with = "hex::serde")] pub Vec<u8>);

impl DataItem {
    pub fn new(bytes: impl Into<Vec<u8>>) -> Self {
        DataItem(bytes.into())
    }
}

/// Protocol-specific local state of a node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "protocol", rename_all = "snake_case")]
pub enum NodeState {
    Plain,
    Lsa(LsaState),
    Can(CanState),
    Pastry(PastryState),
    Leader(LeaderState),
    Query(QueryState),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "protocol", rename_all = "snake_case")]
pub enum Message {
    Can(CanMessage),
    Pastry(PastryMessage),
    Leader(LeaderMessage),
    Query(QueryMessage),
}

/// Records emitted by IO actions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "report", rename_all = "snake_case")]
pub enum Report {
    Leader { leader: NodeId },
    QueryResult { query: u64, values: Vec<DataItem> },
}

/// A local step of the actor: optionally consume the head of one incoming
/// channel, overwrite its own state and neighbor view, and send messages.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Step {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub receive: Option<NodeId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<NodeState>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neighbors: Option<BTreeSet<NodeId>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub send: Vec<(NodeId, Message)>,
}

impl Step {
    pub fn is_noop(&self) -> bool {
        self.receive.is_none() && self.state.is_none() && self.neighbors.is_none() && self.send.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Payload {
    None,
    Join {
        state: NodeState,
        neighbors: BTreeSet<NodeId>,
        #[serde(default)]
        data: BTreeSet<DataItem>,
    },
    Leave,
    Step(Step),
    Data {
        #[serde(default)]
        insert: BTreeSet<DataItem>,
        #[serde(default)]
        remove: BTreeSet<DataItem>,
    },
    Report(Report),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub seq: u64,
    pub kind: ActionKind,
    pub actor: NodeId,
    pub payload: Payload,
}

impl Action {
    pub fn noop(actor: NodeId) -> Self {
        Action { seq: 0, kind: ActionKind::Internal, actor, payload: Payload::None }
    }

    pub fn step(actor: NodeId, step: Step) -> Self {
        Action { seq: 0, kind: ActionKind::Internal, actor, payload: Payload::Step(step) }
    }

    pub fn connect(actor: NodeId, state: NodeState, neighbors: BTreeSet<NodeId>, data: BTreeSet<DataItem>) -> Self {
        Action { seq: 0, kind: ActionKind::Connect, actor, payload: Payload::Join { state, neighbors, data } }
    }

    pub fn disconnect(actor: NodeId) -> Self {
        Action { seq: 0, kind: ActionKind::Disconnect, actor, payload: Payload::Leave }
    }

    pub fn report(actor: NodeId, report: Report) -> Self {
        Action { seq: 0, kind: ActionKind::IO, actor, payload: Payload::Report(report) }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("actor {0} is not active")]
    UnknownActor(NodeId),
    #[error("node {0} is already active or was retired")]
    DuplicateNode(NodeId),
    #[error("malformed payload for {actor}: {reason}")]
    MalformedPayload { actor: NodeId, reason: String },
    #[error("node {0} is not active in the configuration")]
    NodeNotActive(NodeId),
    #[error("replay diverges at action {0}")]
    ReplayMismatch(usize),
    #[error("protocol did not quiesce within {0} actions")]
    NoQuiescence(usize),
}

fn malformed(actor: NodeId, reason: impl Into<String>) -> ModelError {
    ModelError::MalformedPayload { actor, reason: reason.into() }
}

/// Incoming FIFO channels of one node, keyed by sender. Queues are shared
/// between configurations until written.
pub type Inbox = BTreeMap<NodeId, Arc<VecDeque<Message>>>;

/// Snapshot of the system: node states, the logical graph of one layer,
/// stored data and in-flight messages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub time: u64,
    pub layer: String,
    pub nodes: BTreeMap<NodeId, Arc<NodeState>>,
    pub graph: BTreeMap<NodeId, Arc<BTreeSet<NodeId>>>,
    #[serde(default)]
    pub data: BTreeMap<NodeId, BTreeSet<DataItem>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub channels: BTreeMap<NodeId, Inbox>,
    #[serde(default)]
    pub retired: Arc<BTreeSet<NodeId>>,
}

static EMPTY_SET: BTreeSet<NodeId> = BTreeSet::new();
static EMPTY_DATA: BTreeSet<DataItem> = BTreeSet::new();

impl Configuration {
    pub fn new(layer: impl Into<String>) -> Self {
        Configuration {
            time: 0,
            layer: layer.into(),
            nodes: BTreeMap::new(),
            graph: BTreeMap::new(),
            data: BTreeMap::new(),
            channels: BTreeMap::new(),
            retired: Arc::new(BTreeSet::new()),
        }
    }

    pub fn is_active(&self, p: NodeId) -> bool {
        self.nodes.contains_key(&p)
    }

    pub fn active(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.keys().copied()
    }

    pub fn active_set(&self) -> BTreeSet<NodeId> {
        self.nodes.keys().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn state(&self, p: NodeId) -> Option<&NodeState> {
        self.nodes.get(&p).map(|s| s.as_ref())
    }

    /// The neighbor view of `p`; empty when `p` is inactive.
    pub fn neighbors(&self, p: NodeId) -> &BTreeSet<NodeId> {
        self.graph.get(&p).map(|s| s.as_ref()).unwrap_or(&EMPTY_SET)
    }

    pub fn data_of(&self, p: NodeId) -> &BTreeSet<DataItem> {
        self.data.get(&p).unwrap_or(&EMPTY_DATA)
    }

    /// Union of all stored data.
    pub fn all_data(&self) -> BTreeSet<DataItem> {
        self.data.values().flat_map(|d| d.iter().cloned()).collect()
    }

    pub fn inbox(&self, p: NodeId) -> Option<&Inbox> {
        self.channels.get(&p)
    }

    /// Senders with a non-empty channel towards `p`, in id order.
    pub fn ready_senders(&self, p: NodeId) -> Vec<NodeId> {
        self.channels
            .get(&p)
            .map(|inbox| inbox.iter().filter(|(_, q)| !q.is_empty()).map(|(s, _)| *s).collect())
            .unwrap_or_default()
    }

    pub fn head(&self, p: NodeId, from: NodeId) -> Option<&Message> {
        self.channels.get(&p).and_then(|i| i.get(&from)).and_then(|q| q.front())
    }

    pub fn has_messages(&self) -> bool {
        self.channels.values().any(|i| i.values().any(|q| !q.is_empty()))
    }

    /// Next fresh identifier: above every active and retired id.
    pub fn next_fresh_id(&self) -> NodeId {
        let a = self.nodes.keys().next_back().map(|n| n.0 + 1).unwrap_or(0);
        let r = self.retired.iter().next_back().map(|n| n.0 + 1).unwrap_or(0);
        NodeId(a.max(r))
    }

    /// Adjacency restricted to active keys, as plain sets.
    pub fn adjacency(&self) -> BTreeMap<NodeId, BTreeSet<NodeId>> {
        self.graph.iter().map(|(p, n)| (*p, n.as_ref().clone())).collect()
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn state_hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("configuration serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

/// Successor of `c` under action `a`.
pub fn apply_action(c: &Configuration, a: &Action) -> Result<Configuration, ModelError> {
    let mut next = c.clone();
    next.time = c.time + 1;
    match a.kind {
        ActionKind::Connect => {
            if c.is_active(a.actor) || c.retired.contains(&a.actor) {
                return Err(ModelError::DuplicateNode(a.actor));
            }
            let Payload::Join { state, neighbors, data } = &a.payload else {
                return Err(malformed(a.actor, "connect requires a join payload"));
            };
            if neighbors.contains(&a.actor) {
                return Err(malformed(a.actor, "node lists itself as neighbor"));
            }
            next.nodes.insert(a.actor, Arc::new(state.clone()));
            next.graph.insert(a.actor, Arc::new(neighbors.clone()));
            if !data.is_empty() {
                next.data.insert(a.actor, data.clone());
            }
        }
        ActionKind::Disconnect => {
            if !c.is_active(a.actor) {
                return Err(ModelError::UnknownActor(a.actor));
            }
            if !matches!(a.payload, Payload::Leave | Payload::None) {
                return Err(malformed(a.actor, "disconnect carries no payload"));
            }
            next.nodes.remove(&a.actor);
            next.graph.remove(&a.actor);
            next.data.remove(&a.actor);
            next.channels.remove(&a.actor);
            for inbox in next.channels.values_mut() {
                inbox.remove(&a.actor);
            }
            next.channels.retain(|_, inbox| !inbox.is_empty());
            Arc::make_mut(&mut next.retired).insert(a.actor);
        }
        kind => {
            if !c.is_active(a.actor) {
                return Err(ModelError::UnknownActor(a.actor));
            }
            match (&a.payload, kind) {
                (Payload::None, _) => {}
                (Payload::Step(step), ActionKind::Internal | ActionKind::IO) => {
                    apply_step(&mut next, a.actor, step)?;
                }
                (Payload::Data { insert, remove }, ActionKind::DataWrite) => {
                    let entry = next.data.entry(a.actor).or_default();
                    for d in remove {
                        entry.remove(d);
                    }
                    entry.extend(insert.iter().cloned());
                    if entry.is_empty() {
                        next.data.remove(&a.actor);
                    }
                }
                (Payload::Report(_), ActionKind::IO) => {}
                (p, k) => {
                    return Err(malformed(a.actor, format!("payload {} not allowed for {k:?}", payload_name(p))));
                }
            }
        }
    }
    Ok(next)
}

fn payload_name(p: &Payload) -> &'static str {
    match p {
        Payload::None => "none",
        Payload::Join { .. } => "join",
        Payload::Leave => "leave",
        Payload::Step(_) => "step",
        Payload::Data { .. } => "data",
        Payload::Report(_) => "report",
    }
}

fn apply_step(next: &mut Configuration, actor: NodeId, step: &Step) -> Result<(), ModelError> {
    if let Some(from) = step.receive {
        let inbox = next.channels.get_mut(&actor).ok_or_else(|| malformed(actor, "no incoming channel"))?;
        let queue = inbox.get_mut(&from).ok_or_else(|| malformed(actor, format!("no channel from {from}")))?;
        if Arc::make_mut(queue).pop_front().is_none() {
            return Err(malformed(actor, format!("channel from {from} is empty")));
        }
        if queue.is_empty() {
            inbox.remove(&from);
        }
        if inbox.is_empty() {
            next.channels.remove(&actor);
        }
    }
    if let Some(state) = &step.state {
        next.nodes.insert(actor, Arc::new(state.clone()));
    }
    if let Some(neighbors) = &step.neighbors {
        if neighbors.contains(&actor) {
            return Err(malformed(actor, "node lists itself as neighbor"));
        }
        next.graph.insert(actor, Arc::new(neighbors.clone()));
    }
    for (dest, msg) in &step.send {
        if next.is_active(*dest) {
            Arc::make_mut(next.channels.entry(*dest).or_default().entry(actor).or_default()).push_back(msg.clone());
        }
    }
    Ok(())
}

/// Restriction of `c` to the node set `k`: states, edges with both
/// endpoints in `k`, data and channels.
pub fn project_kernel(c: &Configuration, k: &BTreeSet<NodeId>) -> Result<Configuration, ModelError> {
    if let Some(p) = k.iter().find(|p| !c.is_active(**p)) {
        return Err(ModelError::NodeNotActive(*p));
    }
    let mut out = Configuration::new(c.layer.clone());
    out.time = c.time;
    out.retired = c.retired.clone();
    for p in k {
        out.nodes.insert(*p, c.nodes[p].clone());
        let nbrs = c.neighbors(*p);
        if nbrs.iter().all(|q| k.contains(q)) {
            out.graph.insert(*p, c.graph[p].clone());
        } else {
            out.graph.insert(*p, Arc::new(nbrs.iter().filter(|q| k.contains(q)).copied().collect()));
        }
        if let Some(d) = c.data.get(p) {
            out.data.insert(*p, d.clone());
        }
        if let Some(inbox) = c.channels.get(p) {
            let kept: Inbox = inbox.iter().filter(|(s, _)| k.contains(s)).map(|(s, q)| (*s, q.clone())).collect();
            if !kept.is_empty() {
                out.channels.insert(*p, kept);
            }
        }
    }
    Ok(out)
}

/// A maximal C/D-free span of a trace, by configuration index (inclusive).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fragment {
    pub index: usize,
    pub start: usize,
    pub end: usize,
}

impl Fragment {
    /// Indices of the actions inside the fragment.
    pub fn action_range(&self) -> std::ops::Range<usize> {
        self.start..self.end
    }

    pub fn is_singleton(&self) -> bool {
        self.start == self.end
    }
}

/// Splits `configurations = actions + 1` positions at every dynamic action.
pub fn segment_kinds(kinds: &[ActionKind]) -> Vec<Fragment> {
    let mut out = Vec::new();
    let mut start = 0;
    for (i, k) in kinds.iter().enumerate() {
        if k.is_dynamic() {
            out.push(Fragment { index: out.len(), start, end: i });
            start = i + 1;
        }
    }
    out.push(Fragment { index: out.len(), start, end: kinds.len() });
    out
}

pub fn segment_fragments(t: &Trace) -> Vec<Fragment> {
    let kinds: Vec<ActionKind> = t.actions.iter().map(|a| a.kind).collect();
    segment_kinds(&kinds)
}

/// Finite execution prefix: `configurations[i + 1] = apply(configurations[i], actions[i])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub configurations: Vec<Configuration>,
    pub actions: Vec<Action>,
}

impl Trace {
    pub fn new(initial: Configuration) -> Self {
        Trace { configurations: vec![initial], actions: Vec::new() }
    }

    pub fn last(&self) -> &Configuration {
        self.configurations.last().expect("trace has an initial configuration")
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// Applies `a` to the last configuration, assigning its sequence number.
    pub fn push(&mut self, mut a: Action) -> Result<&Configuration, ModelError> {
        a.seq = self.actions.len() as u64;
        let next = apply_action(self.last(), &a)?;
        self.actions.push(a);
        self.configurations.push(next);
        Ok(self.last())
    }

    pub fn fragments(&self) -> Vec<Fragment> {
        segment_fragments(self)
    }

    pub fn begin(&self, f: &Fragment) -> &Configuration {
        &self.configurations[f.start]
    }

    pub fn end(&self, f: &Fragment) -> &Configuration {
        &self.configurations[f.end]
    }

    pub fn dynamic_count(&self) -> usize {
        self.actions.iter().filter(|a| a.kind.is_dynamic()).count()
    }

    /// Re-applies every action from the first configuration.
    pub fn verify_replay(&self) -> Result<(), ModelError> {
        let mut c = self.configurations[0].clone();
        for (i, a) in self.actions.iter().enumerate() {
            c = apply_action(&c, a)?;
            if c != self.configurations[i + 1] {
                return Err(ModelError::ReplayMismatch(i));
            }
        }
        Ok(())
    }

    /// Rebuilds a trace from its first configuration and action list.
    pub fn replay(initial: Configuration, actions: Vec<Action>) -> Result<Trace, ModelError> {
        let mut configurations = Vec::with_capacity(actions.len() + 1);
        configurations.push(initial);
        for a in &actions {
            let next = apply_action(configurations.last().unwrap(), a)?;
            configurations.push(next);
        }
        Ok(Trace { configurations, actions })
    }
}

/// The per-node action enumerator a protocol exposes to the monitors.
pub trait ProtocolModel: Send + Sync {
    fn name(&self) -> &str;

    /// Every action `p` can execute in `c`.
    fn enabled(&self, c: &Configuration, p: NodeId) -> Vec<Action>;

    /// Whether `enabled` is exhaustive for this protocol.
    fn can_enumerate(&self) -> bool {
        true
    }

    /// One enabled action of `p` drawn by the scheduler; protocols with large
    /// enumerations override this to avoid building them.
    fn sample(&self, c: &Configuration, p: NodeId, rng: &mut dyn rand::RngCore) -> Option<Action> {
        let mut all = self.enabled(c, p);
        if all.is_empty() {
            return None;
        }
        let i = (rng.next_u64() % all.len() as u64) as usize;
        Some(all.swap_remove(i))
    }
}
