//! One-shot query: a depth-first visit collecting matching values, with an
//! engine-backed perfect failure detector.
//!
//! The query token carries the current DFS stack (`querying`), the nodes
//! whose values are already merged (`visited`) and those values, so a node
//! skipped as visited always has its values upstream of the skip. A node that is waiting on a
//! child moves on when the detector reports the child gone. If a node on its
//! own stack fails, the node abandons its visit; a later query from the live
//! token resumes exploration from where it stopped, so no statically
//! reachable node is skipped.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::model::{Action, Configuration, DataItem, Message, NodeId, NodeState, ProtocolModel, Step};

/// Values match when they start with `prefix`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuerySpec {
    pub prefix: DataItem,
}

impl QuerySpec {
    pub fn matches(&self, d: &DataItem) -> bool {
        d.0.starts_with(&self.prefix.0)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryState {
    /// Query identifier; 0 until the node first receives a query.
    pub query: u64,
    pub spec: QuerySpec,
    pub target: BTreeSet<NodeId>,
    pub replied: BTreeSet<NodeId>,
    pub failed: BTreeSet<NodeId>,
    pub values: BTreeSet<DataItem>,
    pub parent: Option<NodeId>,
    pub waiting: Option<NodeId>,
    pub querying: BTreeSet<NodeId>,
    pub visited: BTreeSet<NodeId>,
    pub done: bool,
}

impl QueryState {
    pub fn started(&self) -> bool {
        self.query != 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "msg", rename_all = "snake_case")]
pub enum QueryMessage {
    Query {
        query: u64,
        spec: QuerySpec,
        querying: BTreeSet<NodeId>,
        visited: BTreeSet<NodeId>,
        #[serde(default)]
        values: BTreeSet<DataItem>,
    },
    Reply {
        query: u64,
        values: BTreeSet<DataItem>,
        visited: BTreeSet<NodeId>,
    },
}

pub fn query_state(c: &Configuration, p: NodeId) -> Option<&QueryState> {
    match c.state(p)? {
        NodeState::Query(s) => Some(s),
        _ => None,
    }
}

fn own_values(c: &Configuration, p: NodeId, spec: &QuerySpec) -> BTreeSet<DataItem> {
    c.data_of(p).iter().filter(|d| spec.matches(d)).cloned().collect()
}

/// Picks the next child to query, or finishes and replies upward.
fn advance(c: &Configuration, p: NodeId, s: &mut QueryState, send: &mut Vec<(NodeId, Message)>) {
    loop {
        let next = s
            .target
            .iter()
            .find(|q| {
                **q != p
                    && !s.replied.contains(q)
                    && !s.failed.contains(q)
                    && !s.querying.contains(q)
                    && !s.visited.contains(q)
            })
            .copied();
        match next {
            Some(q) if !c.is_active(q) => {
                s.failed.insert(q);
            }
            Some(q) => {
                s.waiting = Some(q);
                let msg = QueryMessage::Query {
                    query: s.query,
                    spec: s.spec.clone(),
                    querying: s.querying.clone(),
                    visited: s.visited.clone(),
                    values: s.values.clone(),
                };
                send.push((q, Message::Query(msg)));
                return;
            }
            None => {
                s.done = true;
                s.waiting = None;
                // neighbors merged elsewhere or on the stack are accounted as answered
                let known: Vec<NodeId> =
                    s.target.iter().filter(|q| s.visited.contains(q) || s.querying.contains(q)).copied().collect();
                s.replied.extend(known);
                s.visited.insert(p);
                if let Some(parent) = s.parent {
                    let msg =
                        QueryMessage::Reply { query: s.query, values: s.values.clone(), visited: s.visited.clone() };
                    send.push((parent, Message::Query(msg)));
                }
                return;
            }
        }
    }
}

fn stack_broken(c: &Configuration, p: NodeId, s: &QueryState) -> bool {
    s.querying.iter().any(|q| *q != p && !c.is_active(*q))
}

fn step(p: NodeId, receive: Option<NodeId>, s: QueryState, send: Vec<(NodeId, Message)>) -> Action {
    Action::step(p, Step { receive, state: Some(NodeState::Query(s)), neighbors: None, send })
}

#[allow(clippy::too_many_arguments)]
fn on_query(
    c: &Configuration,
    p: NodeId,
    me: &QueryState,
    from: NodeId,
    query: u64,
    spec: &QuerySpec,
    querying: &BTreeSet<NodeId>,
    visited: &BTreeSet<NodeId>,
    values: &BTreeSet<DataItem>,
) -> Action {
    let orphan_msg = querying.iter().any(|q| !c.is_active(*q));
    let busy = me.query == query && me.waiting.is_some() && !stack_broken(c, p, me);
    let mut send = Vec::new();
    if orphan_msg {
        return Action::step(p, Step { receive: Some(from), ..Step::default() });
    }
    if busy {
        let msg = QueryMessage::Reply { query, values: me.values.clone(), visited: me.visited.clone() };
        return Action::step(
            p,
            Step { receive: Some(from), send: vec![(from, Message::Query(msg))], ..Step::default() },
        );
    }
    let mut s = me.clone();
    if me.query != query {
        s = QueryState {
            query,
            spec: spec.clone(),
            target: c.neighbors(p).iter().copied().chain([p]).collect(),
            replied: BTreeSet::from([p]),
            values: own_values(c, p, spec),
            ..QueryState::default()
        };
    }
    // ancestors of an earlier, abandoned stack were only marked, not merged
    s.replied.retain(|q| *q == p || s.visited.contains(q));
    s.parent = Some(from);
    s.waiting = None;
    s.done = false;
    s.querying = querying.iter().copied().chain([p]).collect();
    s.visited.extend(visited.iter().copied());
    s.values.extend(values.iter().cloned());
    advance(c, p, &mut s, &mut send);
    step(p, Some(from), s, send)
}

fn on_reply(
    c: &Configuration,
    p: NodeId,
    me: &QueryState,
    from: NodeId,
    values: &BTreeSet<DataItem>,
    visited: &BTreeSet<NodeId>,
) -> Action {
    let mut s = me.clone();
    s.values.extend(values.iter().cloned());
    s.visited.extend(visited.iter().copied());
    if s.target.contains(&from) {
        s.replied.insert(from);
    }
    let mut send = Vec::new();
    if me.waiting == Some(from) {
        s.waiting = None;
        advance(c, p, &mut s, &mut send);
    }
    step(p, Some(from), s, send)
}

/// Start a query at `initiator`: fresh state, target = view plus itself.
pub fn query_start(c: &Configuration, initiator: NodeId, query: u64, spec: QuerySpec) -> Action {
    let mut s = QueryState {
        query,
        target: c.neighbors(initiator).iter().copied().chain([initiator]).collect(),
        replied: BTreeSet::from([initiator]),
        values: own_values(c, initiator, &spec),
        querying: BTreeSet::from([initiator]),
        spec,
        ..QueryState::default()
    };
    let mut send = Vec::new();
    advance(c, initiator, &mut s, &mut send);
    step(initiator, None, s, send)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct QueryModel;

impl ProtocolModel for QueryModel {
    fn name(&self) -> &str {
        "query"
    }

    fn enabled(&self, c: &Configuration, p: NodeId) -> Vec<Action> {
        let Some(me) = query_state(c, p) else { return Vec::new() };
        let mut out = Vec::new();
        for from in c.ready_senders(p) {
            match c.head(p, from) {
                Some(Message::Query(QueryMessage::Query { query, spec, querying, visited, values })) => {
                    out.push(on_query(c, p, me, from, *query, spec, querying, visited, values));
                }
                Some(Message::Query(QueryMessage::Reply { query, values, visited })) if *query == me.query => {
                    out.push(on_reply(c, p, me, from, values, visited));
                }
                Some(_) => out.push(Action::step(p, Step { receive: Some(from), ..Step::default() })),
                None => {}
            }
        }
        if let Some(w) = me.waiting {
            if !c.is_active(w) {
                // failure detector: the awaited child is gone
                let mut s = me.clone();
                s.failed.insert(w);
                s.waiting = None;
                let mut send = Vec::new();
                advance(c, p, &mut s, &mut send);
                out.push(step(p, None, s, send));
            } else if stack_broken(c, p, me) {
                let mut s = me.clone();
                s.waiting = None;
                s.parent = None;
                out.push(step(p, None, s, Vec::new()));
            }
        }
        // view upkeep: drop departed neighbors, link back to nodes listing p
        let view = c.neighbors(p);
        let mut fixed: BTreeSet<NodeId> = view.iter().filter(|q| c.is_active(**q)).copied().collect();
        fixed.extend(c.active().filter(|q| *q != p && c.neighbors(*q).contains(&p)));
        if &fixed != view {
            out.push(Action::step(p, Step { neighbors: Some(fixed), ..Step::default() }));
        }
        out
    }
}
