//! Eventual leader election over a dynamic set of processes.
//!
//! Each node keeps a trust set and an epoch date. A query round intersects
//! the trust set with the first `alpha` responders and reliably broadcasts
//! the result. Receivers adopt newer epochs, intersect equal ones, and open a
//! new epoch with the full universe when an intersection becomes empty.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::model::{Action, Configuration, Message, NodeId, NodeState, ProtocolModel, Report, Step};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeaderState {
    pub trust: BTreeSet<NodeId>,
    pub date: u64,
    /// Completed query rounds.
    pub rounds: u64,
}

impl LeaderState {
    pub fn initial(universe: &BTreeSet<NodeId>) -> Self {
        LeaderState { trust: universe.clone(), date: 0, rounds: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "msg", rename_all = "snake_case")]
pub enum LeaderMessage {
    Trust { trust: BTreeSet<NodeId>, date: u64 },
}

pub fn leader_state(c: &Configuration, p: NodeId) -> Option<&LeaderState> {
    match c.state(p)? {
        NodeState::Leader(s) => Some(s),
        _ => None,
    }
}

/// Receive rule for a broadcast `(trust, date)`.
pub fn on_receive_trust(
    state: &LeaderState,
    trust: &BTreeSet<NodeId>,
    date: u64,
    universe: &BTreeSet<NodeId>,
) -> LeaderState {
    let mut s = state.clone();
    if date > state.date {
        s.trust = trust.clone();
        s.date = date;
    } else if date == state.date {
        s.trust = state.trust.intersection(trust).copied().collect();
        if s.trust.is_empty() {
            s.trust = universe.clone();
            s.date += 1;
        }
    }
    s
}

/// Leader as seen by `me`: the smallest trusted id, or `me` itself when
/// the trust set is empty or still the whole universe.
pub fn query_leader(state: &LeaderState, me: NodeId, universe: &BTreeSet<NodeId>) -> NodeId {
    match state.trust.first() {
        Some(l) if &state.trust != universe => *l,
        _ => me,
    }
}

/// Outcome of one query round answered by `responders`.
pub fn round_outcome(state: &LeaderState, responders: &BTreeSet<NodeId>, universe: &BTreeSet<NodeId>) -> LeaderState {
    let mut s = state.clone();
    s.rounds += 1;
    s.trust = state.trust.intersection(responders).copied().collect();
    if s.trust.is_empty() {
        s.trust = universe.clone();
        s.date += 1;
    }
    s
}

#[derive(Debug, Clone)]
pub struct LeaderModel {
    /// The declared id universe.
    pub universe: BTreeSet<NodeId>,
    pub alpha: usize,
    /// Nodes that never leave and, once churn is over, answer first.
    pub stable: BTreeSet<NodeId>,
    /// Set by the engine after the last scheduled C/D action.
    pub timely: bool,
}

impl LeaderModel {
    fn round_action(&self, c: &Configuration, p: NodeId, me: &LeaderState, responders: &BTreeSet<NodeId>) -> Action {
        let s = round_outcome(me, responders, &self.universe);
        let msg = LeaderMessage::Trust { trust: s.trust.clone(), date: s.date };
        let send = c.active().filter(|q| *q != p).map(|q| (q, Message::Leader(msg.clone()))).collect();
        Action::step(p, Step { receive: None, state: Some(NodeState::Leader(s)), neighbors: None, send })
    }

    fn deliveries(&self, c: &Configuration, p: NodeId, me: &LeaderState) -> Vec<Action> {
        c.ready_senders(p)
            .into_iter()
            .filter_map(|from| match c.head(p, from) {
                Some(Message::Leader(LeaderMessage::Trust { trust, date })) => {
                    let s = on_receive_trust(me, trust, *date, &self.universe);
                    Some(Action::step(
                        p,
                        Step {
                            receive: Some(from),
                            state: Some(NodeState::Leader(s)),
                            neighbors: None,
                            send: Vec::new(),
                        },
                    ))
                }
                _ => None,
            })
            .collect()
    }

    /// IO record with the current leader of every active node.
    pub fn leader_reports(&self, c: &Configuration) -> Vec<Action> {
        c.active()
            .filter_map(|p| {
                let s = leader_state(c, p)?;
                Some(Action::report(p, Report::Leader { leader: query_leader(s, p, &self.universe) }))
            })
            .collect()
    }
}

fn combinations(items: &[NodeId], k: usize) -> Vec<BTreeSet<NodeId>> {
    if k == 0 {
        return vec![BTreeSet::new()];
    }
    if items.len() < k {
        return Vec::new();
    }
    let mut out = Vec::new();
    for (i, x) in items.iter().enumerate() {
        for mut rest in combinations(&items[i + 1..], k - 1) {
            rest.insert(*x);
            out.push(rest);
        }
    }
    out
}

impl ProtocolModel for LeaderModel {
    fn name(&self) -> &str {
        "leader"
    }

    /// Deliveries, plus one round per possible responder set (deduplicated
    /// by outcome).
    fn enabled(&self, c: &Configuration, p: NodeId) -> Vec<Action> {
        let Some(me) = leader_state(c, p) else { return Vec::new() };
        let mut out = self.deliveries(c, p, me);
        let active: Vec<NodeId> = c.active().collect();
        let mut seen = BTreeSet::new();
        for r in combinations(&active, self.alpha) {
            let key: BTreeSet<NodeId> = me.trust.intersection(&r).copied().collect();
            if seen.insert(key) {
                out.push(self.round_action(c, p, me, &r));
            }
        }
        out
    }

    fn sample(&self, c: &Configuration, p: NodeId, rng: &mut dyn rand::RngCore) -> Option<Action> {
        let me = leader_state(c, p)?;
        let mut deliveries = self.deliveries(c, p, me);
        // one slot per pending delivery plus one for a round
        let pick = (rng.next_u64() % (deliveries.len() as u64 + 1)) as usize;
        if pick < deliveries.len() {
            return Some(deliveries.swap_remove(pick));
        }
        let responders: BTreeSet<NodeId> = if self.timely {
            self.stable.iter().filter(|q| c.is_active(**q)).take(self.alpha).copied().collect()
        } else {
            // first alpha responses in a seeded delivery order
            let mut order: Vec<NodeId> = c.active().collect();
            for i in (1..order.len()).rev() {
                order.swap(i, (rng.next_u64() % (i as u64 + 1)) as usize);
            }
            order.into_iter().take(self.alpha).collect()
        };
        (responders.len() == self.alpha).then(|| self.round_action(c, p, me, &responders))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(v: &[u64]) -> BTreeSet<NodeId> {
        v.iter().map(|x| NodeId(*x)).collect()
    }

    fn st(trust: &[u64], date: u64) -> LeaderState {
        LeaderState { trust: ids(trust), date, rounds: 0 }
    }

    #[test]
    fn older_date_is_ignored() {
        let pi = ids(&[1, 2, 3, 4]);
        assert_eq!(on_receive_trust(&st(&[1, 2], 5), &ids(&[3]), 4, &pi), st(&[1, 2], 5));
    }

    #[test]
    fn newer_date_is_adopted() {
        let pi = ids(&[1, 2, 3, 4]);
        assert_eq!(on_receive_trust(&st(&[1, 2], 5), &ids(&[3]), 7, &pi), st(&[3], 7));
    }

    #[test]
    fn equal_dates_intersect() {
        let pi = ids(&[1, 2, 3, 4]);
        assert_eq!(on_receive_trust(&st(&[1, 2, 3], 2), &ids(&[2, 3, 4]), 2, &pi), st(&[2, 3], 2));
        assert_eq!(on_receive_trust(&st(&[1, 2, 3], 5), &ids(&[1, 2]), 5, &pi), st(&[1, 2], 5));
    }

    #[test]
    fn empty_intersection_opens_epoch() {
        let pi = ids(&[1, 2, 3, 4]);
        assert_eq!(on_receive_trust(&st(&[1], 5), &ids(&[2]), 5, &pi), st(&[1, 2, 3, 4], 6));
    }

    #[test]
    fn leader_query_rule() {
        let pi = ids(&[1, 5, 9]);
        assert_eq!(query_leader(&st(&[5, 9], 0), NodeId(1), &pi), NodeId(5));
        assert_eq!(query_leader(&st(&[1, 5, 9], 0), NodeId(9), &pi), NodeId(9));
        assert_eq!(query_leader(&st(&[], 0), NodeId(9), &pi), NodeId(9));
    }

    #[test]
    fn single_responder_round() {
        let pi = ids(&[1, 2]);
        let s = round_outcome(&LeaderState::initial(&pi), &ids(&[2]), &pi);
        assert_eq!((s.trust, s.date), (ids(&[2]), 0));
        let same = round_outcome(&st(&[1, 2], 3), &ids(&[1, 2]), &pi);
        assert_eq!((same.trust, same.date), (ids(&[1, 2]), 3));
    }

    #[test]
    fn combinations_count() {
        let v: Vec<NodeId> = (0..6).map(NodeId).collect();
        assert_eq!(combinations(&v, 3).len(), 20);
        assert!(combinations(&v, 7).is_empty());
    }
}
