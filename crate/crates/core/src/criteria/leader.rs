//! Leader criterion: the `(trust, date)` pair of each node, ordered by
//! `a ⪯ b` iff `trust(b) ⊆ trust(a)` or `date(a) ≤ date(b)`.
//!
//! The disjunction is reflexive but neither antisymmetric nor transitive in
//! general; it is kept as stated and `check_order_laws` reports violations.

use std::collections::BTreeSet;

use crate::model::{Configuration, NodeId};
use crate::protocols::leader::leader_state;

use super::{Aggregation, LocalCriterion, NodeValue, OrderRel, StateField};

/// `(trust, date)` of `p`; an empty trust at date 0 when `p` runs no leader state.
pub fn gamma_leader(c: &Configuration, p: NodeId) -> NodeValue {
    match leader_state(c, p) {
        Some(s) => NodeValue::Trust { trust: s.trust.clone(), date: s.date },
        None => NodeValue::Trust { trust: BTreeSet::new(), date: 0 },
    }
}

fn trust_le(a: &NodeValue, b: &NodeValue) -> bool {
    match (a, b) {
        (NodeValue::Trust { trust: ta, date: da }, NodeValue::Trust { trust: tb, date: db }) => {
            tb.is_subset(ta) || da <= db
        }
        _ => false,
    }
}

pub fn leader_order(a: &NodeValue, b: &NodeValue) -> OrderRel {
    if trust_le(a, b) {
        OrderRel::Le
    } else if trust_le(b, a) {
        OrderRel::Gt
    } else {
        OrderRel::Incomparable
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LeaderCriterion;

impl LocalCriterion for LeaderCriterion {
    fn name(&self) -> &str {
        "leader"
    }

    fn footprint(&self) -> BTreeSet<StateField> {
        BTreeSet::from([StateField::LeaderTrust])
    }

    fn aggregate_node(&self, c: &Configuration, p: NodeId) -> NodeValue {
        gamma_leader(c, p)
    }

    fn le(&self, a: &NodeValue, b: &NodeValue) -> bool {
        trust_le(a, b)
    }

    fn aggregation(&self) -> Aggregation {
        Aggregation::Pointwise
    }
}
