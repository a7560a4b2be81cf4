//! Proximity criterion for LSA: `1 / (1 + d)` with `d` the L1 distance
//! between integer grid positions, so every score is an exact reciprocal
//! of an integer.

use std::collections::BTreeSet;

use crate::model::{Configuration, NodeId, NodeState};

use super::{mean_over_view, LocalCriterion, NodeValue, PairCriterion, StateField};

#[derive(Debug, Clone, Copy, Default)]
pub struct ProximityCriterion;

pub fn position(c: &Configuration, p: NodeId) -> Option<&[i64]> {
    match c.state(p)? {
        NodeState::Lsa(s) => Some(&s.position),
        _ => None,
    }
}

pub fn l1_distance(a: &[i64], b: &[i64]) -> u64 {
    a.iter().zip(b).map(|(x, y)| x.abs_diff(*y)).sum()
}

/// Integer distance behind the score, `None` when `q` is inactive.
pub fn proximity_distance(c: &Configuration, p: NodeId, q: NodeId) -> Option<u64> {
    let (a, b) = (position(c, p)?, position(c, q)?);
    (a.len() == b.len()).then(|| l1_distance(a, b))
}

impl LocalCriterion for ProximityCriterion {
    fn name(&self) -> &str {
        "proximity"
    }

    fn footprint(&self) -> BTreeSet<StateField> {
        BTreeSet::from([StateField::View])
    }

    fn aggregate_node(&self, c: &Configuration, p: NodeId) -> NodeValue {
        mean_over_view(self, c, p)
    }
}

impl PairCriterion for ProximityCriterion {
    fn eval(&self, c: &Configuration, p: NodeId, q: NodeId) -> f64 {
        match proximity_distance(c, p, q) {
            Some(d) => 1.0 / (1.0 + d as f64),
            None => 0.0,
        }
    }
}
