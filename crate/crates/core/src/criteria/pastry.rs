//! Pastry criteria over the three tables: routing slots scored by prefix
//! validity over proximity, leaf members by circular id distance, and
//! neighborhood members by proximity.

use std::collections::BTreeSet;

use crate::model::{Configuration, NodeId};
use crate::overlays::pastry::{pastry_f, pastry_state, ring_distance, sq_distance, PastryParams};

use super::{CriterionError, LocalCriterion, NodeValue, PairCriterion, StateField};

fn proximity(c: &Configuration, p: NodeId, q: NodeId) -> Option<f64> {
    let (a, b) = (pastry_state(c, p)?, pastry_state(c, q)?);
    Some((sq_distance(a.coord, b.coord) as f64).sqrt())
}

/// `f / dist` clamped to `[0, 1]`.
pub fn routing_score(f: u8, dist: f64) -> f64 {
    if f == 0 {
        return 0.0;
    }
    (f as f64 / dist).clamp(0.0, 1.0)
}

/// Score of `q` in its routing slot of `p`; 0 when `q` has left.
pub fn gamma_pastry_routing(
    c: &Configuration,
    params: &PastryParams,
    p: NodeId,
    q: NodeId,
) -> Result<f64, CriterionError> {
    let me = pastry_state(c, p).ok_or(CriterionError::MissingPosition(p))?;
    let (row, col) = me
        .routing
        .iter()
        .enumerate()
        .find_map(|(r, cols)| cols.iter().position(|e| *e == Some(q)).map(|j| (r, j)))
        .ok_or(CriterionError::SlotUnassigned { p, q })?;
    let Some(other) = pastry_state(c, q).filter(|_| c.is_active(q)) else { return Ok(0.0) };
    let f = pastry_f(row, col as u8, &params.digits_of(me.key), &params.digits_of(other.key))?;
    Ok(routing_score(f, proximity(c, p, q).unwrap_or(f64::INFINITY)))
}

pub fn gamma_pastry_neighbor(c: &Configuration, p: NodeId, q: NodeId) -> f64 {
    if !c.is_active(q) {
        return 0.0;
    }
    proximity(c, p, q).map_or(0.0, |d| 1.0 / (1.0 + d))
}

pub fn gamma_pastry_leaf(c: &Configuration, params: &PastryParams, p: NodeId, q: NodeId) -> f64 {
    if !c.is_active(q) {
        return 0.0;
    }
    match (pastry_state(c, p), pastry_state(c, q)) {
        (Some(a), Some(b)) => 1.0 / (1.0 + ring_distance(a.key, b.key, params.ring()) as f64),
        _ => 0.0,
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RoutingCriterion {
    pub params: PastryParams,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LeafCriterion {
    pub params: PastryParams,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct NeighborhoodCriterion {
    pub params: PastryParams,
}

impl LocalCriterion for RoutingCriterion {
    fn name(&self) -> &str {
        "pastry-routing"
    }

    fn footprint(&self) -> BTreeSet<StateField> {
        BTreeSet::from([StateField::PastryRouting])
    }

    /// Sum over slots, normalized by the number of scored slots.
    fn aggregate_node(&self, c: &Configuration, p: NodeId) -> NodeValue {
        let Some(me) = pastry_state(c, p) else { return NodeValue::Scalar(0.0) };
        let sum: f64 = me.routing.iter().flatten().flatten().map(|q| self.eval(c, p, *q)).sum();
        NodeValue::Scalar(sum / self.params.slot_count() as f64)
    }
}

impl PairCriterion for RoutingCriterion {
    fn eval(&self, c: &Configuration, p: NodeId, q: NodeId) -> f64 {
        gamma_pastry_routing(c, &self.params, p, q).unwrap_or(0.0)
    }
}

impl LocalCriterion for LeafCriterion {
    fn name(&self) -> &str {
        "pastry-leaf"
    }

    fn footprint(&self) -> BTreeSet<StateField> {
        BTreeSet::from([StateField::PastryLeaf])
    }

    fn aggregate_node(&self, c: &Configuration, p: NodeId) -> NodeValue {
        let Some(me) = pastry_state(c, p) else { return NodeValue::Scalar(0.0) };
        let sum: f64 = me.leaf.iter().map(|q| self.eval(c, p, *q)).sum();
        NodeValue::Scalar(sum / self.params.leaf.max(1) as f64)
    }
}

impl PairCriterion for LeafCriterion {
    fn eval(&self, c: &Configuration, p: NodeId, q: NodeId) -> f64 {
        gamma_pastry_leaf(c, &self.params, p, q)
    }
}

impl LocalCriterion for NeighborhoodCriterion {
    fn name(&self) -> &str {
        "pastry-neighbor"
    }

    fn footprint(&self) -> BTreeSet<StateField> {
        BTreeSet::from([StateField::PastryNeighborhood])
    }

    fn aggregate_node(&self, c: &Configuration, p: NodeId) -> NodeValue {
        let Some(me) = pastry_state(c, p) else { return NodeValue::Scalar(0.0) };
        let sum: f64 = me.neighborhood.iter().map(|q| self.eval(c, p, *q)).sum();
        NodeValue::Scalar(sum / self.params.neighborhood.max(1) as f64)
    }
}

impl PairCriterion for NeighborhoodCriterion {
    fn eval(&self, c: &Configuration, p: NodeId, q: NodeId) -> f64 {
        gamma_pastry_neighbor(c, p, q)
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::criteria::{check_independence, GlobalCriterion};
    use crate::model::NodeState;
    use crate::overlays::pastry::PastryState;

    fn two(params: &PastryParams, ka: u64, kb: u64, ca: (i64, i64), cb: (i64, i64)) -> Configuration {
        let mut c = Configuration::new("pastry");
        let mut a = PastryState::pending(params, ka, ca, None);
        let b = PastryState::pending(params, kb, cb, None);
        let row = params.shared_prefix(ka, kb);
        if row < params.digits {
            a.routing[row][params.digit(kb, row)] = Some(NodeId(2));
        }
        a.leaf.insert(NodeId(2));
        a.neighborhood.insert(NodeId(2));
        c.nodes.insert(NodeId(1), Arc::new(NodeState::Pastry(a)));
        c.nodes.insert(NodeId(2), Arc::new(NodeState::Pastry(b)));
        c
    }

    #[test]
    fn routing_score_clamps() {
        assert_eq!(routing_score(0, 2.0), 0.0);
        assert_eq!(routing_score(1, 2.0), 0.5);
        assert_eq!(routing_score(1, 0.5), 1.0);
    }

    #[test]
    fn routing_reads_slot() {
        let params = PastryParams { b: 2, digits: 4, ..PastryParams::default() };
        let c = two(&params, 0b01_00_10_11, 0b01_00_10_01, (0, 0), (2, 0));
        assert_eq!(gamma_pastry_routing(&c, &params, NodeId(1), NodeId(2)), Ok(0.5));
        assert_eq!(
            gamma_pastry_routing(&c, &params, NodeId(2), NodeId(1)),
            Err(CriterionError::SlotUnassigned { p: NodeId(2), q: NodeId(1) })
        );
    }

    #[test]
    fn neighbor_score() {
        let params = PastryParams::default();
        let c = two(&params, 1, 2, (0, 0), (3, 0));
        assert_eq!(gamma_pastry_neighbor(&c, NodeId(1), NodeId(2)), 0.25);
        assert_eq!(gamma_pastry_neighbor(&c, NodeId(1), NodeId(7)), 0.0);
        let same = two(&params, 1, 2, (4, 4), (4, 4));
        assert_eq!(gamma_pastry_neighbor(&same, NodeId(1), NodeId(2)), 1.0);
    }

    #[test]
    fn leaf_score_on_small_ring() {
        // ring of 16 ids: b = 2, two digits
        let params = PastryParams { b: 2, digits: 2, ..PastryParams::default() };
        let c = two(&params, 1, 15, (0, 0), (1, 0));
        assert!((gamma_pastry_leaf(&c, &params, NodeId(1), NodeId(2)) - 1.0 / 3.0).abs() < 1e-15);
        let same = two(&params, 5, 5, (0, 0), (1, 0));
        assert_eq!(gamma_pastry_leaf(&same, &params, NodeId(1), NodeId(2)), 1.0);
    }

    #[test]
    fn tables_are_independent() {
        let params = PastryParams::default();
        let r = GlobalCriterion::new(Arc::new(RoutingCriterion { params }));
        let l = GlobalCriterion::new(Arc::new(LeafCriterion { params }));
        let n = GlobalCriterion::new(Arc::new(NeighborhoodCriterion { params }));
        assert!(check_independence(&r, &l));
        assert!(check_independence(&l, &n));
        assert!(!check_independence(&r, &r.clone()));
    }
}
