//! CAN criterion: `1 / (1 + dist)` with `dist` the wrap-around Euclidean
//! distance on the unit torus between the regions two nodes own. A node
//! that has not been granted a zone yet is represented by its id point, so
//! point positions reduce to the plain torus distance.

use std::collections::BTreeSet;

use crate::model::{Configuration, NodeId};
use crate::overlays::can::{can_state, Zone};

use super::{mean_over_view, CriterionError, LocalCriterion, NodeValue, PairCriterion, StateField};

fn region_distance(a: &[Zone], b: &[Zone]) -> f64 {
    a.iter().flat_map(|x| b.iter().map(move |y| x.torus_distance(y))).fold(f64::INFINITY, f64::min)
}

/// Score of `q` from `p`'s perspective on a `dims`-torus; 0 when `q` has left.
pub fn gamma_can(c: &Configuration, p: NodeId, q: NodeId, dims: usize) -> Result<f64, CriterionError> {
    let me = can_state(c, p).ok_or(CriterionError::MissingPosition(p))?;
    if me.id_point.len() != dims {
        return Err(CriterionError::LengthMismatch(me.id_point.len(), dims));
    }
    if !c.is_active(q) {
        return Ok(0.0);
    }
    let other = can_state(c, q).ok_or(CriterionError::MissingPosition(q))?;
    if other.id_point.len() != dims {
        return Err(CriterionError::LengthMismatch(other.id_point.len(), dims));
    }
    Ok(1.0 / (1.0 + region_distance(&me.region(), &other.region())))
}

#[derive(Debug, Clone, Copy)]
pub struct CanCriterion {
    pub dims: usize,
}

impl LocalCriterion for CanCriterion {
    fn name(&self) -> &str {
        "can"
    }

    fn footprint(&self) -> BTreeSet<StateField> {
        BTreeSet::from([StateField::View, StateField::CanZone])
    }

    fn aggregate_node(&self, c: &Configuration, p: NodeId) -> NodeValue {
        mean_over_view(self, c, p)
    }
}

impl PairCriterion for CanCriterion {
    fn eval(&self, c: &Configuration, p: NodeId, q: NodeId) -> f64 {
        gamma_can(c, p, q, self.dims).unwrap_or(0.0)
    }
}
