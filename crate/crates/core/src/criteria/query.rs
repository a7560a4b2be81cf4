//! One-shot query progress: the fraction of reachable targets that answered,
//! `|replied| / |target \ failed|`, with `0/0 = 1`.

use std::collections::BTreeSet;

use crate::model::{Configuration, NodeId};
use crate::protocols::query::{query_state, QueryState};

use super::{CriterionError, LocalCriterion, NodeValue, StateField};

pub fn query_progress(s: &QueryState) -> f64 {
    let live = s.target.iter().filter(|q| !s.failed.contains(q)).count();
    if live == 0 {
        return 1.0;
    }
    let replied = s.replied.iter().filter(|q| s.target.contains(q) && !s.failed.contains(q)).count();
    replied as f64 / live as f64
}

pub fn gamma_query(c: &Configuration, p: NodeId) -> Result<f64, CriterionError> {
    match query_state(c, p) {
        Some(s) if s.started() => Ok(query_progress(s)),
        _ => Err(CriterionError::QueryNotStarted(p)),
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct QueryCriterion;

impl LocalCriterion for QueryCriterion {
    fn name(&self) -> &str {
        "query"
    }

    fn footprint(&self) -> BTreeSet<StateField> {
        BTreeSet::from([StateField::QueryProgress])
    }

    /// Nodes the query has not reached score 0.
    fn aggregate_node(&self, c: &Configuration, p: NodeId) -> NodeValue {
        NodeValue::Scalar(gamma_query(c, p).unwrap_or(0.0))
    }
}
