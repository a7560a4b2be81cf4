//! Topological and data kernels: the part of a system that survives a churn
//! boundary unchanged.

use std::collections::{BTreeMap, BTreeSet};

use crate::model::{Configuration, DataItem, NodeId};

/// Nodes present in both graphs whose neighbor sets are identical in both.
pub fn ker_t(g1: &BTreeMap<NodeId, BTreeSet<NodeId>>, g2: &BTreeMap<NodeId, BTreeSet<NodeId>>) -> BTreeSet<NodeId> {
    g1.iter().filter(|(p, n)| g2.get(p) == Some(n)).map(|(p, _)| *p).collect()
}

/// [`ker_t`] over the active graphs of two configurations.
pub fn ker_t_conf(c1: &Configuration, c2: &Configuration) -> BTreeSet<NodeId> {
    c1.graph.iter().filter(|(p, n)| c2.graph.get(p).is_some_and(|m| m == *n)).map(|(p, _)| *p).collect()
}

/// Data items stored somewhere in both configurations.
pub fn ker_d(c1: &Configuration, c2: &Configuration) -> BTreeSet<DataItem> {
    let d2 = c2.all_data();
    c1.all_data().into_iter().filter(|d| d2.contains(d)).collect()
}

/// Nodes holding at least one kernel item in `c`; the projection domain for
/// a data kernel.
pub fn data_holders(c: &Configuration, kernel: &BTreeSet<DataItem>) -> BTreeSet<NodeId> {
    c.data.iter().filter(|(_, d)| d.iter().any(|x| kernel.contains(x))).map(|(p, _)| *p).collect()
}
