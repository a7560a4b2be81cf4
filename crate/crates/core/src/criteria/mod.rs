//! Evaluation criteria: per-node local criteria with their partial orders,
//! global aggregation, kernels and monotonic composition.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Configuration, NodeId};

pub mod can;
pub mod kernel;
pub mod leader;
pub mod pastry;
pub mod proximity;
pub mod query;

pub use kernel::{ker_d, ker_t, ker_t_conf};

/// Tolerance for comparing floating scores.
pub const SCORE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CriterionError {
    #[error("node {0} has no position")]
    MissingPosition(NodeId),
    #[error("digit strings differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("{q} does not occupy a routing slot of {p}")]
    SlotUnassigned { p: NodeId, q: NodeId },
    #[error("node {0} has not received the query")]
    QueryNotStarted(NodeId),
    #[error("criteria {0} and {1} span the same sub-configuration")]
    NotIndependent(String, String),
    #[error("unknown criterion {0:?}")]
    UnknownCriterion(String),
}

/// Relation of `a` to `b` under a partial order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OrderRel {
    /// `a ⪯ b` (includes equality)
    Le,
    /// `b ⪯ a` and not `a ⪯ b`
    Gt,
    Incomparable,
}

/// Value of a local criterion at one node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeValue {
    Scalar(f64),
    Trust { trust: BTreeSet<NodeId>, date: u64 },
    Tuple(Vec<NodeValue>),
}

impl NodeValue {
    pub fn as_scalar(&self) -> Option<f64> {
        match self {
            NodeValue::Scalar(x) => Some(*x),
            _ => None,
        }
    }

    /// Plot-friendly scalar: the score itself, the epoch for trust tuples,
    /// the sum for tuples.
    pub fn summary(&self) -> f64 {
        match self {
            NodeValue::Scalar(x) => *x,
            NodeValue::Trust { date, .. } => *date as f64,
            NodeValue::Tuple(parts) => parts.iter().map(NodeValue::summary).sum(),
        }
    }
}

/// The sub-configurations a criterion spans.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum StateField {
    View,
    CanZone,
    PastryRouting,
    PastryLeaf,
    PastryNeighborhood,
    LeaderTrust,
    QueryProgress,
}

pub fn scalar_le(a: f64, b: f64) -> bool {
    a <= b + SCORE_EPS
}

/// How node values combine into a global value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Aggregation {
    /// Sum of scalar node values.
    Sum,
    /// Product order: every node's value compared under the local order.
    Pointwise,
}

/// A local evaluation criterion: a value per node plus a partial order.
pub trait LocalCriterion: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;

    fn footprint(&self) -> BTreeSet<StateField>;

    fn aggregate_node(&self, c: &Configuration, p: NodeId) -> NodeValue;

    /// `a ⪯ b`
    fn le(&self, a: &NodeValue, b: &NodeValue) -> bool {
        match (a, b) {
            (NodeValue::Scalar(x), NodeValue::Scalar(y)) => scalar_le(*x, *y),
            _ => false,
        }
    }

    fn aggregation(&self) -> Aggregation {
        Aggregation::Sum
    }
}

/// A local criterion that scores neighbors pairwise in `[0, 1]`.
pub trait PairCriterion: LocalCriterion {
    /// Score of `q` from `p`'s perspective.
    fn eval(&self, c: &Configuration, p: NodeId, q: NodeId) -> f64;
}

/// Default node aggregation: mean score over `p`'s neighbor view, 0 when empty.
pub fn mean_over_view<C: PairCriterion + ?Sized>(crit: &C, c: &Configuration, p: NodeId) -> NodeValue {
    let view = c.neighbors(p);
    if view.is_empty() {
        return NodeValue::Scalar(0.0);
    }
    let sum: f64 = view.iter().map(|q| crit.eval(c, p, *q)).sum();
    NodeValue::Scalar(sum / view.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GlobalRepr {
    Sum(f64),
    Pointwise(BTreeMap<NodeId, NodeValue>),
    Composite(Vec<GlobalValue>),
}

/// Global value together with the node domain it was computed over.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalValue {
    pub domain: BTreeSet<NodeId>,
    pub repr: GlobalRepr,
}

impl GlobalValue {
    pub fn summary(&self) -> f64 {
        match &self.repr {
            GlobalRepr::Sum(x) => *x,
            GlobalRepr::Pointwise(m) => m.values().map(NodeValue::summary).sum(),
            GlobalRepr::Composite(parts) => parts.iter().map(GlobalValue::summary).sum(),
        }
    }
}

/// What the monitors consume: node values, global values and both orders.
pub trait Criterion: Send + Sync {
    fn name(&self) -> String;

    fn footprint(&self) -> BTreeSet<StateField>;

    fn node_value(&self, c: &Configuration, p: NodeId) -> NodeValue;

    fn node_le(&self, a: &NodeValue, b: &NodeValue) -> bool;

    /// Global value over `domain` (all active nodes when `None`).
    fn global(&self, c: &Configuration, domain: Option<&BTreeSet<NodeId>>) -> GlobalValue;

    fn global_le(&self, a: &GlobalValue, b: &GlobalValue) -> bool;

    fn global_lt(&self, a: &GlobalValue, b: &GlobalValue) -> bool {
        self.global_le(a, b) && !self.global_le(b, a)
    }

    fn node_lt(&self, a: &NodeValue, b: &NodeValue) -> bool {
        self.node_le(a, b) && !self.node_le(b, a)
    }
}

fn domain_of(c: &Configuration, domain: Option<&BTreeSet<NodeId>>) -> BTreeSet<NodeId> {
    match domain {
        Some(d) => d.iter().filter(|p| c.is_active(**p)).copied().collect(),
        None => c.active_set(),
    }
}

/// A local criterion lifted to configurations.
#[derive(Debug, Clone)]
pub struct GlobalCriterion {
    pub base: Arc<dyn LocalCriterion>,
}

impl GlobalCriterion {
    pub fn new(base: Arc<dyn LocalCriterion>) -> Self {
        GlobalCriterion { base }
    }
}

impl Criterion for GlobalCriterion {
    fn name(&self) -> String {
        self.base.name().to_string()
    }

    fn footprint(&self) -> BTreeSet<StateField> {
        self.base.footprint()
    }

    fn node_value(&self, c: &Configuration, p: NodeId) -> NodeValue {
        self.base.aggregate_node(c, p)
    }

    fn node_le(&self, a: &NodeValue, b: &NodeValue) -> bool {
        self.base.le(a, b)
    }

    fn global(&self, c: &Configuration, domain: Option<&BTreeSet<NodeId>>) -> GlobalValue {
        let domain = domain_of(c, domain);
        let repr = match self.base.aggregation() {
            Aggregation::Sum => {
                GlobalRepr::Sum(domain.iter().map(|p| self.base.aggregate_node(c, *p).as_scalar().unwrap_or(0.0)).sum())
            }
            Aggregation::Pointwise => {
                GlobalRepr::Pointwise(domain.iter().map(|p| (*p, self.base.aggregate_node(c, *p))).collect())
            }
        };
        GlobalValue { domain, repr }
    }

    fn global_le(&self, a: &GlobalValue, b: &GlobalValue) -> bool {
        match (&a.repr, &b.repr) {
            (GlobalRepr::Sum(x), GlobalRepr::Sum(y)) => {
                let n = a.domain.len().max(b.domain.len()).max(1) as f64;
                *x <= *y + SCORE_EPS * n
            }
            (GlobalRepr::Pointwise(x), GlobalRepr::Pointwise(y)) => {
                x.iter().all(|(p, v)| y.get(p).is_none_or(|w| self.base.le(v, w)))
            }
            _ => false,
        }
    }
}

/// `aggregate_global`: sum (or pointwise collection) over active nodes.
pub fn aggregate_global(gc: &dyn Criterion, c: &Configuration) -> GlobalValue {
    gc.global(c, None)
}

/// Criteria are independent when the sub-configurations they span differ.
pub fn check_independence(a: &dyn Criterion, b: &dyn Criterion) -> bool {
    a.footprint() != b.footprint()
}

/// Monotonic composition: strictly better iff one part is strictly better
/// and no part is worse.
#[derive(Debug, Clone)]
pub struct CompositeCriterion {
    pub parts: Vec<GlobalCriterion>,
}

pub fn compose_monotonic(parts: Vec<GlobalCriterion>) -> Result<CompositeCriterion, CriterionError> {
    for (i, a) in parts.iter().enumerate() {
        for b in &parts[i + 1..] {
            if !check_independence(a, b) {
                return Err(CriterionError::NotIndependent(a.name(), b.name()));
            }
        }
    }
    Ok(CompositeCriterion { parts })
}

impl Criterion for CompositeCriterion {
    fn name(&self) -> String {
        self.parts.iter().map(|p| p.name()).collect::<Vec<_>>().join("*")
    }

    fn footprint(&self) -> BTreeSet<StateField> {
        self.parts.iter().flat_map(|p| p.footprint()).collect()
    }

    fn node_value(&self, c: &Configuration, p: NodeId) -> NodeValue {
        NodeValue::Tuple(self.parts.iter().map(|g| g.node_value(c, p)).collect())
    }

    fn node_le(&self, a: &NodeValue, b: &NodeValue) -> bool {
        match (a, b) {
            (NodeValue::Tuple(x), NodeValue::Tuple(y)) if x.len() == self.parts.len() && y.len() == x.len() => {
                self.parts.iter().zip(x.iter().zip(y)).all(|(g, (u, v))| g.node_le(u, v))
            }
            _ => false,
        }
    }

    fn global(&self, c: &Configuration, domain: Option<&BTreeSet<NodeId>>) -> GlobalValue {
        let d = domain_of(c, domain);
        GlobalValue {
            repr: GlobalRepr::Composite(self.parts.iter().map(|g| g.global(c, Some(&d))).collect()),
            domain: d,
        }
    }

    fn global_le(&self, a: &GlobalValue, b: &GlobalValue) -> bool {
        match (&a.repr, &b.repr) {
            (GlobalRepr::Composite(x), GlobalRepr::Composite(y))
                if x.len() == self.parts.len() && y.len() == x.len() =>
            {
                self.parts.iter().zip(x.iter().zip(y)).all(|(g, (u, v))| g.global_le(u, v))
            }
            _ => false,
        }
    }
}

/// Counts of order-law violations over a sample of values.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderLawReport {
    pub reflexivity: usize,
    pub antisymmetry: usize,
    pub transitivity: usize,
}

impl OrderLawReport {
    pub fn is_partial_order(&self) -> bool {
        self.reflexivity == 0 && self.antisymmetry == 0 && self.transitivity == 0
    }
}

/// Exhaustively checks reflexivity, antisymmetry and transitivity of `le`
/// over `values`. Violations are counted, not repaired.
pub fn check_order_laws<T: PartialEq>(values: &[T], le: impl Fn(&T, &T) -> bool) -> OrderLawReport {
    let mut r = OrderLawReport::default();
    for a in values {
        if !le(a, a) {
            r.reflexivity += 1;
        }
        for b in values {
            if le(a, b) && le(b, a) && a != b {
                r.antisymmetry += 1;
            }
            if le(a, b) {
                for c in values {
                    if le(b, c) && !le(a, c) {
                        r.transitivity += 1;
                    }
                }
            }
        }
    }
    r
}
