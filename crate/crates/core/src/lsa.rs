//! Greedy local self-organization: a node swaps a neighbor for a strictly
//! better neighbor-of-neighbor under its local criterion.

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::criteria::{PairCriterion, SCORE_EPS};
use crate::model::{apply_action, Action, Configuration, NodeId, NodeState, ProtocolModel, Step};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LsaState {
    /// Integer grid position read by the proximity criterion.
    pub position: Vec<i64>,
    pub criterion: String,
}

impl LsaState {
    pub fn new(position: Vec<i64>) -> Self {
        LsaState { position, criterion: "proximity".into() }
    }
}

/// One accepted replacement with the scores that justified it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replacement {
    pub actor: NodeId,
    pub dropped: NodeId,
    pub added: NodeId,
    pub old_score: f64,
    pub new_score: f64,
}

/// Rule R: the neighbor `q` to drop and the 2-hop node `r` to add, if any
/// `r ∈ N(q) \ N(p)` scores strictly above `q`. Among candidates, the pair
/// with the largest gain wins, then the lowest `q`; `r` is the best-scoring
/// member of `N(q)` with ties to the lowest id.
pub fn lsa_rule_r(c: &Configuration, p: NodeId, crit: &dyn PairCriterion) -> Option<(NodeId, NodeId)> {
    let view = c.neighbors(p);
    let mut best: Option<(f64, NodeId, NodeId)> = None;
    for q in view {
        let sq = crit.eval(c, p, *q);
        let mut r_best: Option<(f64, NodeId)> = None;
        for r in c.neighbors(*q) {
            if *r == p || view.contains(r) {
                continue;
            }
            let sr = crit.eval(c, p, *r);
            if r_best.is_none_or(|(s, _)| sr > s + SCORE_EPS) {
                r_best = Some((sr, *r));
            }
        }
        let Some((sr, r)) = r_best else { continue };
        if sr <= sq + SCORE_EPS {
            continue;
        }
        let gain = sr - sq;
        if best.is_none_or(|(g, _, _)| gain > g + SCORE_EPS) {
            best = Some((gain, *q, r));
        }
    }
    best.map(|(_, q, r)| (q, r))
}

fn replace_action(c: &Configuration, p: NodeId, q: NodeId, r: NodeId) -> Action {
    let mut view = c.neighbors(p).clone();
    view.remove(&q);
    view.insert(r);
    Action::step(p, Step { neighbors: Some(view), ..Step::default() })
}

/// Applies rule R once per node in `order`, skipping inactive and stable
/// nodes.
pub fn run_lsa_round(
    c: &Configuration,
    order: &[NodeId],
    crit: &dyn PairCriterion,
) -> (Configuration, Vec<Action>, Vec<Replacement>) {
    let mut c = c.clone();
    let mut actions = Vec::new();
    let mut log = Vec::new();
    for p in order {
        if !c.is_active(*p) {
            continue;
        }
        if let Some((q, r)) = lsa_rule_r(&c, *p, crit) {
            let a = replace_action(&c, *p, q, r);
            log.push(Replacement {
                actor: *p,
                dropped: q,
                added: r,
                old_score: crit.eval(&c, *p, q),
                new_score: crit.eval(&c, *p, r),
            });
            c = apply_action(&c, &a).expect("rule R produces a valid step");
            actions.push(a);
        }
    }
    (c, actions, log)
}

/// LSA as a protocol: the only action of a node is its rule R step.
#[derive(Debug, Clone)]
pub struct LsaModel {
    pub criterion: Arc<dyn PairCriterion>,
}

impl ProtocolModel for LsaModel {
    fn name(&self) -> &str {
        "lsa"
    }

    fn enabled(&self, c: &Configuration, p: NodeId) -> Vec<Action> {
        lsa_rule_r(c, p, self.criterion.as_ref()).map(|(q, r)| replace_action(c, p, q, r)).into_iter().collect()
    }
}

/// LSA configuration from positions and directed views.
pub fn lsa_configuration(nodes: &[(NodeId, Vec<i64>, BTreeSet<NodeId>)]) -> Configuration {
    let mut c = Configuration::new("lsa");
    for (p, pos, view) in nodes {
        c.nodes.insert(*p, Arc::new(NodeState::Lsa(LsaState::new(pos.clone()))));
        c.graph.insert(*p, Arc::new(view.clone()));
    }
    c
}
