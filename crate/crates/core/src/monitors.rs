//! Trace monitors: p-stability, safety, weak liveness, liveness, kernel
//! preservation, and the resulting self-organization class.
//!
//! Traces are finite, so liveness-type properties are three-valued: they
//! hold when a witness fragment exists and are pending at the horizon
//! otherwise, never violated.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::criteria::kernel::data_holders;
use crate::criteria::{ker_d, ker_t_conf, Criterion, GlobalValue};
use crate::model::{apply_action, project_kernel, Configuration, Fragment, NodeId, ProtocolModel, Trace};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MonitorError {
    #[error("protocol {0} cannot enumerate its enabled actions")]
    EnumerationUnavailable(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    Safety,
    WeakLiveness,
    Liveness,
    KernelPreservation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Holds,
    Violated,
    PendingAtHorizon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub fragments: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node: Option<NodeId>,
    pub values: Vec<f64>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyResult {
    pub property: Property,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

impl PropertyResult {
    fn holds(property: Property) -> Self {
        PropertyResult { property, status: Status::Holds, witness: None, flags: Vec::new() }
    }

    pub fn is_holds(&self) -> bool {
        self.status == Status::Holds
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Class {
    None,
    Weak,
    #[serde(rename = "self")]
    SelfOrganizing,
    Strong,
}

impl std::str::FromStr for Class {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(Class::None),
            "weak" => Ok(Class::Weak),
            "self" => Ok(Class::SelfOrganizing),
            "strong" => Ok(Class::Strong),
            other => Err(format!("unknown class {other:?}")),
        }
    }
}

impl std::fmt::Display for Class {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Class::None => "none",
            Class::Weak => "weak",
            Class::SelfOrganizing => "self",
            Class::Strong => "strong",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub class: Class,
    pub criterion: String,
    pub results: Vec<PropertyResult>,
    /// Properties left pending at the horizon.
    #[serde(default)]
    pub pending: Vec<Property>,
}

impl Verdict {
    pub fn result(&self, p: Property) -> &PropertyResult {
        self.results.iter().find(|r| r.property == p).expect("all four properties are reported")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Topological,
    Data,
}

/// No enabled action of `p` yields a node value strictly above the current one.
pub fn is_p_stable(
    c: &Configuration,
    p: NodeId,
    crit: &dyn Criterion,
    model: &dyn ProtocolModel,
) -> Result<bool, MonitorError> {
    if !model.can_enumerate() {
        return Err(MonitorError::EnumerationUnavailable(model.name().to_string()));
    }
    let now = crit.node_value(c, p);
    for a in model.enabled(c, p) {
        let Ok(next) = apply_action(c, &a) else { continue };
        if !crit.node_le(&crit.node_value(&next, p), &now) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// First active node that is not p-stable, if any.
pub fn first_unstable(
    c: &Configuration,
    crit: &dyn Criterion,
    model: &dyn ProtocolModel,
) -> Result<Option<NodeId>, MonitorError> {
    for p in c.active() {
        if !is_p_stable(c, p, crit, model)? {
            return Ok(Some(p));
        }
    }
    Ok(None)
}

pub fn all_p_stable(c: &Configuration, crit: &dyn Criterion, model: &dyn ProtocolModel) -> Result<bool, MonitorError> {
    Ok(first_unstable(c, crit, model)?.is_none())
}

fn summaries(a: &GlobalValue, b: &GlobalValue) -> Vec<f64> {
    vec![a.summary(), b.summary()]
}

/// Global values of `a` and `b` over their common active domain.
fn common(crit: &dyn Criterion, a: &Configuration, b: &Configuration) -> (GlobalValue, GlobalValue) {
    let dom: BTreeSet<NodeId> = a.active().filter(|p| b.is_active(*p)).collect();
    (crit.global(a, Some(&dom)), crit.global(b, Some(&dom)))
}

/// Every fragment ends at least as well as it began.
pub fn check_safety(t: &Trace, crit: &dyn Criterion) -> PropertyResult {
    for f in t.fragments() {
        if f.is_singleton() {
            continue;
        }
        let (b, e) = (crit.global(t.begin(&f), None), crit.global(t.end(&f), None));
        if !crit.global_le(&b, &e) {
            return PropertyResult {
                property: Property::Safety,
                status: Status::Violated,
                witness: Some(Witness {
                    fragments: vec![f.index],
                    node: None,
                    values: summaries(&b, &e),
                    note: "global value at fragment end is not above its begin".into(),
                }),
                flags: Vec::new(),
            };
        }
    }
    PropertyResult::holds(Property::Safety)
}

/// Stability disjunct: `begin(f)` all p-stable, or `end(f)` for the final
/// fragment, whose end stands for the rest of the execution.
fn stable_at(
    t: &Trace,
    f: &Fragment,
    last: bool,
    crit: &dyn Criterion,
    model: &dyn ProtocolModel,
) -> Result<bool, MonitorError> {
    if all_p_stable(t.begin(f), crit, model)? {
        return Ok(true);
    }
    Ok(last && all_p_stable(t.end(f), crit, model)?)
}

fn pending(property: Property, unsatisfied: Vec<usize>, note: &str) -> PropertyResult {
    PropertyResult {
        property,
        status: Status::PendingAtHorizon,
        witness: Some(Witness { fragments: unsatisfied, node: None, values: Vec::new(), note: note.into() }),
        flags: Vec::new(),
    }
}

/// For every fragment some later one strictly improves from begin to end,
/// or begins all p-stable.
pub fn check_weak_liveness(
    t: &Trace,
    crit: &dyn Criterion,
    model: &dyn ProtocolModel,
) -> Result<PropertyResult, MonitorError> {
    let frags = t.fragments();
    let n = frags.len();
    for (k, f) in frags.iter().enumerate().rev() {
        let improving = crit.global_lt(&crit.global(t.begin(f), None), &crit.global(t.end(f), None));
        if improving || stable_at(t, f, k + 1 == n, crit, model)? {
            if k + 1 == n {
                return Ok(PropertyResult::holds(Property::WeakLiveness));
            }
            return Ok(pending(
                Property::WeakLiveness,
                (k + 1..n).collect(),
                "no improving or p-stable fragment after these",
            ));
        }
    }
    if n == 0 {
        return Ok(PropertyResult::holds(Property::WeakLiveness));
    }
    Ok(pending(Property::WeakLiveness, (0..n).collect(), "no improving or p-stable fragment"))
}

/// For every fragment `i` some `j ≥ i` ends strictly above where `i` ended
/// (on the common domain), or begins all p-stable.
pub fn check_liveness(
    t: &Trace,
    crit: &dyn Criterion,
    model: &dyn ProtocolModel,
) -> Result<PropertyResult, MonitorError> {
    let frags = t.fragments();
    let n = frags.len();
    if n == 0 {
        return Ok(PropertyResult::holds(Property::Liveness));
    }
    // stable_from[i]: some fragment at or after i begins all p-stable
    let mut stable_from = vec![false; n + 1];
    for j in (0..n).rev() {
        stable_from[j] = stable_from[j + 1] || stable_at(t, &frags[j], j + 1 == n, crit, model)?;
    }
    let mut unsatisfied = Vec::new();
    for i in 0..n {
        if stable_from[i] {
            continue;
        }
        let end_i = t.end(&frags[i]);
        let mut found = false;
        for f in &frags[i + 1..] {
            let end_j = t.end(f);
            // ids are never reused, so the common domain only shrinks
            if !end_i.active().any(|p| end_j.is_active(p)) {
                break;
            }
            let (a, b) = common(crit, end_i, end_j);
            if crit.global_lt(&a, &b) {
                found = true;
                break;
            }
        }
        if !found {
            unsatisfied.push(i);
        }
    }
    if unsatisfied.is_empty() {
        return Ok(PropertyResult::holds(Property::Liveness));
    }
    Ok(pending(Property::Liveness, unsatisfied, "no later fragment ends higher or begins p-stable"))
}

/// Kernel node set across the boundary `c1 → c2`.
pub fn kernel_nodes(c1: &Configuration, c2: &Configuration, kind: KernelKind) -> BTreeSet<NodeId> {
    let nodes = match kind {
        KernelKind::Topological => ker_t_conf(c1, c2),
        KernelKind::Data => {
            let k = ker_d(c1, c2);
            data_holders(c1, &k).intersection(&data_holders(c2, &k)).copied().collect()
        }
    };
    nodes.into_iter().filter(|p| c1.is_active(*p) && c2.is_active(*p)).collect()
}

/// Across every churn boundary, the kernel's value does not drop.
pub fn check_kernel_preservation(t: &Trace, crit: &dyn Criterion, kind: KernelKind) -> PropertyResult {
    let frags = t.fragments();
    let mut flags = Vec::new();
    for (i, pair) in frags.windows(2).enumerate() {
        let (c1, c2) = (t.end(&pair[0]), t.begin(&pair[1]));
        let k = kernel_nodes(c1, c2, kind);
        if k.is_empty() {
            flags.push(format!("empty kernel at boundary {i}"));
            continue;
        }
        let (p1, p2) = (
            project_kernel(c1, &k).expect("kernel nodes are active"),
            project_kernel(c2, &k).expect("kernel nodes are active"),
        );
        let (a, b) = (crit.global(&p1, None), crit.global(&p2, None));
        if !crit.global_le(&a, &b) {
            return PropertyResult {
                property: Property::KernelPreservation,
                status: Status::Violated,
                witness: Some(Witness {
                    fragments: vec![pair[0].index, pair[1].index],
                    node: None,
                    values: summaries(&a, &b),
                    note: format!("kernel of {} nodes lost value across the boundary", k.len()),
                }),
                flags,
            };
        }
    }
    PropertyResult { flags, ..PropertyResult::holds(Property::KernelPreservation) }
}

/// Runs the four checks and derives the class: Weak needs safety and weak
/// liveness, Self additionally liveness, Strong additionally kernel
/// preservation.
pub fn classify(
    t: &Trace,
    crit: &dyn Criterion,
    model: &dyn ProtocolModel,
    kind: KernelKind,
) -> Result<Verdict, MonitorError> {
    let results = vec![
        check_safety(t, crit),
        check_weak_liveness(t, crit, model)?,
        check_liveness(t, crit, model)?,
        check_kernel_preservation(t, crit, kind),
    ];
    let ok = |p: Property| results.iter().any(|r| r.property == p && r.is_holds());
    let weak = ok(Property::Safety) && ok(Property::WeakLiveness);
    let selforg = weak && ok(Property::Liveness);
    let class = if selforg && ok(Property::KernelPreservation) {
        Class::Strong
    } else if selforg {
        Class::SelfOrganizing
    } else if weak {
        Class::Weak
    } else {
        Class::None
    };
    let pending = results.iter().filter(|r| r.status == Status::PendingAtHorizon).map(|r| r.property).collect();
    Ok(Verdict { class, criterion: crit.name(), results, pending })
}

/// The class never outruns the obligations it implies.
pub fn hierarchy_consistent(v: &Verdict) -> bool {
    let ok = |p: Property| v.result(p).is_holds();
    let needed: &[Property] = match v.class {
        Class::None => &[],
        Class::Weak => &[Property::Safety, Property::WeakLiveness],
        Class::SelfOrganizing => &[Property::Safety, Property::WeakLiveness, Property::Liveness],
        Class::Strong => &[Property::Safety, Property::WeakLiveness, Property::Liveness, Property::KernelPreservation],
    };
    needed.iter().all(|p| ok(*p))
}

/// Re-evaluates a violation witness on the trace and reports whether the
/// offending comparison reproduces.
pub fn replay_witness(t: &Trace, crit: &dyn Criterion, r: &PropertyResult, kind: KernelKind) -> bool {
    let Some(w) = &r.witness else { return false };
    if r.status != Status::Violated {
        return false;
    }
    let frags = t.fragments();
    match (r.property, w.fragments.as_slice()) {
        (Property::Safety, [i]) => {
            let f = &frags[*i];
            !crit.global_le(&crit.global(t.begin(f), None), &crit.global(t.end(f), None))
        }
        (Property::KernelPreservation, [i, j]) => {
            let (c1, c2) = (t.end(&frags[*i]), t.begin(&frags[*j]));
            let k = kernel_nodes(c1, c2, kind);
            let (p1, p2) = (project_kernel(c1, &k).unwrap(), project_kernel(c2, &k).unwrap());
            !crit.global_le(&crit.global(&p1, None), &crit.global(&p2, None))
        }
        _ => false,
    }
}

/// One row per fragment for plotting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FragmentRow {
    pub fragment_index: usize,
    pub begin_gamma: f64,
    pub end_gamma: f64,
    /// Kernel size across the boundary before this fragment; the node count
    /// for the first fragment.
    pub kernel_size: usize,
    /// C/D actions between the previous fragment and this one.
    pub churn_events: usize,
}

pub fn fragment_series(t: &Trace, crit: &dyn Criterion, kind: KernelKind) -> Vec<FragmentRow> {
    let frags = t.fragments();
    let mut rows = Vec::with_capacity(frags.len());
    for (i, f) in frags.iter().enumerate() {
        let (kernel_size, prev_end) = if i == 0 {
            (t.begin(f).len(), 0)
        } else {
            let prev = &frags[i - 1];
            (kernel_nodes(t.end(prev), t.begin(f), kind).len(), prev.end)
        };
        rows.push(FragmentRow {
            fragment_index: f.index,
            begin_gamma: crit.global(t.begin(f), None).summary(),
            end_gamma: crit.global(t.end(f), None).summary(),
            kernel_size,
            churn_events: t.actions[prev_end..f.start].iter().filter(|a| a.kind.is_dynamic()).count(),
        });
    }
    rows
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::criteria::proximity::ProximityCriterion;
    use crate::criteria::GlobalCriterion;
    use crate::lsa::{lsa_configuration, LsaModel, LsaState};
    use crate::model::{Action, NodeState, Step};

    fn ids(v: &[u64]) -> BTreeSet<NodeId> {
        v.iter().map(|x| NodeId(*x)).collect()
    }

    fn setup() -> (GlobalCriterion, LsaModel, Configuration) {
        let gc = GlobalCriterion::new(Arc::new(ProximityCriterion));
        let model = LsaModel { criterion: Arc::new(ProximityCriterion) };
        let c = lsa_configuration(&[
            (NodeId(1), vec![0, 0], ids(&[2])),
            (NodeId(2), vec![10, 0], ids(&[3])),
            (NodeId(3), vec![1, 0], ids(&[2])),
        ]);
        (gc, model, c)
    }

    #[test]
    fn no_enabled_actions_is_stable() {
        let (gc, model, c) = setup();
        assert_eq!(is_p_stable(&c, NodeId(2), &gc, &model), Ok(true));
    }

    #[test]
    fn improving_two_hop_is_not_stable() {
        let (gc, model, c) = setup();
        assert_eq!(is_p_stable(&c, NodeId(1), &gc, &model), Ok(false));
    }

    #[test]
    fn identity_trace_is_safe() {
        let (gc, _, c) = setup();
        let mut t = Trace::new(c);
        for _ in 0..3 {
            t.push(Action::noop(NodeId(1))).unwrap();
        }
        assert!(check_safety(&t, &gc).is_holds());
    }

    #[test]
    fn discarding_a_better_neighbor_violates_safety() {
        let (gc, _, c) = setup();
        let mut t = Trace::new(c);
        t.push(Action::step(NodeId(3), Step { neighbors: Some(ids(&[])), ..Step::default() })).unwrap();
        let r = check_safety(&t, &gc);
        assert_eq!(r.status, Status::Violated);
        assert!(replay_witness(&t, &gc, &r, KernelKind::Topological));
    }

    #[test]
    fn lsa_trace_is_self_organizing_without_churn() {
        let (gc, model, c) = setup();
        let mut t = Trace::new(c);
        loop {
            let next = t.last().active().find_map(|p| model.enabled(t.last(), p).into_iter().next());
            let Some(a) = next else { break };
            t.push(a).unwrap();
        }
        let v = classify(&t, &gc, &model, KernelKind::Topological).unwrap();
        assert_eq!(v.class, Class::Strong);
        assert!(hierarchy_consistent(&v));
    }

    #[test]
    fn reset_on_churn_violates_kernel_preservation() {
        let (gc, _, c0) = setup();
        let fresh = NodeState::Lsa(LsaState::new(vec![50, 50]));
        let connect = Action::connect(NodeId(4), fresh, ids(&[]), Default::default());
        // a variant that re-initializes node 3's position when churn happens
        let mut c1 = apply_action(&c0, &connect).unwrap();
        c1.nodes.insert(NodeId(3), Arc::new(NodeState::Lsa(LsaState::new(vec![40, 0]))));
        let t = Trace { configurations: vec![c0, c1], actions: vec![connect] };
        let r = check_kernel_preservation(&t, &gc, KernelKind::Topological);
        assert_eq!(r.status, Status::Violated);
        assert!(replay_witness(&t, &gc, &r, KernelKind::Topological));
    }

    #[test]
    fn churn_free_trace_preserves_kernel() {
        let (gc, _, c) = setup();
        assert!(check_kernel_preservation(&Trace::new(c), &gc, KernelKind::Topological).is_holds());
    }

    #[test]
    fn liveness_pending_when_progress_is_erased() {
        let (gc, model, c) = setup();
        let mut t = Trace::new(c);
        // node 1 could improve but never does; churn keeps splitting the trace
        for k in 10..13 {
            let fresh = NodeState::Lsa(LsaState::new(vec![k * 100, 0]));
            t.push(Action::connect(NodeId(k as u64), fresh, ids(&[]), Default::default())).unwrap();
            t.push(Action::noop(NodeId(2))).unwrap();
        }
        let v = classify(&t, &gc, &model, KernelKind::Topological).unwrap();
        assert_eq!(v.result(Property::Liveness).status, Status::PendingAtHorizon);
        assert_eq!(v.result(Property::WeakLiveness).status, Status::PendingAtHorizon);
        assert_eq!(v.class, Class::None);
        assert!(hierarchy_consistent(&v));
    }
}
