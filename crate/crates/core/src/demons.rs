//! Churn demons: generators and validators of connect/disconnect schedules,
//! and the adversarial demon that re-seeds the system whenever it is one
//! action away from global stability.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::criteria::{ker_t_conf, Criterion};
use crate::model::{apply_action, Action, ActionKind, Configuration, NodeId, Payload, ProtocolModel, Trace};
use crate::monitors::{all_p_stable, MonitorError};

/// Above this many active nodes the generator only disconnects.
pub const MAX_ACTIVE: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DemonClass {
    Bounded,
    Finite,
    KernelBased,
    Arbitrary,
    Adversarial,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemonSpec {
    pub class: DemonClass,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel_min_size: Option<usize>,
    /// Number of C/D events for the classes without a bound.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub events: Option<usize>,
    pub rng_seed: u64,
    pub horizon: u64,
}

impl DemonSpec {
    pub fn new(class: DemonClass, rng_seed: u64, horizon: u64) -> Self {
        DemonSpec { class, bound: None, kernel_min_size: None, events: None, rng_seed, horizon }
    }

    pub fn bounded(bound: usize, rng_seed: u64, horizon: u64) -> Self {
        DemonSpec { bound: Some(bound), ..DemonSpec::new(DemonClass::Bounded, rng_seed, horizon) }
    }

    pub fn kernel_based(kernel_min_size: usize, rng_seed: u64, horizon: u64) -> Self {
        DemonSpec {
            kernel_min_size: Some(kernel_min_size),
            ..DemonSpec::new(DemonClass::KernelBased, rng_seed, horizon)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DemonError {
    #[error("infeasible demon spec: {0}")]
    InfeasibleSpec(String),
    #[error("horizon exhausted after {0} events")]
    HorizonExhausted(u64),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChurnEvent {
    /// Engine event index at which the action becomes due.
    pub index: u64,
    pub kind: ActionKind,
    pub target: NodeId,
    /// The target is a new node.
    #[serde(default)]
    pub fresh: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChurnSchedule {
    pub events: Vec<ChurnEvent>,
}

impl ChurnSchedule {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Schedule as action records; connects carry no payload until the
    /// engine builds the joining node's state.
    pub fn to_actions(&self) -> Vec<Action> {
        self.events
            .iter()
            .map(|e| Action {
                seq: e.index,
                kind: e.kind,
                actor: e.target,
                payload: if e.kind == ActionKind::Disconnect { Payload::Leave } else { Payload::None },
            })
            .collect()
    }

    pub fn from_actions(actions: &[Action]) -> Result<Self, DemonError> {
        let mut seen = BTreeSet::new();
        let mut events = Vec::new();
        for a in actions {
            if !a.kind.is_dynamic() {
                return Err(DemonError::InfeasibleSpec(format!("schedule record {} is not a C/D action", a.seq)));
            }
            let fresh = a.kind == ActionKind::Connect && seen.insert(a.actor);
            events.push(ChurnEvent { index: a.seq, kind: a.kind, target: a.actor, fresh });
        }
        Ok(ChurnSchedule { events })
    }
}

fn validate_spec(spec: &DemonSpec, initial_nodes: usize) -> Result<(), DemonError> {
    if initial_nodes == 0 {
        return Err(DemonError::InfeasibleSpec("at least one initial node is required".into()));
    }
    match spec.class {
        DemonClass::Bounded if spec.bound.is_none() => {
            Err(DemonError::InfeasibleSpec("bounded demon needs a bound".into()))
        }
        DemonClass::KernelBased => match spec.kernel_min_size {
            None | Some(0) => Err(DemonError::InfeasibleSpec("kernel_min_size must be at least 1".into())),
            Some(k) if k > initial_nodes => {
                Err(DemonError::InfeasibleSpec(format!("kernel_min_size {k} exceeds {initial_nodes} initial nodes")))
            }
            _ => Ok(()),
        },
        _ => Ok(()),
    }
}

/// Draws a churn schedule for `initial_nodes` nodes with ids `0..n`. Nodes
/// in `pinned` are never disconnected. Fresh ids continue after the initial
/// ones.
pub fn generate_schedule(
    spec: &DemonSpec,
    initial_nodes: usize,
    pinned: &BTreeSet<NodeId>,
) -> Result<ChurnSchedule, DemonError> {
    validate_spec(spec, initial_nodes)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let count = match spec.class {
        DemonClass::Bounded => spec.bound.unwrap_or(0),
        DemonClass::Finite => spec.events.unwrap_or_else(|| rng.gen_range(1..=8)),
        DemonClass::KernelBased => spec.events.unwrap_or(6),
        DemonClass::Arbitrary => spec.events.unwrap_or((spec.horizon / 20) as usize),
        DemonClass::Adversarial => 0,
    };
    if count == 0 || spec.horizon == 0 {
        return Ok(ChurnSchedule::default());
    }
    // churn-bearing prefix; the rest of the horizon lets the protocol settle
    let window = match spec.class {
        DemonClass::Arbitrary => spec.horizon,
        _ => (spec.horizon * 3 / 5).max(1),
    };
    let mut indices: Vec<u64> = (0..count).map(|_| rng.gen_range(0..window)).collect();
    indices.sort_unstable();

    let mut active: BTreeSet<NodeId> = (0..initial_nodes as u64).map(NodeId).collect();
    let mut next_id = initial_nodes as u64;
    let keep = spec.kernel_min_size.unwrap_or(1).max(1);
    let mut events = Vec::with_capacity(count);
    for index in indices {
        let protected: BTreeSet<NodeId> = if spec.class == DemonClass::KernelBased {
            let pool: Vec<NodeId> = active.iter().copied().collect();
            pool.choose_multiple(&mut rng, keep.min(pool.len())).copied().collect()
        } else {
            BTreeSet::new()
        };
        let leavers: Vec<NodeId> =
            active.iter().filter(|p| !pinned.contains(p) && !protected.contains(p)).copied().collect();
        let can_leave = !leavers.is_empty() && active.len() > keep;
        let leave = can_leave && (active.len() >= MAX_ACTIVE || rng.gen_bool(0.5));
        if leave {
            let target = *leavers.choose(&mut rng).expect("non-empty");
            active.remove(&target);
            events.push(ChurnEvent { index, kind: ActionKind::Disconnect, target, fresh: false });
        } else {
            let target = NodeId(next_id);
            next_id += 1;
            active.insert(target);
            events.push(ChurnEvent { index, kind: ActionKind::Connect, target, fresh: true });
        }
    }
    Ok(ChurnSchedule { events })
}

/// Class predicate over a trace produced under the schedule.
pub fn validate_schedule(spec: &DemonSpec, s: &ChurnSchedule, t: &Trace) -> bool {
    let churn = t.dynamic_count();
    match spec.class {
        DemonClass::Bounded => churn <= spec.bound.unwrap_or(0) && s.len() <= spec.bound.unwrap_or(0),
        DemonClass::Finite | DemonClass::Arbitrary | DemonClass::Adversarial => true,
        DemonClass::KernelBased => {
            let frags = t.fragments();
            frags.windows(2).all(|w| !ker_t_conf(t.end(&w[0]), t.begin(&w[1])).is_empty())
        }
    }
}

/// Sum over C/D actions of the fraction of the system that changed,
/// normalized by the trace length.
pub fn churn_rate(t: &Trace) -> f64 {
    if t.actions.is_empty() {
        return 0.0;
    }
    let changed: f64 = t
        .actions
        .iter()
        .enumerate()
        .filter(|(_, a)| a.kind.is_dynamic())
        .map(|(i, _)| 1.0 / t.configurations[i].len().max(1) as f64)
        .sum();
    changed / t.actions.len() as f64
}

/// The adversarial demon: before `a` is applied, if it would leave every
/// node p-stable, answer with a fresh copy of `template` (ids remapped above
/// every id seen so far) followed by the removal of all current nodes.
/// Connects come first, so no intermediate configuration is stable.
pub fn adversarial_response(
    c: &Configuration,
    a: &Action,
    template: &Configuration,
    crit: &dyn Criterion,
    model: &dyn ProtocolModel,
) -> Result<Option<Vec<Action>>, MonitorError> {
    let Ok(next) = apply_action(c, a) else { return Ok(None) };
    if !all_p_stable(&next, crit, model)? {
        return Ok(None);
    }
    let base = c.next_fresh_id().0;
    let remap: BTreeMap<NodeId, NodeId> =
        template.active().enumerate().map(|(i, p)| (p, NodeId(base + i as u64))).collect();
    let mut out = Vec::new();
    for (old, new) in &remap {
        let state = template.nodes[old].as_ref().clone();
        let view: BTreeSet<NodeId> = template.neighbors(*old).iter().filter_map(|q| remap.get(q)).copied().collect();
        out.push(Action::connect(*new, state, view, template.data_of(*old).clone()));
    }
    out.extend(c.active().map(Action::disconnect));
    Ok(Some(out))
}

/// Shares the state allocations of `c` so repeated templates stay cheap.
pub fn template_of(c: &Configuration) -> Configuration {
    let mut t = c.clone();
    t.channels.clear();
    t.nodes = c.nodes.iter().map(|(p, s)| (*p, Arc::clone(s))).collect();
    t
}
