//! CAN: a d-dimensional torus partitioned into axis-aligned zones.
//!
//! Coordinates are dyadic integers in units of `1 / SCALE`, so volumes,
//! splits, merges and abutment are exact. A node normally owns one zone; after
//! a takeover without merge it may own several boxes until it hands one over
//! on the next join.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::model::{Action, Configuration, Message, NodeId, NodeState, ProtocolModel, Step};

pub const SCALE_BITS: u32 = 24;
pub const SCALE: u64 = 1 << SCALE_BITS;

/// Half-open box `[lo, hi)` per dimension, in units of `1 / SCALE`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Zone {
    pub lo: Vec<u64>,
    pub hi: Vec<u64>,
}

impl Zone {
    pub fn full(dims: usize) -> Self {
        Zone { lo: vec![0; dims], hi: vec![SCALE; dims] }
    }

    /// Degenerate box holding a single point.
    pub fn point(p: &[u64]) -> Self {
        Zone { lo: p.to_vec(), hi: p.to_vec() }
    }

    pub fn dims(&self) -> usize {
        self.lo.len()
    }

    pub fn width(&self, k: usize) -> u64 {
        self.hi[k] - self.lo[k]
    }

    pub fn volume(&self) -> u128 {
        (0..self.dims()).map(|k| self.width(k) as u128).product()
    }

    pub fn contains(&self, p: &[u64]) -> bool {
        (0..self.dims()).all(|k| self.lo[k] <= p[k] && p[k] < self.hi[k])
    }

    /// Halves along the longest dimension, lowest index on ties.
    pub fn split(&self) -> (Zone, Zone) {
        let k = (0..self.dims()).fold(0, |best, k| if self.width(k) > self.width(best) { k } else { best });
        let mid = self.lo[k] + self.width(k) / 2;
        let mut lower = self.clone();
        let mut upper = self.clone();
        lower.hi[k] = mid;
        upper.lo[k] = mid;
        (lower, upper)
    }

    /// The box covering both, when they are adjacent along one dimension
    /// and identical in all others.
    pub fn union_box(&self, other: &Zone) -> Option<Zone> {
        let differing: Vec<usize> =
            (0..self.dims()).filter(|k| self.lo[*k] != other.lo[*k] || self.hi[*k] != other.hi[*k]).collect();
        let [k] = differing[..] else { return None };
        let mut out = self.clone();
        if self.hi[k] == other.lo[k] {
            out.hi[k] = other.hi[k];
        } else if other.hi[k] == self.lo[k] {
            out.lo[k] = other.lo[k];
        } else {
            return None;
        }
        Some(out)
    }

    fn overlaps_in(&self, other: &Zone, k: usize) -> bool {
        self.lo[k].max(other.lo[k]) < self.hi[k].min(other.hi[k])
    }

    fn touches_in(&self, other: &Zone, k: usize) -> bool {
        self.hi[k] == other.lo[k]
            || other.hi[k] == self.lo[k]
            || (self.hi[k] == SCALE && other.lo[k] == 0)
            || (other.hi[k] == SCALE && self.lo[k] == 0)
    }

    pub fn interiors_intersect(&self, other: &Zone) -> bool {
        (0..self.dims()).all(|k| self.overlaps_in(other, k))
    }

    /// Overlap in d-1 dimensions and touch (possibly across the wrap) in the
    /// remaining one.
    pub fn abuts(&self, other: &Zone) -> bool {
        let overlapping: Vec<bool> = (0..self.dims()).map(|k| self.overlaps_in(other, k)).collect();
        let missing: Vec<usize> = (0..self.dims()).filter(|k| !overlapping[*k]).collect();
        matches!(missing[..], [k] if self.touches_in(other, k))
    }

    /// Euclidean distance on the unit torus between the closed boxes.
    pub fn torus_distance(&self, other: &Zone) -> f64 {
        let mut sum = 0.0;
        for k in 0..self.dims() {
            let gap = if self.lo[k] <= other.hi[k] && other.lo[k] <= self.hi[k] {
                0
            } else {
                let up = (other.lo[k] + SCALE - self.hi[k]) % SCALE;
                let down = (self.lo[k] + SCALE - other.hi[k]) % SCALE;
                up.min(down)
            };
            let g = gap as f64 / SCALE as f64;
            sum += g * g;
        }
        sum.sqrt()
    }
}

pub fn point_from_unit(x: &[f64]) -> Vec<u64> {
    x.iter().map(|v| ((v.rem_euclid(1.0)) * SCALE as f64).floor() as u64 % SCALE).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "phase", rename_all = "snake_case")]
pub enum CanPhase {
    Pending { bootstrap: Option<NodeId> },
    Requested,
    Joined,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanState {
    pub id_point: Vec<u64>,
    pub zones: Vec<Zone>,
    /// Cached zones of neighbors, kept so a departed neighbor's zone can be
    /// taken over.
    pub neighbors: BTreeMap<NodeId, Vec<Zone>>,
    pub phase: CanPhase,
}

impl CanState {
    pub fn pending(id_point: Vec<u64>, bootstrap: Option<NodeId>) -> Self {
        CanState { id_point, zones: Vec::new(), neighbors: BTreeMap::new(), phase: CanPhase::Pending { bootstrap } }
    }

    pub fn is_joined(&self) -> bool {
        self.phase == CanPhase::Joined
    }

    pub fn volume(&self) -> u128 {
        self.zones.iter().map(Zone::volume).sum()
    }

    /// Zones if granted, otherwise the id point.
    pub fn region(&self) -> Vec<Zone> {
        if self.zones.is_empty() {
            vec![Zone::point(&self.id_point)]
        } else {
            self.zones.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "msg", rename_all = "snake_case")]
pub enum CanMessage {
    JoinRequest { joiner: NodeId, point: Vec<u64> },
    ZoneGrant { zones: Vec<Zone> },
}

pub fn can_state(c: &Configuration, p: NodeId) -> Option<&CanState> {
    match c.state(p)? {
        NodeState::Can(s) => Some(s),
        _ => None,
    }
}

fn joined(c: &Configuration) -> impl Iterator<Item = (NodeId, &CanState)> + '_ {
    c.active().filter_map(move |p| can_state(c, p).filter(|s| s.is_joined()).map(|s| (p, s)))
}

/// Joined node whose zone contains `point`.
pub fn owner_of(c: &Configuration, point: &[u64]) -> Option<NodeId> {
    joined(c).find(|(_, s)| s.zones.iter().any(|z| z.contains(point))).map(|(p, _)| p)
}

fn any_abut(a: &[Zone], b: &[Zone]) -> bool {
    a.iter().any(|x| b.iter().any(|y| x.abuts(y)))
}

/// Zones cached for departed nodes that no live node covers yet.
pub fn orphan_boxes(c: &Configuration) -> Vec<(NodeId, Zone)> {
    let mut seen: BTreeMap<NodeId, Vec<Zone>> = BTreeMap::new();
    for (_, s) in joined(c) {
        for (q, zones) in &s.neighbors {
            if !c.is_active(*q) {
                seen.entry(*q).or_insert_with(|| zones.clone());
            }
        }
    }
    let live: Vec<Zone> = joined(c).flat_map(|(_, s)| s.zones.iter().cloned()).collect();
    seen.into_iter()
        .flat_map(|(q, zs)| zs.into_iter().map(move |z| (q, z)))
        .filter(|(_, z)| !live.iter().any(|l| l.interiors_intersect(z)))
        .collect()
}

/// Who absorbs an orphan box: the smallest single-zone neighbor that merges
/// into a box, else the smallest abutting node.
pub fn orphan_taker(c: &Configuration, orphan: &Zone) -> Option<NodeId> {
    let abutting: Vec<(NodeId, &CanState)> =
        joined(c).filter(|(_, s)| s.zones.iter().any(|z| z.abuts(orphan))).collect();
    let merging = abutting
        .iter()
        .filter(|(_, s)| s.zones.len() == 1 && s.zones[0].union_box(orphan).is_some())
        .min_by_key(|(p, s)| (s.volume(), *p));
    merging.or_else(|| abutting.iter().min_by_key(|(p, s)| (s.volume(), *p))).map(|(p, _)| *p)
}

/// Neighbor cache `p` should hold: abutting joined nodes, plus departed
/// neighbors whose zone is still unclaimed.
pub fn target_neighbors(c: &Configuration, p: NodeId) -> BTreeMap<NodeId, Vec<Zone>> {
    let Some(me) = can_state(c, p) else { return BTreeMap::new() };
    let mut out: BTreeMap<NodeId, Vec<Zone>> = joined(c)
        .filter(|(q, s)| *q != p && any_abut(&me.zones, &s.zones))
        .map(|(q, s)| (q, s.zones.clone()))
        .collect();
    let orphans = orphan_boxes(c);
    for (q, zones) in &me.neighbors {
        if !c.is_active(*q) && orphans.iter().any(|(o, _)| o == q) {
            out.insert(*q, zones.clone());
        }
    }
    out
}

fn with_state(p: NodeId, s: CanState, receive: Option<NodeId>, send: Vec<(NodeId, Message)>) -> Action {
    Action::step(p, Step { receive, state: Some(NodeState::Can(s)), neighbors: None, send })
}

fn handle(c: &Configuration, p: NodeId, me: &CanState, from: NodeId, msg: &CanMessage) -> Action {
    let mut s = me.clone();
    match msg {
        CanMessage::JoinRequest { joiner, point } => {
            if !me.is_joined() || !me.zones.iter().any(|z| z.contains(point)) {
                let send = match owner_of(c, point) {
                    Some(o) if o != p => vec![(o, Message::Can(msg.clone()))],
                    _ => Vec::new(),
                };
                return Action::step(p, Step { receive: Some(from), state: None, neighbors: None, send });
            }
            let idx = s.zones.iter().position(|z| z.contains(point)).expect("checked above");
            let granted = if s.zones.len() > 1 {
                s.zones.remove(idx)
            } else {
                let (lower, upper) = s.zones[0].split();
                if lower.contains(point) {
                    s.zones[0] = upper;
                    lower
                } else {
                    s.zones[0] = lower;
                    upper
                }
            };
            let grant = Message::Can(CanMessage::ZoneGrant { zones: vec![granted] });
            with_state(p, s, Some(from), vec![(*joiner, grant)])
        }
        CanMessage::ZoneGrant { zones } => {
            s.zones.extend(zones.iter().cloned());
            s.phase = CanPhase::Joined;
            with_state(p, s, Some(from), Vec::new())
        }
    }
}

/// CAN maintenance protocol over `dims` dimensions.
#[derive(Debug, Clone, Copy)]
pub struct CanModel {
    pub dims: usize,
}

impl ProtocolModel for CanModel {
    fn name(&self) -> &str {
        "can"
    }

    fn enabled(&self, c: &Configuration, p: NodeId) -> Vec<Action> {
        let Some(me) = can_state(c, p) else { return Vec::new() };
        let mut out = Vec::new();
        for from in c.ready_senders(p) {
            if let Some(Message::Can(m)) = c.head(p, from) {
                out.push(handle(c, p, me, from, m));
            }
        }
        match &me.phase {
            CanPhase::Pending { .. } => {
                let mut s = me.clone();
                if joined(c).next().is_none() {
                    s.zones = vec![Zone::full(self.dims)];
                    s.phase = CanPhase::Joined;
                    out.push(with_state(p, s, None, Vec::new()));
                } else if let Some(owner) = owner_of(c, &me.id_point) {
                    s.phase = CanPhase::Requested;
                    let req = CanMessage::JoinRequest { joiner: p, point: me.id_point.clone() };
                    out.push(with_state(p, s, None, vec![(owner, Message::Can(req))]));
                }
            }
            CanPhase::Requested => {}
            CanPhase::Joined => {
                for (_, orphan) in orphan_boxes(c) {
                    if orphan_taker(c, &orphan) != Some(p) {
                        continue;
                    }
                    let mut s = me.clone();
                    match s.zones.iter().position(|z| z.union_box(&orphan).is_some()).filter(|_| s.zones.len() == 1) {
                        Some(i) => s.zones[i] = s.zones[i].union_box(&orphan).expect("mergeable"),
                        None => s.zones.push(orphan),
                    }
                    out.push(with_state(p, s, None, Vec::new()));
                }
                let target = target_neighbors(c, p);
                let keys: BTreeSet<NodeId> = target.keys().copied().collect();
                if target != me.neighbors || &keys != c.neighbors(p) {
                    let mut s = me.clone();
                    s.neighbors = target;
                    out.push(Action::step(
                        p,
                        Step { receive: None, state: Some(NodeState::Can(s)), neighbors: Some(keys), send: Vec::new() },
                    ));
                }
            }
        }
        out
    }
}

/// Exact partition check over joined nodes: volumes sum to the torus and no
/// two boxes share interior.
pub fn check_partition(c: &Configuration, dims: usize) -> Result<(), String> {
    let boxes: Vec<(NodeId, Zone)> =
        joined(c).flat_map(|(p, s)| s.zones.iter().cloned().map(move |z| (p, z))).collect();
    if boxes.is_empty() {
        return Ok(());
    }
    let total: u128 = boxes.iter().map(|(_, z)| z.volume()).sum();
    let full = Zone::full(dims).volume();
    if total != full {
        return Err(format!("zone volumes sum to {total}, torus is {full}"));
    }
    for (i, (p, a)) in boxes.iter().enumerate() {
        for (q, b) in &boxes[i + 1..] {
            if a.interiors_intersect(b) {
                return Err(format!("zones of {p} and {q} overlap"));
            }
        }
    }
    Ok(())
}

/// Neighbor views equal the abutment relation recomputed from zones.
pub fn check_neighbors(c: &Configuration) -> Result<(), String> {
    let all: Vec<(NodeId, &CanState)> = joined(c).collect();
    for (p, s) in &all {
        let expect: BTreeSet<NodeId> =
            all.iter().filter(|(q, t)| q != p && any_abut(&s.zones, &t.zones)).map(|(q, _)| *q).collect();
        if c.neighbors(*p) != &expect {
            return Err(format!("{p} sees {:?}, abutment gives {:?}", c.neighbors(*p), expect));
        }
    }
    Ok(())
}

/// Connect `new_node` and run the join to quiescence.
pub fn can_join(
    c: &Configuration,
    model: &CanModel,
    new_node: NodeId,
    bootstrap: Option<NodeId>,
    id_point: Vec<u64>,
) -> Result<Vec<Action>, crate::model::ModelError> {
    let connect = Action::connect(
        new_node,
        NodeState::Can(CanState::pending(id_point, bootstrap)),
        BTreeSet::new(),
        BTreeSet::new(),
    );
    let after = crate::model::apply_action(c, &connect)?;
    let mut actions = vec![connect];
    actions.extend(super::settle(model, &after, super::SETTLE_LIMIT)?.0);
    Ok(actions)
}

/// Disconnect `departed` and run takeover and neighbor refresh to quiescence.
pub fn can_leave_repair(
    c: &Configuration,
    model: &CanModel,
    departed: NodeId,
) -> Result<Vec<Action>, crate::model::ModelError> {
    let leave = Action::disconnect(departed);
    let after = crate::model::apply_action(c, &leave)?;
    let mut actions = vec![leave];
    actions.extend(super::settle(model, &after, super::SETTLE_LIMIT)?.0);
    Ok(actions)
}
