//! Pastry: prefix routing tables, leaf sets and proximity neighborhoods.
//!
//! Ids live on a ring of `2^(b·digits)` points. Proximity is the Euclidean
//! distance between synthetic integer coordinates, so two distinct nodes are
//! always at least 1 apart. Every table update is monotone per slot: empty
//! slots are filled, occupied ones are replaced only by strictly closer
//! candidates, and dead entries are repaired from what live entries know.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::criteria::CriterionError;
use crate::model::{Action, Configuration, Message, NodeId, NodeState, ProtocolModel, Step};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PastryParams {
    /// Bits per digit.
    pub b: u32,
    pub digits: usize,
    pub leaf: usize,
    pub neighborhood: usize,
    /// Maintenance runs at least every this many events.
    pub maintenance_period: u64,
}

impl Default for PastryParams {
    fn default() -> Self {
        PastryParams { b: 2, digits: 16, leaf: 8, neighborhood: 8, maintenance_period: 16 }
    }
}

impl PastryParams {
    pub fn base(&self) -> usize {
        1 << self.b
    }

    pub fn ring(&self) -> u64 {
        1u64 << (self.b as usize * self.digits)
    }

    pub fn digit(&self, key: u64, i: usize) -> usize {
        ((key >> (self.b as usize * (self.digits - 1 - i))) & (self.base() as u64 - 1)) as usize
    }

    pub fn digits_of(&self, key: u64) -> Vec<u8> {
        (0..self.digits).map(|i| self.digit(key, i) as u8).collect()
    }

    pub fn shared_prefix(&self, a: u64, b: u64) -> usize {
        (0..self.digits).take_while(|i| self.digit(a, *i) == self.digit(b, *i)).count()
    }

    /// Number of scored routing slots: one per non-own digit per row.
    pub fn slot_count(&self) -> usize {
        self.digits * (self.base() - 1)
    }
}

/// 1 iff `p` and `q` share their first `i` digits and `q` has digit `j` at `i`.
pub fn pastry_f(i: usize, j: u8, p: &[u8], q: &[u8]) -> Result<u8, CriterionError> {
    if p.len() != q.len() {
        return Err(CriterionError::LengthMismatch(p.len(), q.len()));
    }
    Ok(u8::from(i < q.len() && p[..i] == q[..i] && q[i] == j))
}

pub fn ring_distance(a: u64, b: u64, ring: u64) -> u64 {
    let d = a.abs_diff(b) % ring;
    d.min(ring - d)
}

fn clockwise(from: u64, to: u64, ring: u64) -> u64 {
    (to + ring - from) % ring
}

pub fn sq_distance(a: (i64, i64), b: (i64, i64)) -> u64 {
    let dx = a.0.abs_diff(b.0);
    let dy = a.1.abs_diff(b.1);
    dx * dx + dy * dy
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "phase", rename_all = "snake_case")]
pub enum PastryPhase {
    Pending { bootstrap: Option<NodeId> },
    Joined,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PastryState {
    pub key: u64,
    pub coord: (i64, i64),
    /// `digits` rows of `2^b` columns; the column of the own digit stays empty.
    pub routing: Vec<Vec<Option<NodeId>>>,
    pub leaf: BTreeSet<NodeId>,
    pub neighborhood: BTreeSet<NodeId>,
    pub phase: PastryPhase,
}

impl PastryState {
    pub fn pending(params: &PastryParams, key: u64, coord: (i64, i64), bootstrap: Option<NodeId>) -> Self {
        PastryState {
            key,
            coord,
            routing: vec![vec![None; params.base()]; params.digits],
            leaf: BTreeSet::new(),
            neighborhood: BTreeSet::new(),
            phase: PastryPhase::Pending { bootstrap },
        }
    }

    pub fn is_joined(&self) -> bool {
        self.phase == PastryPhase::Joined
    }

    /// Every node referenced by any table.
    pub fn known(&self) -> BTreeSet<NodeId> {
        self.routing
            .iter()
            .flatten()
            .flatten()
            .copied()
            .chain(self.leaf.iter().copied())
            .chain(self.neighborhood.iter().copied())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "msg", rename_all = "snake_case")]
pub enum PastryMessage {
    /// A newcomer announces itself to every node it references.
    Announce,
}

pub fn pastry_state(c: &Configuration, p: NodeId) -> Option<&PastryState> {
    match c.state(p)? {
        NodeState::Pastry(s) => Some(s),
        _ => None,
    }
}

fn live(c: &Configuration, q: NodeId) -> Option<&PastryState> {
    pastry_state(c, q).filter(|s| s.is_joined())
}

/// Fills empty or dead routing slots and replaces entries by strictly
/// closer valid candidates. Returns whether anything changed.
fn improve_routing(c: &Configuration, params: &PastryParams, me: &mut PastryState, cands: &BTreeSet<NodeId>) -> bool {
    let mut changed = false;
    for (q, s) in cands.iter().filter_map(|q| live(c, *q).map(|s| (*q, s))) {
        if s.key == me.key {
            continue;
        }
        let row = params.shared_prefix(me.key, s.key);
        let col = params.digit(s.key, row);
        let slot = &mut me.routing[row][col];
        let better = match slot {
            Some(cur) if *cur == q => false,
            Some(cur) => match live(c, *cur) {
                Some(cs) => sq_distance(me.coord, s.coord) < sq_distance(me.coord, cs.coord),
                None => true,
            },
            None => true,
        };
        if better {
            *slot = Some(q);
            changed = true;
        }
    }
    changed
}

fn leaf_value(c: &Configuration, params: &PastryParams, me: &PastryState, set: &BTreeSet<NodeId>) -> f64 {
    set.iter()
        .filter_map(|q| live(c, *q))
        .map(|s| 1.0 / (1.0 + ring_distance(me.key, s.key, params.ring()) as f64))
        .sum()
}

/// Half the leaf set closest clockwise, half closest counter-clockwise.
fn leaf_proposal(
    c: &Configuration,
    params: &PastryParams,
    me: &PastryState,
    pool: &BTreeSet<NodeId>,
) -> BTreeSet<NodeId> {
    let ring = params.ring();
    let mut nodes: Vec<(NodeId, u64)> =
        pool.iter().filter_map(|q| live(c, *q).map(|s| (*q, s.key))).filter(|(_, k)| *k != me.key).collect();
    let half = params.leaf / 2;
    let mut out = BTreeSet::new();
    nodes.sort_by_key(|(q, k)| (clockwise(me.key, *k, ring), *q));
    out.extend(nodes.iter().take(half).map(|(q, _)| *q));
    nodes.sort_by_key(|(q, k)| (clockwise(*k, me.key, ring), *q));
    out.extend(nodes.iter().take(params.leaf - half).map(|(q, _)| *q));
    out
}

fn improve_leaf(c: &Configuration, params: &PastryParams, me: &mut PastryState, cands: &BTreeSet<NodeId>) -> bool {
    let alive: BTreeSet<NodeId> = me.leaf.iter().filter(|q| live(c, **q).is_some()).copied().collect();
    let pool: BTreeSet<NodeId> = alive.iter().chain(cands.iter()).copied().collect();
    let proposal = leaf_proposal(c, params, me, &pool);
    let now = leaf_value(c, params, me, &alive);
    let next = leaf_value(c, params, me, &proposal);
    let target = if next > now || (next == now && alive.len() < me.leaf.len()) {
        proposal
    } else if alive.len() < me.leaf.len() {
        alive
    } else {
        return false;
    };
    if target == me.leaf {
        return false;
    }
    me.leaf = target;
    true
}

fn improve_neighborhood(
    c: &Configuration,
    params: &PastryParams,
    me: &mut PastryState,
    cands: &BTreeSet<NodeId>,
) -> bool {
    let mut pool: Vec<(u64, NodeId)> = me
        .neighborhood
        .iter()
        .chain(cands.iter())
        .filter_map(|q| live(c, *q).filter(|s| s.key != me.key).map(|s| (sq_distance(me.coord, s.coord), *q)))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    pool.sort();
    let target: BTreeSet<NodeId> = pool.into_iter().take(params.neighborhood).map(|(_, q)| q).collect();
    if target == me.neighborhood {
        return false;
    }
    me.neighborhood = target;
    true
}

fn finish(p: NodeId, s: PastryState, receive: Option<NodeId>, send: Vec<(NodeId, Message)>) -> Action {
    let mut view = s.known();
    view.remove(&p);
    Action::step(p, Step { receive, state: Some(NodeState::Pastry(s)), neighbors: Some(view), send })
}

/// Live nodes referenced by `p`'s tables plus everything they reference.
fn two_hop(c: &Configuration, me: &PastryState) -> BTreeSet<NodeId> {
    let mut out = BTreeSet::new();
    for q in me.known() {
        if let Some(s) = live(c, q) {
            out.insert(q);
            out.extend(s.known());
        }
    }
    out
}

/// Route from `bootstrap` toward `key`, following routing entries, then any
/// numerically closer known node.
pub fn route(c: &Configuration, params: &PastryParams, bootstrap: NodeId, key: u64) -> Vec<NodeId> {
    let mut path = vec![bootstrap];
    let mut at = bootstrap;
    while let Some(s) = live(c, at) {
        if path.len() > params.digits + c.len() {
            break;
        }
        let row = params.shared_prefix(s.key, key);
        if row == params.digits {
            break;
        }
        let next = s.routing[row][params.digit(key, row)].filter(|q| live(c, *q).is_some()).or_else(|| {
            let here = ring_distance(s.key, key, params.ring());
            s.known()
                .into_iter()
                .filter_map(|q| live(c, q).map(|t| (ring_distance(t.key, key, params.ring()), q, t.key)))
                .filter(|(d, _, k)| *d < here && params.shared_prefix(*k, key) >= row)
                .min()
                .map(|(_, q, _)| q)
        });
        match next {
            Some(q) if !path.contains(&q) => {
                path.push(q);
                at = q;
            }
            _ => break,
        }
    }
    path
}

#[derive(Debug, Clone, Copy, Default)]
pub struct PastryModel {
    pub params: PastryParams,
}

impl PastryModel {
    fn join(&self, c: &Configuration, p: NodeId, me: &PastryState, bootstrap: Option<NodeId>) -> Option<Action> {
        let mut s = me.clone();
        s.phase = PastryPhase::Joined;
        let boot = bootstrap.filter(|b| live(c, *b).is_some()).or_else(|| c.active().find(|q| live(c, *q).is_some()));
        let Some(boot) = boot else { return Some(finish(p, s, None, Vec::new())) };
        let path = route(c, &self.params, boot, me.key);
        let mut cands: BTreeSet<NodeId> = path.iter().copied().collect();
        for q in &path {
            if let Some(t) = live(c, *q) {
                cands.extend(t.known());
            }
        }
        cands.remove(&p);
        improve_routing(c, &self.params, &mut s, &cands);
        improve_leaf(c, &self.params, &mut s, &cands);
        improve_neighborhood(c, &self.params, &mut s, &cands);
        let send =
            s.known().into_iter().filter(|q| *q != p).map(|q| (q, Message::Pastry(PastryMessage::Announce))).collect();
        Some(finish(p, s, None, send))
    }

    /// Repairs of dead entries, one action per table kind.
    fn repairs(&self, c: &Configuration, p: NodeId, me: &PastryState) -> Vec<Action> {
        let mut out = Vec::new();
        let dead = |q: &NodeId| live(c, *q).is_none();
        let params = &self.params;
        if me.routing.iter().flatten().flatten().any(dead) {
            let mut s = me.clone();
            for row in 0..params.digits {
                for col in 0..params.base() {
                    let Some(q) = s.routing[row][col] else { continue };
                    if !dead(&q) {
                        continue;
                    }
                    s.routing[row][col] = None;
                    // ask entries of this row, then of the following rows
                    let mut cands = BTreeSet::new();
                    for r in row..params.digits {
                        for e in me.routing[r].iter().flatten() {
                            if let Some(t) = live(c, *e) {
                                cands.insert(*e);
                                cands.extend(t.routing[row].iter().flatten().copied());
                            }
                        }
                    }
                    let best = cands
                        .into_iter()
                        .filter_map(|e| live(c, e).map(|t| (e, t)))
                        .filter(|(e, t)| {
                            *e != p && params.shared_prefix(me.key, t.key) == row && params.digit(t.key, row) == col
                        })
                        .min_by_key(|(e, t)| (sq_distance(me.coord, t.coord), *e));
                    s.routing[row][col] = best.map(|(e, _)| e);
                }
            }
            out.push(finish(p, s, None, Vec::new()));
        }
        if me.leaf.iter().any(dead) {
            let mut s = me.clone();
            let mut cands = BTreeSet::new();
            for q in me.leaf.iter().filter(|q| !dead(q)) {
                cands.extend(live(c, *q).map(|t| t.leaf.clone()).unwrap_or_default());
            }
            cands.remove(&p);
            improve_leaf(c, params, &mut s, &cands);
            out.push(finish(p, s, None, Vec::new()));
        }
        if me.neighborhood.iter().any(dead) {
            let mut s = me.clone();
            let mut cands = BTreeSet::new();
            for q in me.neighborhood.iter().filter(|q| !dead(q)) {
                cands.extend(live(c, *q).map(|t| t.neighborhood.clone()).unwrap_or_default());
            }
            cands.remove(&p);
            improve_neighborhood(c, params, &mut s, &cands);
            out.push(finish(p, s, None, Vec::new()));
        }
        out
    }

    fn maintenance(&self, c: &Configuration, p: NodeId, me: &PastryState) -> Option<Action> {
        if me.known().iter().any(|q| live(c, *q).is_none()) {
            return None;
        }
        let mut cands = two_hop(c, me);
        cands.remove(&p);
        let mut s = me.clone();
        let a = improve_routing(c, &self.params, &mut s, &cands);
        let b = improve_leaf(c, &self.params, &mut s, &cands);
        let d = improve_neighborhood(c, &self.params, &mut s, &cands);
        (a || b || d).then(|| finish(p, s, None, Vec::new()))
    }

    fn protocol_actions(&self, c: &Configuration, p: NodeId, me: &PastryState) -> Vec<Action> {
        let mut out = Vec::new();
        for from in c.ready_senders(p) {
            if !matches!(c.head(p, from), Some(Message::Pastry(_))) {
                continue;
            }
            let mut s = me.clone();
            if s.is_joined() && live(c, from).is_some() {
                let mut cands = live(c, from).map(|t| t.known()).unwrap_or_default();
                cands.insert(from);
                cands.remove(&p);
                improve_routing(c, &self.params, &mut s, &cands);
                improve_leaf(c, &self.params, &mut s, &cands);
                improve_neighborhood(c, &self.params, &mut s, &cands);
            }
            out.push(finish(p, s, Some(from), Vec::new()));
        }
        match me.phase {
            PastryPhase::Pending { bootstrap } => out.extend(self.join(c, p, me, bootstrap)),
            PastryPhase::Joined => out.extend(self.repairs(c, p, me)),
        }
        out
    }
}

impl ProtocolModel for PastryModel {
    fn name(&self) -> &str {
        "pastry"
    }

    fn enabled(&self, c: &Configuration, p: NodeId) -> Vec<Action> {
        let Some(me) = pastry_state(c, p) else { return Vec::new() };
        let mut out = self.protocol_actions(c, p, me);
        if me.is_joined() {
            out.extend(self.maintenance(c, p, me));
        }
        out
    }

    /// Maintenance only fires on its period or when nothing else is pending.
    fn sample(&self, c: &Configuration, p: NodeId, rng: &mut dyn rand::RngCore) -> Option<Action> {
        let me = pastry_state(c, p)?;
        let mut out = self.protocol_actions(c, p, me);
        let due = c.time.is_multiple_of(self.params.maintenance_period.max(1));
        if out.is_empty() || due {
            if let Some(m) = me.is_joined().then(|| self.maintenance(c, p, me)).flatten() {
                if due || out.is_empty() {
                    return Some(m);
                }
            }
        }
        if out.is_empty() {
            return None;
        }
        let i = (rng.next_u64() % out.len() as u64) as usize;
        Some(out.swap_remove(i))
    }
}

/// Every populated routing slot `(row, col)` holds a node with `pastry_f = 1`.
pub fn check_routing_prefixes(c: &Configuration, params: &PastryParams) -> Result<(), String> {
    for p in c.active() {
        let Some(s) = pastry_state(c, p) else { continue };
        let mine = params.digits_of(s.key);
        for (row, cols) in s.routing.iter().enumerate() {
            for (col, e) in cols.iter().enumerate() {
                let Some(q) = e else { continue };
                let Some(t) = pastry_state(c, *q) else { continue };
                if pastry_f(row, col as u8, &mine, &params.digits_of(t.key)) != Ok(1) {
                    return Err(format!("slot ({row},{col}) of {p} holds {q} with the wrong prefix"));
                }
            }
        }
    }
    Ok(())
}

/// Leaf sets equal the brute-force closest ids, half on each side.
pub fn check_leaf_sets(c: &Configuration, params: &PastryParams) -> Result<(), String> {
    let all: BTreeSet<NodeId> = c.active().filter(|q| live(c, *q).is_some()).collect();
    for p in &all {
        let s = live(c, *p).expect("joined");
        let expect = leaf_proposal(c, params, s, &all);
        if s.leaf != expect {
            return Err(format!("leaf set of {p} is {:?}, expected {:?}", s.leaf, expect));
        }
    }
    Ok(())
}

/// Connect `new_node` and settle the join.
pub fn pastry_join(
    c: &Configuration,
    model: &PastryModel,
    new_node: NodeId,
    bootstrap: Option<NodeId>,
    key: u64,
    coord: (i64, i64),
) -> Result<Vec<Action>, crate::model::ModelError> {
    let state = PastryState::pending(&model.params, key, coord, bootstrap);
    let connect = Action::connect(new_node, NodeState::Pastry(state), BTreeSet::new(), BTreeSet::new());
    let after = crate::model::apply_action(c, &connect)?;
    let mut actions = vec![connect];
    actions.extend(super::settle(model, &after, super::SETTLE_LIMIT)?.0);
    Ok(actions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::apply_action;
    use crate::overlays::settle;

    fn s(digits: &str) -> Vec<u8> {
        digits.bytes().map(|b| b - b'0').collect()
    }

    #[test]
    fn prefix_function() {
        let q = s("1021");
        assert_eq!(pastry_f(0, q[0], &s("3000"), &q), Ok(1));
        assert_eq!(pastry_f(3, 1, &s("1023"), &q), Ok(1));
        for j in 0..4 {
            assert_eq!(pastry_f(1, j, &s("1023"), &s("2023")), Ok(0));
        }
        assert_eq!(pastry_f(0, 0, &s("12"), &s("123")), Err(CriterionError::LengthMismatch(2, 3)));
    }

    #[test]
    fn ring_distance_wraps() {
        assert_eq!(ring_distance(1, 15, 16), 2);
        assert_eq!(ring_distance(7, 7, 16), 0);
    }

    fn build(params: PastryParams, n: u64) -> (PastryModel, Configuration) {
        let model = PastryModel { params };
        let mut c = Configuration::new("pastry");
        for i in 0..n {
            let key = (i.wrapping_mul(0x9E37_79B9) ^ (i << 7)) % params.ring();
            let coord = ((i as i64 * 37) % 101, (i as i64 * 53) % 97);
            let acts = pastry_join(&c, &model, NodeId(i), (i > 0).then_some(NodeId(0)), key, coord).unwrap();
            c = acts.iter().fold(c, |c, a| apply_action(&c, a).unwrap());
        }
        (model, c)
    }

    #[test]
    fn join_into_singleton_references_bootstrap() {
        let params = PastryParams { b: 2, digits: 4, ..PastryParams::default() };
        let (_, c) = build(params, 2);
        let s = pastry_state(&c, NodeId(1)).unwrap();
        assert!(s.routing.iter().flatten().flatten().all(|q| *q == NodeId(0)));
        assert_eq!(s.routing.iter().flatten().flatten().count(), 1);
        assert!(s.leaf.contains(&NodeId(0)));
    }

    #[test]
    fn eight_node_binary_ring_has_sound_slots() {
        let params = PastryParams { b: 1, digits: 8, leaf: 4, neighborhood: 4, maintenance_period: 4 };
        let (_, c) = build(params, 8);
        check_routing_prefixes(&c, &params).unwrap();
        check_leaf_sets(&c, &params).unwrap();
    }

    #[test]
    fn failures_are_repaired_soundly() {
        let params = PastryParams::default();
        let (model, mut c) = build(params, 16);
        for q in [3, 8, 11] {
            c = apply_action(&c, &Action::disconnect(NodeId(q))).unwrap();
        }
        let (_, c) = settle(&model, &c, 100_000).unwrap();
        check_routing_prefixes(&c, &params).unwrap();
        check_leaf_sets(&c, &params).unwrap();
        for p in c.active() {
            let s = pastry_state(&c, p).unwrap();
            assert!(s.known().iter().all(|q| c.is_active(*q)));
        }
    }
}
