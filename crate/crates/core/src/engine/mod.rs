//! Deterministic single-threaded engine: builds the initial system of a
//! scenario, interleaves protocol steps with the demon's churn, and
//! classifies the resulting trace.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::criteria::proximity::ProximityCriterion;
use crate::criteria::Criterion;
use crate::demons::{adversarial_response, generate_schedule, template_of, ChurnSchedule, DemonClass, DemonError};
use crate::lsa::{LsaModel, LsaState};
use crate::model::{
    apply_action, Action, ActionKind, Configuration, DataItem, ModelError, NodeId, NodeState, ProtocolModel, Report,
    Trace,
};
use crate::monitors::{classify, KernelKind, MonitorError};
use crate::overlays::can::{can_join, can_state, CanModel, CanState, SCALE};
use crate::overlays::is_quiescent;
use crate::overlays::pastry::{pastry_join, pastry_state, PastryModel, PastryParams, PastryState};
use crate::protocols::leader::{LeaderModel, LeaderState};
use crate::protocols::query::{query_start, query_state, QueryModel, QuerySpec, QueryState};

pub mod report;
pub mod scenario;
pub mod traceio;

pub use report::{emit_report, Metrics, Outcome, ReportFormat, RunReport};
pub use scenario::{CriterionRef, DemonConfig, ProtocolKind, Scenario};
pub use traceio::{emit_trace, read_trace, TraceFile, TRACE_SCHEMA};

/// Identifier of the single query a query scenario issues.
pub const QUERY_ID: u64 = 1;
/// The query initiator, never disconnected.
pub const INITIATOR: NodeId = NodeId(0);
/// Pastry coordinates are drawn from `[0, COORD_EXTENT)` per axis.
pub const COORD_EXTENT: i64 = 1000;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error(transparent)]
    Demon(#[from] DemonError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Monitor(#[from] MonitorError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("trace file: {0}")]
    Trace(String),
}

/// The protocol under test, with what the engine needs to drive it.
#[derive(Debug, Clone)]
pub enum Driver {
    Lsa(LsaModel, scenario::LsaParams),
    Can(CanModel),
    Pastry(PastryModel),
    Leader(LeaderModel),
    Query(QueryModel, scenario::QueryParams),
}

impl Driver {
    pub fn model(&self) -> &dyn ProtocolModel {
        match self {
            Driver::Lsa(m, _) => m,
            Driver::Can(m) => m,
            Driver::Pastry(m) => m,
            Driver::Leader(m) => m,
            Driver::Query(m, _) => m,
        }
    }

    /// Overlays defer churn until their maintenance is quiescent.
    fn defers_churn(&self) -> bool {
        matches!(self, Driver::Can(_) | Driver::Pastry(_))
    }

    pub fn kernel_kind(&self) -> KernelKind {
        match self {
            Driver::Query(..) => KernelKind::Data,
            _ => KernelKind::Topological,
        }
    }
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct Run {
    pub scenario: Scenario,
    pub driver: Driver,
    pub schedule: ChurnSchedule,
    pub trace: Trace,
    pub report: RunReport,
}

impl Run {
    pub fn criterion(&self) -> Arc<dyn Criterion> {
        self.scenario.criterion().expect("validated scenario")
    }
}

fn pick<T: Copy>(items: &[T], k: usize, rng: &mut ChaCha8Rng) -> Vec<T> {
    items.choose_multiple(rng, k.min(items.len())).copied().collect()
}

fn random_point(dims: usize, rng: &mut ChaCha8Rng) -> Vec<u64> {
    (0..dims).map(|_| rng.gen_range(0..SCALE)).collect()
}

fn random_coord(rng: &mut ChaCha8Rng) -> (i64, i64) {
    (rng.gen_range(0..COORD_EXTENT), rng.gen_range(0..COORD_EXTENT))
}

fn fresh_key(c: &Configuration, params: &PastryParams, rng: &mut ChaCha8Rng) -> u64 {
    let used: BTreeSet<u64> = c.nodes.keys().filter_map(|p| pastry_state(c, *p)).map(|s| s.key).collect();
    loop {
        let k = rng.gen_range(0..params.ring());
        if !used.contains(&k) {
            return k;
        }
    }
}

fn query_items(p: NodeId, params: &scenario::QueryParams, rng: &mut ChaCha8Rng) -> BTreeSet<DataItem> {
    (0..params.items_per_node)
        .map(|i| {
            let head = if rng.gen_bool(0.5) { params.prefix.as_str() } else { "~" };
            DataItem::new(format!("{head}{}-{i}", p.0))
        })
        .collect()
}

fn joined_nodes(c: &Configuration) -> Vec<NodeId> {
    c.active()
        .filter(|p| match c.state(*p) {
            Some(NodeState::Can(s)) => s.is_joined(),
            Some(NodeState::Pastry(s)) => s.is_joined(),
            _ => true,
        })
        .collect()
}

fn apply_all(c: Configuration, actions: &[Action]) -> Result<Configuration, ModelError> {
    actions.iter().try_fold(c, |c, a| apply_action(&c, a))
}

/// Builds the driver and the initial configuration. Overlay members are
/// joined offline, so the trace starts from a quiescent overlay.
fn setup(s: &Scenario, schedule: &ChurnSchedule, rng: &mut ChaCha8Rng) -> Result<(Driver, Configuration), EngineError> {
    let n = s.initial_nodes as u64;
    let ids: Vec<NodeId> = (0..n).map(NodeId).collect();
    Ok(match s.protocol {
        ProtocolKind::Lsa => {
            let params: scenario::LsaParams = s.params()?;
            let mut c = Configuration::new("lsa");
            for p in &ids {
                let pos = (0..params.dims).map(|_| rng.gen_range(0..params.extent)).collect();
                let others: Vec<NodeId> = ids.iter().filter(|q| *q != p).copied().collect();
                c.nodes.insert(*p, Arc::new(NodeState::Lsa(LsaState::new(pos))));
                c.graph.insert(*p, Arc::new(pick(&others, params.degree, rng).into_iter().collect()));
            }
            (Driver::Lsa(LsaModel { criterion: Arc::new(ProximityCriterion) }, params), c)
        }
        ProtocolKind::Can => {
            let model = CanModel { dims: s.params::<scenario::CanParams>()?.dims };
            let mut c = Configuration::new("can");
            for p in &ids {
                let boot = pick(&joined_nodes(&c), 1, rng).first().copied();
                let acts = can_join(&c, &model, *p, boot, random_point(model.dims, rng))?;
                c = apply_all(c, &acts)?;
            }
            c.time = 0;
            (Driver::Can(model), c)
        }
        ProtocolKind::Pastry => {
            let model = PastryModel { params: s.params()? };
            let mut c = Configuration::new("pastry");
            for p in &ids {
                let boot = pick(&joined_nodes(&c), 1, rng).first().copied();
                let key = fresh_key(&c, &model.params, rng);
                let acts = pastry_join(&c, &model, *p, boot, key, random_coord(rng))?;
                c = apply_all(c, &acts)?;
            }
            c.time = 0;
            (Driver::Pastry(model), c)
        }
        ProtocolKind::Leader => {
            let alpha = s.params::<scenario::LeaderParams>()?.alpha;
            let mut universe: BTreeSet<NodeId> = ids.iter().copied().collect();
            universe.extend(schedule.events.iter().filter(|e| e.kind == ActionKind::Connect).map(|e| e.target));
            let stable: BTreeSet<NodeId> = ids[..alpha].iter().copied().collect();
            let mut c = Configuration::new("leader");
            for p in &ids {
                c.nodes.insert(*p, Arc::new(NodeState::Leader(LeaderState::initial(&universe))));
                c.graph.insert(*p, Arc::new(BTreeSet::new()));
            }
            let timely = schedule.is_empty();
            (Driver::Leader(LeaderModel { universe, alpha, stable, timely }), c)
        }
        ProtocolKind::Query => {
            let params: scenario::QueryParams = s.params()?;
            let mut adj: Vec<BTreeSet<NodeId>> = vec![BTreeSet::new(); ids.len()];
            // random tree for connectivity, then extra edges up to the degree
            for i in 1..ids.len() {
                let j = rng.gen_range(0..i);
                adj[i].insert(ids[j]);
                adj[j].insert(ids[i]);
            }
            for i in 0..ids.len() {
                while adj[i].len() < params.degree.min(ids.len() - 1) {
                    let j = rng.gen_range(0..ids.len());
                    if j != i {
                        adj[i].insert(ids[j]);
                        adj[j].insert(ids[i]);
                    }
                }
            }
            let mut c = Configuration::new("query");
            for (i, p) in ids.iter().enumerate() {
                c.nodes.insert(*p, Arc::new(NodeState::Query(QueryState::default())));
                c.graph.insert(*p, Arc::new(std::mem::take(&mut adj[i])));
                c.data.insert(*p, query_items(*p, &params, rng));
            }
            (Driver::Query(QueryModel, params), c)
        }
    })
}

/// The Connect action for a new node of the driven protocol.
fn connect_action(driver: &Driver, c: &Configuration, p: NodeId, rng: &mut ChaCha8Rng) -> Action {
    let active: Vec<NodeId> = c.active().collect();
    match driver {
        Driver::Lsa(_, params) => {
            let pos = (0..params.dims).map(|_| rng.gen_range(0..params.extent)).collect();
            let view = pick(&active, params.degree, rng).into_iter().collect();
            Action::connect(p, NodeState::Lsa(LsaState::new(pos)), view, BTreeSet::new())
        }
        Driver::Can(m) => {
            let boot = pick(&joined_nodes(c), 1, rng).first().copied();
            Action::connect(
                p,
                NodeState::Can(CanState::pending(random_point(m.dims, rng), boot)),
                BTreeSet::new(),
                BTreeSet::new(),
            )
        }
        Driver::Pastry(m) => {
            let boot = pick(&joined_nodes(c), 1, rng).first().copied();
            let key = fresh_key(c, &m.params, rng);
            let state = PastryState::pending(&m.params, key, random_coord(rng), boot);
            Action::connect(p, NodeState::Pastry(state), BTreeSet::new(), BTreeSet::new())
        }
        Driver::Leader(m) => {
            Action::connect(p, NodeState::Leader(LeaderState::initial(&m.universe)), BTreeSet::new(), BTreeSet::new())
        }
        Driver::Query(_, params) => {
            let view = pick(&active, params.degree.max(1), rng).into_iter().collect();
            let data = query_items(p, params, rng);
            Action::connect(p, NodeState::Query(QueryState::default()), view, data)
        }
    }
}

/// Nodes the demon must never remove.
fn pinned(s: &Scenario) -> Result<BTreeSet<NodeId>, EngineError> {
    Ok(match s.protocol {
        ProtocolKind::Leader => (0..s.params::<scenario::LeaderParams>()?.alpha as u64).map(NodeId).collect(),
        ProtocolKind::Query => BTreeSet::from([INITIATOR]),
        _ => BTreeSet::new(),
    })
}

/// Scheduler choice: nodes in a seeded random order, the first one with an
/// action fires it.
fn next_protocol_action(model: &dyn ProtocolModel, c: &Configuration, rng: &mut ChaCha8Rng) -> Option<Action> {
    let mut order: Vec<NodeId> = c.active().collect();
    order.shuffle(rng);
    order.into_iter().find_map(|p| model.sample(c, p, rng as &mut dyn RngCore))
}

/// Whether the query initiator has finished and not yet reported.
fn pending_query_report(t: &Trace) -> Option<Action> {
    let s = query_state(t.last(), INITIATOR)?;
    let reported = t.actions.iter().any(|a| a.kind == ActionKind::IO);
    (s.done && !reported).then(|| {
        Action::report(INITIATOR, Report::QueryResult { query: s.query, values: s.values.iter().cloned().collect() })
    })
}

fn prepare(s: &Scenario) -> Result<(Driver, ChurnSchedule, Configuration, ChaCha8Rng), EngineError> {
    s.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let schedule = generate_schedule(&s.demon_spec(), s.initial_nodes, &pinned(s)?)?;
    let (driver, initial) = setup(s, &schedule, &mut rng)?;
    Ok((driver, schedule, initial, rng))
}

/// The protocol model a scenario runs, for re-checking stored traces.
pub fn driver_for(s: &Scenario) -> Result<Driver, EngineError> {
    Ok(prepare(s)?.0)
}

/// Verdict and metrics of a trace read from disk; the header must carry
/// its scenario.
pub fn replay_report(tf: &TraceFile) -> Result<RunReport, EngineError> {
    let s = tf.scenario.as_ref().ok_or_else(|| EngineError::Trace("trace header has no scenario".into()))?;
    let driver = driver_for(s)?;
    let crit = s.criterion()?;
    let verdict = classify(&tf.trace, crit.as_ref(), driver.model(), driver.kernel_kind())?;
    Ok(RunReport::build(s, &tf.trace, crit.as_ref(), &driver, verdict))
}

/// LSA under the adversarial demon: the divergent execution.
pub fn theorem1_scenario(seed: u64, horizon: u64, class: DemonClass) -> Scenario {
    let mut s = Scenario::from_toml(DIVERGENCE_SCENARIO).expect("built-in scenario");
    s.seed = seed;
    s.horizon = horizon;
    s.demon.class = class;
    s.demon.bound = (class == DemonClass::Bounded).then_some(0);
    s
}

const DIVERGENCE_SCENARIO: &str = r#"
name = "theorem1"
protocol = "lsa"
criterion = "proximity"
initial_nodes = 6
horizon = 10000
seed = 1

[demon]
class = "adversarial"

[protocol_params]
dims = 2
extent = 100
degree = 2
"#;

/// Runs the scenario in memory.
pub fn simulate(s: &Scenario) -> Result<Run, EngineError> {
    let (mut driver, schedule, initial, mut rng) = prepare(s)?;
    let spec = s.demon_spec();
    let crit = s.criterion()?;
    let template = template_of(&initial);
    let horizon = s.horizon as usize;
    let mut trace = Trace::new(initial);
    let mut next_churn = 0;

    if let Driver::Query(_, params) = &driver {
        if horizon > 0 {
            let spec = QuerySpec { prefix: DataItem::new(params.prefix.clone()) };
            trace.push(query_start(trace.last(), INITIATOR, QUERY_ID, spec))?;
        }
    }

    while trace.len() < horizon {
        if matches!(driver, Driver::Query(..)) {
            if let Some(r) = pending_query_report(&trace) {
                trace.push(r)?;
                continue;
            }
        }
        let c = trace.last();
        let churn_left = next_churn < schedule.len();
        let due = churn_left && schedule.events[next_churn].index as usize <= trace.len();
        let protocol = if due && (!driver.defers_churn() || is_quiescent(driver.model(), c)) {
            None
        } else {
            next_protocol_action(driver.model(), c, &mut rng)
        };
        match protocol {
            Some(a) => {
                if spec.class == DemonClass::Adversarial {
                    if let Some(resp) = adversarial_response(c, &a, &template, crit.as_ref(), driver.model())? {
                        for r in resp.into_iter().take(horizon - trace.len()) {
                            trace.push(r)?;
                        }
                        continue;
                    }
                }
                trace.push(a)?;
            }
            // churn that is due, or the next event brought forward when the
            // protocol has nothing left to do
            None if churn_left => {
                let e = &schedule.events[next_churn];
                next_churn += 1;
                let a = match e.kind {
                    ActionKind::Connect => connect_action(&driver, c, e.target, &mut rng),
                    _ if c.is_active(e.target) => Action::disconnect(e.target),
                    _ => continue,
                };
                trace.push(a)?;
                if next_churn == schedule.len() {
                    if let Driver::Leader(m) = &mut driver {
                        m.timely = true;
                    }
                }
            }
            None => break,
        }
    }

    let verdict = classify(&trace, crit.as_ref(), driver.model(), driver.kernel_kind())?;
    let report = RunReport::build(s, &trace, crit.as_ref(), &driver, verdict);
    Ok(Run { scenario: s.clone(), driver, schedule, trace, report })
}

/// Output files of a run written to disk.
#[derive(Debug, Clone)]
pub struct RunFiles {
    pub trace: PathBuf,
    pub records: PathBuf,
    pub csv: PathBuf,
}

/// Runs the scenario and writes `trace.jsonl`, `report.jsonl` and
/// `summary.csv` into `out_dir`.
pub fn run_scenario(s: &Scenario, out_dir: &Path, snapshot_interval: usize) -> Result<(Run, RunFiles), EngineError> {
    let mut run = simulate(s)?;
    std::fs::create_dir_all(out_dir)?;
    let files = RunFiles {
        trace: out_dir.join("trace.jsonl"),
        records: out_dir.join("report.jsonl"),
        csv: out_dir.join("summary.csv"),
    };
    emit_trace(&run.trace, Some(s), snapshot_interval, &files.trace)?;
    run.report.trace_path = Some("trace.jsonl".into());
    emit_report(&run.report, ReportFormat::Records, &files.records)?;
    emit_report(&run.report, ReportFormat::CsvSummary, &files.csv)?;
    Ok((run, files))
}

/// Leader currently output by every active node.
pub fn leaders(driver: &Driver, c: &Configuration) -> std::collections::BTreeMap<NodeId, NodeId> {
    let Driver::Leader(m) = driver else { return Default::default() };
    m.leader_reports(c)
        .into_iter()
        .filter_map(|a| match a.payload {
            crate::model::Payload::Report(Report::Leader { leader }) => Some((a.actor, leader)),
            _ => None,
        })
        .collect()
}

/// Values of the query report, if the initiator finished.
pub fn query_result(t: &Trace) -> Option<Vec<DataItem>> {
    t.actions.iter().find_map(|a| match &a.payload {
        crate::model::Payload::Report(Report::QueryResult { values, .. }) => Some(values.clone()),
        _ => None,
    })
}

/// Whether every CAN node has joined.
pub fn can_all_joined(c: &Configuration) -> bool {
    c.active().all(|p| can_state(c, p).is_some_and(CanState::is_joined))
}
