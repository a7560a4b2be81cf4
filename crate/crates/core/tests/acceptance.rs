//! Acceptance suite: criteria 1 to 8, one pass/fail line each.
//!
//! Runs as a plain binary so the summary lines are always printed; the
//! process exits nonzero if any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::Instant;

use num_rational::Ratio;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use selforg::criteria::proximity::ProximityCriterion;
use selforg::criteria::query::gamma_query;
use selforg::criteria::{Criterion, GlobalCriterion};
use selforg::demons::DemonClass;
use selforg::engine::report::render_report;
use selforg::engine::traceio::write_trace;
use selforg::engine::{
    leaders, query_result, simulate, theorem1_scenario, CriterionRef, DemonConfig, Driver, ProtocolKind, ReportFormat,
    Run, Scenario, INITIATOR,
};
use selforg::lsa::{lsa_configuration, lsa_rule_r, run_lsa_round, LsaModel};
use selforg::model::{ActionKind, Configuration, DataItem, NodeId, NodeState, Trace};
use selforg::monitors::{
    all_p_stable, check_kernel_preservation, check_liveness, check_safety, check_weak_liveness, classify, is_p_stable,
    Class, KernelKind, Property, Status, Verdict,
};
use selforg::overlays::can::{can_state, SCALE};
use selforg::overlays::is_quiescent;
use selforg::overlays::pastry::pastry_state;
use selforg::protocols::query::query_state;

type Check = Result<String, String>;

/// Verdicts gathered for the hierarchy check, each with its obligations
/// re-derived independently when the run was collected.
struct Collected {
    verdicts: Vec<(Verdict, [bool; 4])>,
    scenarios: Vec<Scenario>,
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn table(pairs: &[(&str, toml::Value)]) -> toml::Table {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn demon(class: DemonClass) -> DemonConfig {
    DemonConfig { class, bound: None, kernel_min_size: None, events: None, seed: None }
}

#[allow(clippy::too_many_arguments)]
fn scenario(
    name: &str,
    protocol: ProtocolKind,
    criterion: CriterionRef,
    n: usize,
    horizon: u64,
    seed: u64,
    demon: DemonConfig,
    params: toml::Table,
) -> Scenario {
    Scenario { name: name.into(), protocol, criterion, initial_nodes: n, horizon, seed, demon, protocol_params: params }
}

fn single(name: &str) -> CriterionRef {
    CriterionRef::Single(name.into())
}

/// Re-runs every property check separately from `classify`.
fn obligations(t: &Trace, crit: &dyn Criterion, driver: &Driver) -> [bool; 4] {
    let m = driver.model();
    [
        check_safety(t, crit).is_holds(),
        check_weak_liveness(t, crit, m).map(|r| r.is_holds()).unwrap_or(false),
        check_liveness(t, crit, m).map(|r| r.is_holds()).unwrap_or(false),
        check_kernel_preservation(t, crit, driver.kernel_kind()).is_holds(),
    ]
}

fn collect_run(col: &mut Collected, run: &Run) {
    let crit = run.criterion();
    col.verdicts.push((run.report.verdict.clone(), obligations(&run.trace, crit.as_ref(), &run.driver)));
    col.scenarios.push(run.scenario.clone());
}

// ---------------------------------------------------------------- 1

fn l1(a: &[i64], b: &[i64]) -> u64 {
    a.iter().zip(b).map(|(x, y)| x.abs_diff(*y)).sum()
}

fn pos(c: &Configuration, p: NodeId) -> Vec<i64> {
    match c.state(p) {
        Some(NodeState::Lsa(s)) => s.position.clone(),
        _ => panic!("lsa node without a position"),
    }
}

/// Exact proximity score of `q` seen from `p`.
fn exact(c: &Configuration, p: NodeId, q: NodeId) -> Ratio<u64> {
    Ratio::new(1, 1 + l1(&pos(c, p), &pos(c, q)))
}

fn exact_node(c: &Configuration, p: NodeId) -> Ratio<u64> {
    let view = c.neighbors(p);
    if view.is_empty() {
        return Ratio::from_integer(0);
    }
    view.iter().map(|q| exact(c, p, *q)).sum::<Ratio<u64>>() / Ratio::from_integer(view.len() as u64)
}

fn criterion1(col: &mut Collected) -> Check {
    let gc = GlobalCriterion::new(Arc::new(ProximityCriterion));
    let model = LsaModel { criterion: Arc::new(ProximityCriterion) };
    let mut replacements = 0usize;
    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(4..=32u64);
        let ids: Vec<NodeId> = (0..n).map(NodeId).collect();
        let nodes: Vec<_> = ids
            .iter()
            .map(|p| {
                let others: Vec<NodeId> = ids.iter().filter(|q| *q != p).copied().collect();
                let k = rng.gen_range(1..=3);
                let view = others.choose_multiple(&mut rng, k).copied().collect::<BTreeSet<_>>();
                (*p, vec![rng.gen_range(0..100), rng.gen_range(0..100)], view)
            })
            .collect();
        let mut c = lsa_configuration(&nodes);
        let mut trace = Trace::new(c.clone());
        let mut rounds = 0;
        loop {
            let mut order = ids.clone();
            order.shuffle(&mut rng);
            let before = c.clone();
            let (next, actions, log) = run_lsa_round(&c, &order, &ProximityCriterion);
            if actions.is_empty() {
                break;
            }
            // exact chain: replay each replacement and compare rationals
            let mut cur = before;
            for (a, r) in actions.iter().zip(&log) {
                let (old, new) = (exact(&cur, r.actor, r.dropped), exact(&cur, r.actor, r.added));
                ensure(new > old, || format!("seed {seed}: replacement by {} does not improve", r.actor))?;
                let node_before = exact_node(&cur, r.actor);
                let next_c = trace.push(a.clone()).map_err(|e| e.to_string())?.clone();
                ensure(exact_node(&next_c, r.actor) > node_before, || {
                    format!("seed {seed}: node value of {} does not increase", r.actor)
                })?;
                cur = next_c;
                replacements += 1;
            }
            c = next;
            rounds += 1;
            ensure(rounds < 10_000, || format!("seed {seed}: no convergence in 10000 rounds"))?;
        }
        for p in &ids {
            ensure(lsa_rule_r(&c, *p, &ProximityCriterion).is_none(), || format!("seed {seed}: {p} still improvable"))?;
            ensure(is_p_stable(&c, *p, &gc, &model) == Ok(true), || format!("seed {seed}: {p} not p-stable"))?;
        }
        let v = classify(&trace, &gc, &model, KernelKind::Topological).map_err(|e| e.to_string())?;
        let ob = [
            check_safety(&trace, &gc).is_holds(),
            check_weak_liveness(&trace, &gc, &model).map(|r| r.is_holds()).unwrap_or(false),
            check_liveness(&trace, &gc, &model).map(|r| r.is_holds()).unwrap_or(false),
            check_kernel_preservation(&trace, &gc, KernelKind::Topological).is_holds(),
        ];
        col.verdicts.push((v, ob));
    }
    Ok(format!("200 graphs p-stable, {replacements} replacements strictly increasing"))
}

// ---------------------------------------------------------------- 2

fn can_partition_oracle(c: &Configuration, dims: usize) -> Result<(), String> {
    let mut boxes = Vec::new();
    for p in c.active() {
        let s = can_state(c, p).ok_or(format!("{p} has no CAN state"))?;
        ensure(s.is_joined(), || format!("{p} not joined at quiescence"))?;
        boxes.extend(s.zones.iter().cloned());
    }
    let full = (SCALE as u128).pow(dims as u32);
    let total: u128 = boxes.iter().map(|z| (0..dims).map(|k| (z.hi[k] - z.lo[k]) as u128).product::<u128>()).sum();
    ensure(total == full, || format!("volumes sum to {total}, expected {full}"))?;
    for (i, a) in boxes.iter().enumerate() {
        for b in &boxes[i + 1..] {
            let overlap = (0..dims).all(|k| a.lo[k] < b.hi[k] && b.lo[k] < a.hi[k]);
            ensure(!overlap, || format!("interiors of {a:?} and {b:?} intersect"))?;
        }
    }
    Ok(())
}

fn can_scenario(seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
    let dims = rng.gen_range(2..=3i64);
    let mut d = demon(DemonClass::Finite);
    d.events = Some(rng.gen_range(2..=8));
    scenario(
        "can",
        ProtocolKind::Can,
        single("can"),
        rng.gen_range(4..=16),
        3000,
        seed,
        d,
        table(&[("dims", toml::Value::Integer(dims))]),
    )
}

fn criterion2(col: &mut Collected) -> Check {
    let mut quiescent = 0usize;
    for seed in 0..100 {
        let s = can_scenario(seed);
        let run = simulate(&s).map_err(|e| format!("seed {seed}: {e}"))?;
        let v = &run.report.verdict;
        ensure(v.result(Property::Safety).is_holds(), || {
            format!("seed {seed}: safety {:?}", v.result(Property::Safety))
        })?;
        ensure(v.result(Property::WeakLiveness).is_holds(), || format!("seed {seed}: weak liveness not established"))?;
        let Driver::Can(m) = &run.driver else { unreachable!() };
        for (i, c) in run.trace.configurations.iter().enumerate() {
            if is_quiescent(m, c) {
                can_partition_oracle(c, m.dims).map_err(|e| format!("seed {seed} configuration {i}: {e}"))?;
                quiescent += 1;
            }
        }
        collect_run(col, &run);
    }
    Ok(format!("100 runs safe and weakly live; partition exact at {quiescent} quiescent configurations"))
}

// ---------------------------------------------------------------- 3

const PASTRY_CRITERIA: [&str; 3] = ["pastry-routing", "pastry-leaf", "pastry-neighbor"];

fn pastry_scenario(seed: u64, criterion: CriterionRef) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(2000 + seed);
    let mut d = demon(DemonClass::Finite);
    d.events = Some(rng.gen_range(2..=6));
    let int = toml::Value::Integer;
    scenario(
        "pastry",
        ProtocolKind::Pastry,
        criterion,
        rng.gen_range(6..=16),
        4000,
        seed,
        d,
        table(&[("b", int(2)), ("digits", int(8)), ("leaf", int(4)), ("neighborhood", int(4))]),
    )
}

/// Independent prefix check: the slot `(row, col)` of `p` may only hold a
/// key sharing exactly `row` leading digits with `p` and having `col` next.
fn slot_violations(c: &Configuration, b: u32, digits: usize) -> usize {
    let digit = |k: u64, i: usize| ((k >> (b as usize * (digits - 1 - i))) & ((1 << b) - 1)) as usize;
    let mut bad = 0;
    for p in c.active() {
        let Some(s) = pastry_state(c, p) else { continue };
        for (row, cols) in s.routing.iter().enumerate() {
            for (col, e) in cols.iter().enumerate() {
                let Some(q) = e else { continue };
                let Some(t) = pastry_state(c, *q) else { continue };
                let shared = (0..digits).take_while(|i| digit(s.key, *i) == digit(t.key, *i)).count();
                if shared != row || digit(t.key, row) != col {
                    bad += 1;
                }
            }
        }
    }
    bad
}

fn criterion3(col: &mut Collected) -> Check {
    let composite = CriterionRef::Composite(PASTRY_CRITERIA.iter().map(|s| s.to_string()).collect());
    let mut checked = 0;
    for seed in 0..100 {
        let run = simulate(&pastry_scenario(seed, composite.clone())).map_err(|e| format!("seed {seed}: {e}"))?;
        let Driver::Pastry(m) = &run.driver else { unreachable!() };
        let mut crits: Vec<(String, Arc<dyn Criterion>)> = vec![("composite".into(), run.criterion())];
        for name in PASTRY_CRITERIA {
            let s = pastry_scenario(seed, single(name));
            crits.push((name.into(), s.criterion().map_err(|e| e.to_string())?));
        }
        for (name, crit) in &crits {
            ensure(check_safety(&run.trace, crit.as_ref()).is_holds(), || format!("seed {seed}: {name} safety fails"))?;
            let wl = check_weak_liveness(&run.trace, crit.as_ref(), m).map_err(|e| e.to_string())?;
            ensure(wl.is_holds(), || format!("seed {seed}: {name} weak liveness {:?}", wl.status))?;
        }
        for (i, c) in run.trace.configurations.iter().enumerate() {
            if is_quiescent(m, c) {
                let bad = slot_violations(c, m.params.b, m.params.digits);
                ensure(bad == 0, || format!("seed {seed} configuration {i}: {bad} routing slot violations"))?;
                checked += 1;
            }
        }
        collect_run(col, &run);
    }
    Ok(format!("100 runs x 4 criteria safe and weakly live; 0 slot violations over {checked} quiescent configurations"))
}

// ---------------------------------------------------------------- 4

fn leader_scenario(seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(3000 + seed);
    let alpha = 1 + (seed % 5) as i64;
    let mut d = demon(DemonClass::Bounded);
    d.bound = Some(rng.gen_range(1..=5));
    scenario(
        "leader",
        ProtocolKind::Leader,
        single("leader"),
        alpha as usize + rng.gen_range(2..=5),
        2500,
        seed,
        d,
        table(&[("alpha", toml::Value::Integer(alpha))]),
    )
}

fn criterion4(col: &mut Collected) -> Check {
    for seed in 0..100 {
        let run = simulate(&leader_scenario(seed)).map_err(|e| format!("seed {seed}: {e}"))?;
        let Driver::Leader(m) = &run.driver else { unreachable!() };
        let out = leaders(&run.driver, run.trace.last());
        let chosen: BTreeSet<NodeId> = out.values().copied().collect();
        ensure(out.len() == run.trace.last().len(), || format!("seed {seed}: some active node has no leader"))?;
        ensure(chosen.len() == 1, || format!("seed {seed}: leaders disagree: {out:?}"))?;
        let l = *chosen.first().unwrap();
        ensure(m.stable.contains(&l), || format!("seed {seed}: leader {l} is not stable ({:?})", m.stable))?;
        let class = run.report.verdict.class;
        ensure(class >= Class::SelfOrganizing, || format!("seed {seed}: class {class}"))?;
        collect_run(col, &run);
    }
    Ok("100 runs, alpha 1..5: agreement on a stable leader, class >= self".into())
}

// ---------------------------------------------------------------- 5

fn query_scenario(seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(4000 + seed);
    let n = rng.gen_range(6..=16);
    let mut d = demon(DemonClass::KernelBased);
    d.kernel_min_size = Some(rng.gen_range(1..=3));
    d.events = Some(rng.gen_range(3..=6));
    let int = toml::Value::Integer;
    scenario(
        "query",
        ProtocolKind::Query,
        single("query"),
        n,
        200,
        seed,
        d,
        table(&[("degree", int(2)), ("items_per_node", int(2)), ("prefix", toml::Value::String("a".into()))]),
    )
}

/// Matching values of nodes reachable from the initiator, in the initial
/// graph, through nodes active during the whole query.
fn reachable_values(t: &Trace, until: usize) -> BTreeSet<DataItem> {
    let survivors: BTreeSet<NodeId> =
        t.configurations[0].active().filter(|p| t.configurations[..=until].iter().all(|c| c.is_active(*p))).collect();
    let c0 = &t.configurations[0];
    let mut seen = BTreeSet::from([INITIATOR]);
    let mut stack = vec![INITIATOR];
    while let Some(p) = stack.pop() {
        for q in c0.neighbors(p) {
            if survivors.contains(q) && seen.insert(*q) {
                stack.push(*q);
            }
        }
    }
    seen.iter().flat_map(|p| c0.data_of(*p).iter().filter(|d| d.0.starts_with(b"a")).cloned()).collect()
}

fn criterion5(col: &mut Collected) -> Check {
    let mut overlapping = 0;
    for seed in 0..100 {
        let run = simulate(&query_scenario(seed)).map_err(|e| format!("seed {seed}: {e}"))?;
        let t = &run.trace;
        let report_at = t
            .actions
            .iter()
            .position(|a| a.kind == ActionKind::IO)
            .ok_or_else(|| format!("seed {seed}: query never completed"))?;
        if t.actions[..report_at].iter().any(|a| a.kind.is_dynamic()) {
            overlapping += 1;
        }
        let got: BTreeSet<DataItem> = query_result(t).unwrap_or_default().into_iter().collect();
        let want = reachable_values(t, report_at);
        let missed: Vec<_> = want.difference(&got).collect();
        ensure(missed.is_empty(), || format!("seed {seed}: query missed {missed:?}"))?;
        let kp = check_kernel_preservation(t, run.criterion().as_ref(), KernelKind::Data);
        ensure(kp.is_holds(), || format!("seed {seed}: kernel preservation {:?}", kp.status))?;
        let class = run.report.verdict.class;
        ensure(class == Class::Strong, || format!("seed {seed}: class {class}"))?;
        for c in [&t.configurations[report_at + 1], t.last()] {
            for p in c.active().filter(|p| query_state(c, *p).is_some_and(|s| s.done)) {
                let g = gamma_query(c, p).map_err(|e| format!("seed {seed}: {e:?}"))?;
                ensure(g == 1.0, || format!("seed {seed}: completing node {p} has score {g}"))?;
            }
        }
        collect_run(col, &run);
    }
    Ok(format!("100 runs ({overlapping} with churn during the query): 0 misses, kernel preserved, strong, score 1"))
}

// ---------------------------------------------------------------- 6

fn criterion6(col: &mut Collected) -> Check {
    let run = simulate(&theorem1_scenario(1, 10_000, DemonClass::Adversarial)).map_err(|e| e.to_string())?;
    let crit = run.criterion();
    let t = &run.trace;
    ensure(t.len() == 10_000, || format!("trace stopped at {} events", t.len()))?;
    ensure(check_safety(t, crit.as_ref()).is_holds(), || "safety fails".into())?;
    for (i, c) in t.configurations.iter().enumerate() {
        let stable = all_p_stable(c, crit.as_ref(), run.driver.model()).map_err(|e| e.to_string())?;
        ensure(!stable, || format!("configuration {i} is p-stable for all nodes"))?;
    }
    let live = run.report.verdict.result(Property::Liveness);
    ensure(live.status == Status::PendingAtHorizon, || format!("liveness {:?}", live.status))?;
    collect_run(col, &run);

    let calm = simulate(&theorem1_scenario(1, 10_000, DemonClass::Bounded)).map_err(|e| e.to_string())?;
    ensure(calm.report.outcome.all_stable_at_end, || "no convergence under Bounded(0)".into())?;
    collect_run(col, &calm);

    let out = Command::new(env!("CARGO_BIN_EXE_selforg"))
        .args(["demo-theorem1", "--seed", "1", "--horizon", "10000"])
        .output()
        .map_err(|e| e.to_string())?;
    let text = String::from_utf8_lossy(&out.stdout);
    ensure(out.status.success() && text.contains("liveness: PendingAtHorizon"), || {
        format!("demo-theorem1 printed:\n{text}")
    })?;
    Ok(format!(
        "{} C/D actions, no all-stable configuration, liveness pending; converges without churn",
        t.dynamic_count()
    ))
}

// ---------------------------------------------------------------- 7

fn fuzz_scenario(i: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(5000 + i);
    let protocols =
        [ProtocolKind::Lsa, ProtocolKind::Can, ProtocolKind::Pastry, ProtocolKind::Leader, ProtocolKind::Query];
    let classes = [
        DemonClass::Bounded,
        DemonClass::Finite,
        DemonClass::KernelBased,
        DemonClass::Arbitrary,
        DemonClass::Adversarial,
    ];
    let protocol = protocols[rng.gen_range(0..protocols.len())];
    let n = rng.gen_range(3..=10usize);
    let mut d = demon(classes[rng.gen_range(0..classes.len())]);
    match d.class {
        DemonClass::Bounded => d.bound = Some(rng.gen_range(0..=5)),
        DemonClass::KernelBased => d.kernel_min_size = Some(rng.gen_range(1..=n.min(3))),
        _ => {}
    }
    if d.class != DemonClass::Bounded {
        d.events = Some(rng.gen_range(1..=8));
    }
    let int = toml::Value::Integer;
    let (criterion, params) = match protocol {
        ProtocolKind::Lsa => (single("proximity"), table(&[("degree", int(rng.gen_range(1..=3)))])),
        ProtocolKind::Can => (single("can"), table(&[("dims", int(rng.gen_range(1..=3)))])),
        ProtocolKind::Pastry => {
            let pick = rng.gen_range(0..4);
            let c = if pick == 3 {
                CriterionRef::Composite(PASTRY_CRITERIA.iter().map(|s| s.to_string()).collect())
            } else {
                single(PASTRY_CRITERIA[pick])
            };
            (c, table(&[("b", int(2)), ("digits", int(6)), ("leaf", int(4)), ("neighborhood", int(4))]))
        }
        ProtocolKind::Leader => (single("leader"), table(&[("alpha", int(rng.gen_range(1..=n.min(4)) as i64))])),
        ProtocolKind::Query => (single("query"), table(&[])),
    };
    scenario("fuzz", protocol, criterion, n, rng.gen_range(50..=300), i, d, params)
}

fn criterion7(col: &mut Collected) -> Check {
    for i in 0..500 {
        let s = fuzz_scenario(i);
        let run = simulate(&s).map_err(|e| format!("fuzz {i}: {e}"))?;
        collect_run(col, &run);
    }
    let mut violations = Vec::new();
    for (k, (v, ob)) in col.verdicts.iter().enumerate() {
        let [safety, weak, live, kernel] = *ob;
        let needed = match v.class {
            Class::None => true,
            Class::Weak => safety && weak,
            Class::SelfOrganizing => safety && weak && live,
            Class::Strong => safety && weak && live && kernel,
        };
        // the class is also the largest one the obligations allow
        let derived = if safety && weak && live && kernel {
            Class::Strong
        } else if safety && weak && live {
            Class::SelfOrganizing
        } else if safety && weak {
            Class::Weak
        } else {
            Class::None
        };
        if !needed || derived != v.class || !selforg::monitors::hierarchy_consistent(v) {
            violations.push(k);
        }
    }
    let mut by_class = BTreeMap::new();
    for (v, _) in &col.verdicts {
        *by_class.entry(v.class.to_string()).or_insert(0) += 1;
    }
    ensure(violations.is_empty(), || {
        format!("{} hierarchy violations, first at trace {}", violations.len(), violations[0])
    })?;
    Ok(format!("{} traces, 0 violations, classes {by_class:?}", col.verdicts.len()))
}

// ---------------------------------------------------------------- 8

fn fingerprint(run: &Run) -> Result<Vec<u8>, String> {
    let mut h = Sha256::new();
    let mut buf = Vec::new();
    write_trace(&run.trace, Some(&run.scenario), 50, &mut buf).map_err(|e| e.to_string())?;
    h.update(&buf);
    for f in [ReportFormat::Records, ReportFormat::CsvSummary] {
        h.update(render_report(&run.report, f).map_err(|e| e.to_string())?.as_bytes());
    }
    Ok(h.finalize().to_vec())
}

fn criterion8(col: &Collected) -> Check {
    let mut n = 0;
    for s in &col.scenarios {
        let a = simulate(s).map_err(|e| e.to_string())?;
        let b = simulate(s).map_err(|e| e.to_string())?;
        ensure(fingerprint(&a)? == fingerprint(&b)?, || {
            format!("scenario {} seed {} differs between runs", s.name, s.seed)
        })?;
        n += 1;
    }
    Ok(format!("{n} scenarios re-run twice with byte-identical trace and report files"))
}

fn main() -> ExitCode {
    let mut col = Collected { verdicts: Vec::new(), scenarios: Vec::new() };
    let mut failed = 0;
    let mut line = |k: usize, title: &str, start: Instant, r: Check| {
        let secs = start.elapsed().as_secs_f64();
        match r {
            Ok(msg) => println!("criterion {k} PASS {title} ({secs:.1}s): {msg}"),
            Err(msg) => {
                failed += 1;
                println!("criterion {k} FAIL {title} ({secs:.1}s): {msg}");
            }
        }
    };
    let t = Instant::now();
    let r = criterion1(&mut col);
    line(1, "LSA convergence", t, r);
    let t = Instant::now();
    let r = criterion2(&mut col);
    line(2, "CAN weak self-organization", t, r);
    let t = Instant::now();
    let r = criterion3(&mut col);
    line(3, "Pastry weak self-organization", t, r);
    let t = Instant::now();
    let r = criterion4(&mut col);
    line(4, "leader self-organization", t, r);
    let t = Instant::now();
    let r = criterion5(&mut col);
    line(5, "one-shot query strong self-organization", t, r);
    let t = Instant::now();
    let r = criterion6(&mut col);
    line(6, "divergent execution under the adversarial demon", t, r);
    let t = Instant::now();
    let r = criterion7(&mut col);
    line(7, "class hierarchy", t, r);
    let t = Instant::now();
    let r = criterion8(&col);
    line(8, "determinism", t, r);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
