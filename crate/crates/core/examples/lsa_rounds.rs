//! Greedy local self-organization on a static graph: eight nodes on a line,
//! each starting with a far-away view, run rule R round by round until no
//! node can improve.

use std::collections::BTreeSet;
use std::sync::Arc;

use selforg::criteria::proximity::ProximityCriterion;
use selforg::criteria::{aggregate_global, GlobalCriterion};
use selforg::lsa::{lsa_configuration, lsa_rule_r, run_lsa_round};
use selforg::NodeId;

fn main() {
    let n = 8u64;
    // node i sits at x = 10 i and initially knows the two nodes "opposite" it
    let nodes: Vec<_> = (0..n)
        .map(|i| {
            let view = BTreeSet::from([NodeId((i + n / 2) % n), NodeId((i + n / 2 + 1) % n)]);
            (NodeId(i), vec![10 * i as i64, 0], view)
        })
        .collect();
    let mut c = lsa_configuration(&nodes);
    let order: Vec<NodeId> = (0..n).map(NodeId).collect();
    let global = GlobalCriterion::new(Arc::new(ProximityCriterion));

    println!("round 0: global {:.4}", aggregate_global(&global, &c).summary());
    for round in 1.. {
        let (next, _, log) = run_lsa_round(&c, &order, &ProximityCriterion);
        for r in &log {
            println!("  {} drops {} ({:.3}) for {} ({:.3})", r.actor, r.dropped, r.old_score, r.added, r.new_score);
        }
        c = next;
        println!("round {round}: {} replacements, global {:.4}", log.len(), aggregate_global(&global, &c).summary());
        if log.is_empty() {
            break;
        }
    }
    assert!(order.iter().all(|p| lsa_rule_r(&c, *p, &ProximityCriterion).is_none()));
    for p in &order {
        println!("{p}: {:?}", c.neighbors(*p));
    }
}
