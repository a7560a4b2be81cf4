//! Monotonic composition: Pastry's routing, leaf and neighborhood criteria
//! span different parts of the node state, so they compose. Composing a
//! criterion with itself is refused.

use std::sync::Arc;

use selforg::criteria::pastry::{LeafCriterion, NeighborhoodCriterion, RoutingCriterion};
use selforg::criteria::{check_independence, compose_monotonic, Criterion, GlobalCriterion};
use selforg::engine::{simulate, CriterionRef, Scenario};
use selforg::overlays::pastry::PastryParams;

fn main() {
    let params = PastryParams { b: 2, digits: 8, leaf: 4, neighborhood: 4, maintenance_period: 16 };
    let routing = GlobalCriterion::new(Arc::new(RoutingCriterion { params }));
    let leaf = GlobalCriterion::new(Arc::new(LeafCriterion { params }));
    let nbhd = GlobalCriterion::new(Arc::new(NeighborhoodCriterion { params }));
    println!("routing vs leaf independent: {}", check_independence(&routing, &leaf));
    println!("routing vs routing: {}", compose_monotonic(vec![routing.clone(), routing.clone()]).unwrap_err());
    let all = compose_monotonic(vec![routing, leaf, nbhd]).unwrap();
    println!("composite: {}", all.name());

    let mut s =
        Scenario::load(&std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/pastry.toml")).unwrap();
    s.criterion =
        CriterionRef::Composite(vec!["pastry-routing".into(), "pastry-leaf".into(), "pastry-neighbor".into()]);
    let run = simulate(&s).unwrap();
    let t = &run.trace;
    for f in t.fragments().iter().take(6) {
        let (b, e) = (all.global(t.begin(f), None), all.global(t.end(f), None));
        println!(
            "fragment {}: {:.3} -> {:.3}, end dominates begin: {}",
            f.index,
            b.summary(),
            e.summary(),
            all.global_le(&b, &e)
        );
    }
    println!("class under the composite: {}", run.report.verdict.class);
}
