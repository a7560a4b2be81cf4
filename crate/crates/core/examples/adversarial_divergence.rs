//! The adversary that keeps a system from converging: whenever LSA is one
//! step away from a configuration where every node is p-stable, it replaces
//! the whole population. Safety holds in every fragment, yet liveness stays
//! pending. Without churn the same system converges in a few steps.

use selforg::demons::DemonClass;
use selforg::engine::{simulate, theorem1_scenario};
use selforg::monitors::Property;

fn main() {
    let adv = simulate(&theorem1_scenario(1, 2000, DemonClass::Adversarial)).unwrap();
    let v = &adv.report.verdict;
    println!("adversarial: {} events, {} fragments", adv.trace.len(), adv.report.metrics.fragment_count);
    for p in [Property::Safety, Property::WeakLiveness, Property::Liveness] {
        println!("  {p:?}: {:?}", v.result(p).status);
    }
    if let Some(w) = &v.result(Property::Liveness).witness {
        println!("  witness: {}", w.note);
    }
    let tail: Vec<String> = adv
        .report
        .metrics
        .fragments
        .iter()
        .rev()
        .take(5)
        .map(|r| format!("{:.3}->{:.3}", r.begin_gamma, r.end_gamma))
        .collect();
    println!("  last fragments (begin->end global value): {}", tail.join(", "));
    println!("  every node p-stable at the end: {}", adv.report.outcome.all_stable_at_end);

    let calm = simulate(&theorem1_scenario(1, 2000, DemonClass::Bounded)).unwrap();
    println!(
        "no churn: {} events, all p-stable {}, class {}",
        calm.trace.len(),
        calm.report.outcome.all_stable_at_end,
        calm.report.verdict.class
    );
}
