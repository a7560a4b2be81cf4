//! Eventual leader election under bounded churn: run the shipped leader
//! scenario and show every node's trust set, epoch and chosen leader.

use std::path::Path;

use selforg::engine::{leaders, simulate, Driver, Scenario};
use selforg::protocols::leader::leader_state;

fn main() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/leader.toml");
    let s = Scenario::load(&path).expect("shipped scenario loads");
    let run = simulate(&s).unwrap();
    let Driver::Leader(m) = &run.driver else { unreachable!() };

    println!("universe {:?}, alpha {}, stable {:?}", m.universe, m.alpha, m.stable);
    println!("{} events, {} churn actions", run.trace.len(), run.trace.dynamic_count());
    let end = run.trace.last();
    let chosen = leaders(&run.driver, end);
    for p in end.active() {
        let st = leader_state(end, p).unwrap();
        println!("  {p}: trust {:?} date {} leader {}", st.trust, st.date, chosen[&p]);
    }
    println!("class: {}", run.report.verdict.class);
}
