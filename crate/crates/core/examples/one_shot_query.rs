//! One-shot query under kernel-based churn: the initiator collects every
//! value starting with "a" that is reachable through nodes that stay.

use std::path::Path;

use selforg::criteria::query::gamma_query;
use selforg::engine::{query_result, simulate, Scenario, INITIATOR};
use selforg::ActionKind;

fn main() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/query.toml");
    let s = Scenario::load(&path).unwrap();
    let run = simulate(&s).unwrap();
    let t = &run.trace;

    for (i, a) in t.actions.iter().enumerate() {
        match a.kind {
            ActionKind::Connect | ActionKind::Disconnect => println!("event {i}: {:?} {}", a.kind, a.actor),
            ActionKind::IO => {
                println!(
                    "event {i}: initiator reports, score {}",
                    gamma_query(&t.configurations[i + 1], INITIATOR).unwrap()
                );
                break;
            }
            _ => {}
        }
    }
    let values: Vec<String> =
        query_result(t).unwrap_or_default().iter().map(|d| String::from_utf8_lossy(&d.0).into_owned()).collect();
    println!("{} values: {}", values.len(), values.join(" "));
    println!("class: {}", run.report.verdict.class);
}
