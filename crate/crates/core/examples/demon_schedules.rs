//! The churn classes side by side: one schedule per demon for the same
//! eight-node system, with the churn-rate metric of the resulting run.

use std::collections::BTreeSet;

use selforg::demons::{generate_schedule, DemonClass, DemonSpec};
use selforg::engine::{simulate, theorem1_scenario, DemonConfig};

fn main() {
    let horizon = 400;
    let specs = [
        DemonSpec::bounded(3, 11, horizon),
        DemonSpec::new(DemonClass::Finite, 11, horizon),
        DemonSpec::kernel_based(4, 11, horizon),
        DemonSpec::new(DemonClass::Arbitrary, 11, horizon),
    ];
    for spec in &specs {
        let s = generate_schedule(spec, 8, &BTreeSet::new()).unwrap();
        let shown: Vec<String> = s
            .events
            .iter()
            .take(8)
            .map(|e| {
                format!("{}:{}{}", e.index, if e.kind == selforg::ActionKind::Connect { "+" } else { "-" }, e.target)
            })
            .collect();
        println!("{:?}: {} events [{}{}]", spec.class, s.len(), shown.join(" "), if s.len() > 8 { " ..." } else { "" });
    }

    // the same classes driving an LSA run, plus the adversary
    for class in [
        DemonClass::Bounded,
        DemonClass::Finite,
        DemonClass::KernelBased,
        DemonClass::Arbitrary,
        DemonClass::Adversarial,
    ] {
        let mut sc = theorem1_scenario(11, horizon, class);
        sc.demon = DemonConfig {
            class,
            bound: (class == DemonClass::Bounded).then_some(3),
            kernel_min_size: (class == DemonClass::KernelBased).then_some(4),
            events: None,
            seed: None,
        };
        let run = simulate(&sc).unwrap();
        println!(
            "{class:?}: {} C/D actions, churn rate {:.4}, class {}",
            run.trace.dynamic_count(),
            run.report.metrics.churn_rate,
            run.report.verdict.class
        );
    }
}
