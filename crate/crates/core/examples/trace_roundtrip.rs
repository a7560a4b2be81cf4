//! Writing a run to disk and checking it again from the files alone: the
//! replayed trace is verified hash by hash and yields the same verdict.

use std::path::Path;

use selforg::engine::report::{render_report, ReportFormat};
use selforg::engine::{read_trace, replay_report, run_scenario, Scenario};

fn main() {
    let s = Scenario::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/can.toml")).unwrap();
    let dir = std::env::temp_dir().join(format!("selforg-roundtrip-{}", std::process::id()));
    let (run, files) = run_scenario(&s, &dir, 50).unwrap();
    let bytes = std::fs::metadata(&files.trace).unwrap().len();
    println!("wrote {} ({bytes} bytes, {} actions)", files.trace.display(), run.trace.len());

    let back = read_trace(&files.trace).unwrap();
    assert_eq!(back.trace, run.trace);
    let again = replay_report(&back).unwrap();
    assert_eq!(again.verdict, run.report.verdict);
    println!("replayed: class {} ({} fragments)", again.verdict.class, again.metrics.fragment_count);
    print!("{}", render_report(&again, ReportFormat::CsvSummary).unwrap());
    std::fs::remove_dir_all(&dir).unwrap();
}
