use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use selforg::demons::{validate_schedule, DemonClass};
use selforg::engine::report::render_report;
use selforg::engine::{
    read_trace, replay_report, run_scenario, simulate, theorem1_scenario, EngineError, ReportFormat, RunReport,
    Scenario,
};
use selforg::monitors::{Class, Property};

#[derive(Parser)]
#[command(name = "selforg", version, about = "Run, replay and classify self-organizing protocol traces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct Common {
    /// Output format for the report printed on stdout.
    #[arg(long, default_value = "records")]
    format: ReportFormat,
    /// Exit nonzero unless the verdict is at least this class.
    #[arg(long)]
    expect: Option<Class>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and write trace.jsonl, report.jsonl and summary.csv.
    Run {
        scenario: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        horizon: Option<u64>,
        #[arg(long, default_value_t = 100)]
        snapshot_interval: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Re-check a trace file and print its verdict.
    Replay {
        trace: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Check a scenario against the schema and print its churn schedule;
    /// with --trace, also check the trace against the demon class.
    Validate {
        scenario: PathBuf,
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        horizon: Option<u64>,
    },
    /// LSA under the adversarial demon, then the same system without churn.
    DemoTheorem1 {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        horizon: u64,
        /// Also write the adversarial run's files here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        snapshot_interval: usize,
    },
}

fn gate(r: &RunReport, expect: Option<Class>) -> ExitCode {
    match expect {
        Some(want) if r.verdict.class < want => {
            eprintln!("verdict {} is below the expected {want}", r.verdict.class);
            ExitCode::from(2)
        }
        _ => ExitCode::SUCCESS,
    }
}

fn print(r: &RunReport, format: ReportFormat) -> Result<(), EngineError> {
    print!("{}", render_report(r, format)?);
    Ok(())
}

fn overrides(mut s: Scenario, seed: Option<u64>, horizon: Option<u64>) -> Scenario {
    if let Some(x) = seed {
        s.seed = x;
    }
    if let Some(h) = horizon {
        s.horizon = h;
    }
    s
}

fn demo(seed: u64, horizon: u64, out: Option<PathBuf>, snapshot_interval: usize) -> Result<ExitCode, EngineError> {
    let adv = theorem1_scenario(seed, horizon, DemonClass::Adversarial);
    let run = match &out {
        Some(dir) => run_scenario(&adv, dir, snapshot_interval)?.0,
        None => simulate(&adv)?,
    };
    let v = &run.report.verdict;
    let live = v.result(Property::Liveness);
    println!("adversarial demon, horizon {horizon}, seed {seed}");
    println!("  events: {}, C/D actions: {}", run.trace.len(), run.trace.dynamic_count());
    println!("  safety: {:?}", v.result(Property::Safety).status);
    println!("  liveness: {:?}", live.status);
    if let Some(w) = &live.witness {
        let shown: Vec<String> = w.fragments.iter().take(8).map(|f| f.to_string()).collect();
        println!(
            "  pending witness: {} (fragments {}{})",
            w.note,
            shown.join(","),
            if w.fragments.len() > 8 { ",..." } else { "" }
        );
    }
    println!("  all nodes p-stable at the end: {}", run.report.outcome.all_stable_at_end);
    println!("  class: {}", v.class);

    let calm = simulate(&theorem1_scenario(seed, horizon, DemonClass::Bounded))?;
    println!("no churn, same system");
    println!("  events: {}", calm.trace.len());
    println!("  all nodes p-stable at the end: {}", calm.report.outcome.all_stable_at_end);
    println!("  class: {}", calm.report.verdict.class);
    let diverged = v.result(Property::Safety).is_holds() && !live.is_holds() && !run.report.outcome.all_stable_at_end;
    Ok(if diverged && calm.report.outcome.all_stable_at_end { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn main_inner() -> Result<ExitCode, EngineError> {
    match Cli::parse().command {
        Command::Run { scenario, out, seed, horizon, snapshot_interval, common } => {
            let s = overrides(Scenario::load(&scenario)?, seed, horizon);
            let (run, files) = run_scenario(&s, &out, snapshot_interval)?;
            print(&run.report, common.format)?;
            eprintln!("wrote {}, {}, {}", files.trace.display(), files.records.display(), files.csv.display());
            Ok(gate(&run.report, common.expect))
        }
        Command::Replay { trace, common } => {
            let tf = read_trace(&trace)?;
            let mut r = replay_report(&tf)?;
            r.trace_path = trace.file_name().map(|f| f.to_string_lossy().into_owned());
            print(&r, common.format)?;
            Ok(gate(&r, common.expect))
        }
        Command::Validate { scenario, trace, seed, horizon } => {
            let s = overrides(Scenario::load(&scenario)?, seed, horizon);
            let spec = s.demon_spec();
            let run = simulate(&s)?;
            println!("scenario ok: {:?} with {} C/D events scheduled", s.protocol, run.schedule.len());
            for e in &run.schedule.events {
                println!("  {:>6} {:?} {}{}", e.index, e.kind, e.target, if e.fresh { " (fresh)" } else { "" });
            }
            let ok = match trace {
                Some(p) => validate_schedule(&spec, &run.schedule, &read_trace(&p)?.trace),
                None => validate_schedule(&spec, &run.schedule, &run.trace),
            };
            println!("trace satisfies the {:?} demon: {ok}", spec.class);
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(2) })
        }
        Command::DemoTheorem1 { seed, horizon, out, snapshot_interval } => demo(seed, horizon, out, snapshot_interval),
    }
}

fn main() -> ExitCode {
    match main_inner() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
