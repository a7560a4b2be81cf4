//! Run reports: JSON records and a plottable per-fragment CSV.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::criteria::Criterion;
use crate::demons::churn_rate;
use crate::model::{DataItem, NodeId, Trace};
use crate::monitors::{all_p_stable, fragment_series, FragmentRow, PropertyResult, Verdict};

use super::{leaders, query_result, Driver, EngineError, ProtocolKind, Scenario};

pub const CSV_HEADER: &str = "fragment_index,begin_gamma,end_gamma,kernel_size,churn_events";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub events: usize,
    pub fragment_count: usize,
    pub churn_events: usize,
    pub churn_rate: f64,
    /// Begin and end global value of every fragment, interleaved.
    pub gamma_series: Vec<f64>,
    pub fragments: Vec<FragmentRow>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub all_stable_at_end: bool,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub leaders: BTreeMap<NodeId, NodeId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query_values: Option<Vec<DataItem>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: String,
    pub protocol: ProtocolKind,
    pub seed: u64,
    pub verdict: Verdict,
    pub metrics: Metrics,
    pub outcome: Outcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_path: Option<String>,
}

impl RunReport {
    pub fn build(s: &Scenario, t: &Trace, crit: &dyn Criterion, driver: &Driver, verdict: Verdict) -> Self {
        let fragments = fragment_series(t, crit, driver.kernel_kind());
        let gamma_series = fragments.iter().flat_map(|r| [r.begin_gamma, r.end_gamma]).collect();
        let metrics = Metrics {
            events: t.len(),
            fragment_count: fragments.len(),
            churn_events: t.dynamic_count(),
            churn_rate: churn_rate(t),
            gamma_series,
            fragments,
        };
        let outcome = Outcome {
            all_stable_at_end: all_p_stable(t.last(), crit, driver.model()).unwrap_or(false),
            leaders: leaders(driver, t.last()),
            query_values: query_result(t),
        };
        RunReport {
            scenario: s.name.clone(),
            protocol: s.protocol,
            seed: s.seed,
            verdict,
            metrics,
            outcome,
            trace_path: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    /// One JSON record per line.
    Records,
    CsvSummary,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "records" | "json" => Ok(ReportFormat::Records),
            "csv" | "csv-summary" => Ok(ReportFormat::CsvSummary),
            other => Err(format!("unknown format {other:?} (records, csv-summary)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum ReportRecord {
    Run { scenario: String, protocol: ProtocolKind, seed: u64, trace_path: Option<String> },
    Verdict { class: String, criterion: String, pending: Vec<crate::monitors::Property> },
    Property(PropertyResult),
    Metrics { events: usize, fragment_count: usize, churn_events: usize, churn_rate: f64, gamma_series: Vec<f64> },
    Outcome(Outcome),
}

pub fn report_records(r: &RunReport) -> Vec<ReportRecord> {
    let mut out = vec![
        ReportRecord::Run {
            scenario: r.scenario.clone(),
            protocol: r.protocol,
            seed: r.seed,
            trace_path: r.trace_path.clone(),
        },
        ReportRecord::Verdict {
            class: r.verdict.class.to_string(),
            criterion: r.verdict.criterion.clone(),
            pending: r.verdict.pending.clone(),
        },
    ];
    out.extend(r.verdict.results.iter().cloned().map(ReportRecord::Property));
    let m = &r.metrics;
    out.push(ReportRecord::Metrics {
        events: m.events,
        fragment_count: m.fragment_count,
        churn_events: m.churn_events,
        churn_rate: m.churn_rate,
        gamma_series: m.gamma_series.clone(),
    });
    out.push(ReportRecord::Outcome(r.outcome.clone()));
    out
}

pub fn csv_summary(rows: &[FragmentRow]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        let _ =
            writeln!(s, "{},{},{},{},{}", r.fragment_index, r.begin_gamma, r.end_gamma, r.kernel_size, r.churn_events);
    }
    s
}

pub fn render_report(r: &RunReport, format: ReportFormat) -> Result<String, EngineError> {
    Ok(match format {
        ReportFormat::Records => {
            let mut s = String::new();
            for rec in report_records(r) {
                s.push_str(&serde_json::to_string(&rec)?);
                s.push('\n');
            }
            s
        }
        ReportFormat::CsvSummary => csv_summary(&r.metrics.fragments),
    })
}

pub fn emit_report(r: &RunReport, format: ReportFormat, path: &Path) -> Result<(), EngineError> {
    std::fs::write(path, render_report(r, format)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(i: usize, b: f64, e: f64) -> FragmentRow {
        FragmentRow { fragment_index: i, begin_gamma: b, end_gamma: e, kernel_size: 3, churn_events: i.min(1) }
    }

    #[test]
    fn one_fragment_one_row() {
        let csv = csv_summary(&[row(0, 0.25, 0.5)]);
        assert_eq!(csv, format!("{CSV_HEADER}\n0,0.25,0.5,3,0\n"));
    }

    #[test]
    fn csv_values_parse_back_exactly() {
        let rows = [row(0, 0.1 + 0.2, 1.0 / 3.0), row(1, 2.0f64.sqrt(), 1e-17)];
        let csv = csv_summary(&rows);
        for (line, r) in csv.lines().skip(1).zip(&rows) {
            let cols: Vec<&str> = line.split(',').collect();
            assert_eq!(cols[1].parse::<f64>().unwrap(), r.begin_gamma);
            assert_eq!(cols[2].parse::<f64>().unwrap(), r.end_gamma);
        }
    }

    #[test]
    fn format_names() {
        assert_eq!("csv-summary".parse::<ReportFormat>(), Ok(ReportFormat::CsvSummary));
        assert_eq!("records".parse::<ReportFormat>(), Ok(ReportFormat::Records));
        assert!("xml".parse::<ReportFormat>().is_err());
    }
}
