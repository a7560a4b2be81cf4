//! Line-delimited trace files: a header with the initial configuration,
//! one record per action with the hash of the configuration it produced,
//! and full snapshots every `snapshot_interval` actions.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::model::{apply_action, Action, ActionKind, Configuration, NodeId, Payload, Trace};

use super::{EngineError, Scenario};

pub const TRACE_SCHEMA: &str = "selforg-trace/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TraceLine {
    Header {
        schema: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        scenario: Option<Scenario>,
        snapshot_interval: usize,
        initial: Configuration,
        initial_hash: String,
    },
    Action {
        seq: u64,
        kind: ActionKind,
        actor: NodeId,
        payload: Payload,
        post_state_hash: String,
    },
    Snapshot {
        seq: u64,
        configuration: Configuration,
    },
}

/// A trace read back from disk.
#[derive(Debug, Clone)]
pub struct TraceFile {
    pub scenario: Option<Scenario>,
    pub snapshot_interval: usize,
    pub trace: Trace,
}

fn write_line(w: &mut impl Write, line: &TraceLine) -> Result<(), EngineError> {
    serde_json::to_writer(&mut *w, line)?;
    w.write_all(b"\n")?;
    Ok(())
}

pub fn write_trace(
    t: &Trace,
    scenario: Option<&Scenario>,
    snapshot_interval: usize,
    w: &mut impl Write,
) -> Result<(), EngineError> {
    let initial = t.configurations[0].clone();
    let header = TraceLine::Header {
        schema: TRACE_SCHEMA.into(),
        scenario: scenario.cloned(),
        snapshot_interval,
        initial_hash: initial.state_hash(),
        initial,
    };
    write_line(w, &header)?;
    for (i, a) in t.actions.iter().enumerate() {
        let post = &t.configurations[i + 1];
        write_line(
            w,
            &TraceLine::Action {
                seq: a.seq,
                kind: a.kind,
                actor: a.actor,
                payload: a.payload.clone(),
                post_state_hash: post.state_hash(),
            },
        )?;
        if snapshot_interval > 0 && (i + 1) % snapshot_interval == 0 {
            write_line(w, &TraceLine::Snapshot { seq: a.seq, configuration: post.clone() })?;
        }
    }
    Ok(())
}

pub fn emit_trace(
    t: &Trace,
    scenario: Option<&Scenario>,
    snapshot_interval: usize,
    path: &Path,
) -> Result<(), EngineError> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    write_trace(t, scenario, snapshot_interval, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Parses and replays a trace, checking every post-state hash and snapshot.
pub fn parse_trace(r: impl BufRead) -> Result<TraceFile, EngineError> {
    let bad = |m: String| EngineError::Trace(m);
    let mut lines = r.lines().enumerate();
    let (_, first) = lines.next().ok_or_else(|| bad("empty file".into()))?;
    let TraceLine::Header { schema, scenario, snapshot_interval, initial, initial_hash } =
        serde_json::from_str(&first?)?
    else {
        return Err(bad("first line is not a header".into()));
    };
    if schema != TRACE_SCHEMA {
        return Err(bad(format!("unsupported schema {schema:?}")));
    }
    if initial.state_hash() != initial_hash {
        return Err(bad("initial configuration hash mismatch".into()));
    }
    let mut trace = Trace::new(initial);
    for (n, line) in lines {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        match serde_json::from_str(&line)? {
            TraceLine::Action { seq, kind, actor, payload, post_state_hash } => {
                if seq != trace.len() as u64 {
                    return Err(bad(format!("line {}: expected seq {}, found {seq}", n + 1, trace.len())));
                }
                let a = Action { seq, kind, actor, payload };
                let next = apply_action(trace.last(), &a)?;
                if next.state_hash() != post_state_hash {
                    return Err(bad(format!("line {}: post-state hash mismatch at seq {seq}", n + 1)));
                }
                trace.actions.push(a);
                trace.configurations.push(next);
            }
            TraceLine::Snapshot { seq, configuration } => {
                if seq + 1 != trace.len() as u64 || &configuration != trace.last() {
                    return Err(bad(format!("line {}: snapshot at seq {seq} does not match replay", n + 1)));
                }
            }
            TraceLine::Header { .. } => return Err(bad(format!("line {}: repeated header", n + 1))),
        }
    }
    Ok(TraceFile { scenario, snapshot_interval, trace })
}

pub fn read_trace(path: &Path) -> Result<TraceFile, EngineError> {
    parse_trace(BufReader::new(std::fs::File::open(path)?))
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;
    use std::sync::Arc;

    use super::*;
    use crate::model::{NodeState, Step};

    fn sample() -> Trace {
        let mut c = Configuration::new("t");
        for i in 0..3 {
            c.nodes.insert(NodeId(i), Arc::new(NodeState::Plain));
            c.graph.insert(NodeId(i), Arc::new(BTreeSet::new()));
        }
        let mut t = Trace::new(c);
        t.push(Action::step(NodeId(0), Step { neighbors: Some(BTreeSet::from([NodeId(1)])), ..Step::default() }))
            .unwrap();
        t.push(Action::disconnect(NodeId(2))).unwrap();
        t.push(Action::connect(NodeId(3), NodeState::Plain, BTreeSet::from([NodeId(0)]), BTreeSet::new())).unwrap();
        t
    }

    fn round_trip(t: &Trace, k: usize) -> (String, TraceFile) {
        let mut buf = Vec::new();
        write_trace(t, None, k, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let back = parse_trace(text.as_bytes()).unwrap();
        (text, back)
    }

    #[test]
    fn empty_trace_is_header_only() {
        let t = Trace::new(Configuration::new("t"));
        let (text, back) = round_trip(&t, 1);
        assert_eq!(text.lines().count(), 1);
        assert_eq!(back.trace, t);
    }

    #[test]
    fn write_then_read_is_identity() {
        let t = sample();
        let (_, back) = round_trip(&t, 0);
        assert_eq!(back.trace, t);
    }

    #[test]
    fn interval_one_snapshots_every_configuration() {
        let t = sample();
        let (text, back) = round_trip(&t, 1);
        let snaps = text.lines().filter(|l| l.contains("\"type\":\"snapshot\"")).count();
        assert_eq!(snaps, t.len());
        assert_eq!(back.trace, t);
    }

    #[test]
    fn tampered_record_is_rejected() {
        let t = sample();
        let mut buf = Vec::new();
        write_trace(&t, None, 0, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap().replacen("\"actor\":2", "\"actor\":1", 1);
        assert!(matches!(parse_trace(text.as_bytes()), Err(EngineError::Trace(_))));
    }
}
