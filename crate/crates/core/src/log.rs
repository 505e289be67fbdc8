//! Append-only event log, the sole input to every metric.
//!
//! CSV layout: `tick,event,function_id,owner,node_id,cold` with
//! `event ∈ {PLACE, WARM_EXEC, EVICT}`, `cold ∈ {0,1}`, LF line endings.

use std::collections::BTreeSet;
use std::fmt;

use crate::{FunctionId, NodeId, UserId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    /// Cold start: a fresh host was created on a node.
    Place,
    /// An invocation was served by an already-resident host.
    WarmExec,
    /// A host reached TTL 0 and was removed.
    Evict,
}

impl EventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::Place => "PLACE",
            EventKind::WarmExec => "WARM_EXEC",
            EventKind::Evict => "EVICT",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LogEntry {
    pub tick: u64,
    pub kind: EventKind,
    pub function_id: FunctionId,
    pub owner: UserId,
    pub node_id: NodeId,
    pub cold: bool,
}

/// Ordered record of placements, warm executions and evictions.
#[derive(Debug, Clone, Default)]
pub struct EventLog {
    entries: Vec<LogEntry>,
}

#[derive(Debug, thiserror::Error)]
pub enum LogParseError {
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
}

impl EventLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, entry: LogEntry) {
        debug_assert_eq!(entry.cold, entry.kind == EventKind::Place);
        self.entries.push(entry);
    }

    pub fn entries(&self) -> &[LogEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn last_tick(&self) -> u64 {
        self.entries.last().map_or(0, |e| e.tick)
    }

    /// Replays the log from an empty cluster and returns the set of hosts
    /// resident at the end: PLACE inserts, EVICT removes, WARM_EXEC is a
    /// no-op for residency.
    pub fn replay_residents(&self) -> BTreeSet<(FunctionId, NodeId)> {
        let mut live = BTreeSet::new();
        for e in &self.entries {
            match e.kind {
                EventKind::Place => {
                    live.insert((e.function_id, e.node_id));
                }
                EventKind::Evict => {
                    live.remove(&(e.function_id, e.node_id));
                }
                EventKind::WarmExec => {}
            }
        }
        live
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(32 * (self.entries.len() + 1));
        out.push_str("tick,event,function_id,owner,node_id,cold\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                e.tick,
                e.kind,
                e.function_id,
                e.owner,
                e.node_id,
                u8::from(e.cold)
            ));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, LogParseError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, header)) if header.trim() == "tick,event,function_id,owner,node_id,cold" => {}
            _ => {
                return Err(LogParseError::Malformed {
                    line: 1,
                    msg: "missing header row".into(),
                })
            }
        }
        let mut log = EventLog::new();
        for (idx, line) in lines {
            let lineno = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 6 {
                return Err(LogParseError::Malformed {
                    line: lineno,
                    msg: format!("expected 6 fields, got {}", fields.len()),
                });
            }
            let parse_u64 = |s: &str, what: &str| {
                s.trim().parse::<u64>().map_err(|_| LogParseError::Malformed {
                    line: lineno,
                    msg: format!("bad {what}: {s:?}"),
                })
            };
            let kind = match fields[1].trim() {
                "PLACE" => EventKind::Place,
                "WARM_EXEC" => EventKind::WarmExec,
                "EVICT" => EventKind::Evict,
                other => {
                    return Err(LogParseError::Malformed {
                        line: lineno,
                        msg: format!("unknown event {other:?}"),
                    })
                }
            };
            let cold = match fields[5].trim() {
                "0" => false,
                "1" => true,
                other => {
                    return Err(LogParseError::Malformed {
                        line: lineno,
                        msg: format!("bad cold flag {other:?}"),
                    })
                }
            };
            log.entries.push(LogEntry {
                tick: parse_u64(fields[0], "tick")?,
                kind,
                function_id: parse_u64(fields[2], "function_id")?,
                owner: parse_u64(fields[3], "owner")?,
                node_id: parse_u64(fields[4], "node_id")? as NodeId,
                cold,
            });
        }
        Ok(log)
    }
}
