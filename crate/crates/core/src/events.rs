//! Interaction logs: parsing, serialization and the reciprocity filters.
//!
//! The on-disk format is one event per line:
//!
//! ```text
//! # kind,source,destination,timestamp[,duration]
//! call,1,2,1000,60
//! text,3,4,2000
//! ```

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EventError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("invalid observation window [{start}, {end})")]
    InvalidWindow { start: i64, end: i64 },
}

/// Opaque node identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u64);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl FromStr for NodeId {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.parse().map(NodeId)
    }
}

/// Communication channel of an event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Call,
    Text,
}

impl Channel {
    pub const ALL: [Channel; 2] = [Channel::Call, Channel::Text];

    pub fn as_str(self) -> &'static str {
        match self {
            Channel::Call => "call",
            Channel::Text => "text",
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Channel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "call" | "phone" => Ok(Channel::Call),
            "text" | "sms" => Ok(Channel::Text),
            other => Err(format!("unknown channel `{other}`")),
        }
    }
}

/// Calls carry a duration in seconds, texts carry nothing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    Call { duration: u64 },
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct InteractionEvent {
    pub kind: EventKind,
    pub source: NodeId,
    pub destination: NodeId,
    /// Seconds since the epoch.
    pub timestamp: i64,
}

impl InteractionEvent {
    pub fn call(source: u64, destination: u64, timestamp: i64, duration: u64) -> Self {
        Self {
            kind: EventKind::Call { duration },
            source: NodeId(source),
            destination: NodeId(destination),
            timestamp,
        }
    }

    pub fn text(source: u64, destination: u64, timestamp: i64) -> Self {
        Self {
            kind: EventKind::Text,
            source: NodeId(source),
            destination: NodeId(destination),
            timestamp,
        }
    }

    pub fn channel(&self) -> Channel {
        match self.kind {
            EventKind::Call { .. } => Channel::Call,
            EventKind::Text => Channel::Text,
        }
    }

    pub fn duration(&self) -> Option<u64> {
        match self.kind {
            EventKind::Call { duration } => Some(duration),
            EventKind::Text => None,
        }
    }

    pub fn pair(&self) -> UndirectedPair {
        UndirectedPair::new(self.source, self.destination)
    }
}

impl fmt::Display for InteractionEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            EventKind::Call { duration } => write!(
                f,
                "call,{},{},{},{}",
                self.source, self.destination, self.timestamp, duration
            ),
            EventKind::Text => write!(f, "text,{},{},{}", self.source, self.destination, self.timestamp),
        }
    }
}

/// Unordered node pair, stored with the smaller id first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct UndirectedPair {
    lo: NodeId,
    hi: NodeId,
}

impl UndirectedPair {
    pub fn new(a: NodeId, b: NodeId) -> Self {
        if a <= b {
            Self { lo: a, hi: b }
        } else {
            Self { lo: b, hi: a }
        }
    }

    pub fn lo(&self) -> NodeId {
        self.lo
    }

    pub fn hi(&self) -> NodeId {
        self.hi
    }
}

/// Half-open time interval `[start, end)` in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservationWindow {
    start: i64,
    end: i64,
}

impl ObservationWindow {
    pub fn new(start: i64, end: i64) -> Result<Self, EventError> {
        if start < end {
            Ok(Self { start, end })
        } else {
            Err(EventError::InvalidWindow { start, end })
        }
    }

    pub fn unbounded() -> Self {
        Self {
            start: i64::MIN,
            end: i64::MAX,
        }
    }

    pub fn is_unbounded(&self) -> bool {
        self.start == i64::MIN && self.end == i64::MAX
    }

    pub fn start(&self) -> i64 {
        self.start
    }

    pub fn end(&self) -> i64 {
        self.end
    }

    pub fn contains(&self, t: i64) -> bool {
        self.start <= t && t < self.end
    }

    /// Length of the window in seconds, saturating for unbounded windows.
    pub fn span(&self) -> i64 {
        self.end.saturating_sub(self.start)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PairWeights {
    pub calls: u64,
    pub texts: u64,
}

impl PairWeights {
    pub fn total(&self) -> u64 {
        self.calls + self.texts
    }

    pub fn get(&self, channel: Channel) -> u64 {
        match channel {
            Channel::Call => self.calls,
            Channel::Text => self.texts,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RejectedLine {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct ParseReport {
    /// Well-formed in-window events, in file order.
    pub events: Vec<InteractionEvent>,
    pub rejected: Vec<RejectedLine>,
    /// Well-formed events dropped because they fall outside the window.
    pub out_of_window: usize,
}

fn parse_line(line: &str) -> Result<InteractionEvent, String> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    let expected = match fields[0] {
        "call" => 5,
        "text" => 4,
        other => return Err(format!("unknown event kind `{other}`")),
    };
    if fields.len() != expected {
        return Err(format!(
            "{} event needs {expected} fields, found {}",
            fields[0],
            fields.len()
        ));
    }
    let source: NodeId = fields[1]
        .parse()
        .map_err(|e| format!("bad source `{}`: {e}", fields[1]))?;
    let destination: NodeId = fields[2]
        .parse()
        .map_err(|e| format!("bad destination `{}`: {e}", fields[2]))?;
    let timestamp: i64 = fields[3]
        .parse()
        .map_err(|e| format!("bad timestamp `{}`: {e}", fields[3]))?;
    if source == destination {
        return Err(format!("self-loop on node {source}"));
    }
    let kind = if expected == 5 {
        let duration: u64 = fields[4]
            .parse()
            .map_err(|e| format!("bad duration `{}`: {e}", fields[4]))?;
        EventKind::Call { duration }
    } else {
        EventKind::Text
    };
    Ok(InteractionEvent {
        kind,
        source,
        destination,
        timestamp,
    })
}

/// Parses an event log, keeping well-formed events inside `window`.
///
/// Blank lines and `#` comments are ignored. Malformed lines are recorded in
/// the report, or abort the parse with their line number when `strict`.
pub fn parse_events<R: BufRead>(
    input: R,
    window: ObservationWindow,
    strict: bool,
) -> Result<ParseReport, EventError> {
    let mut report = ParseReport::default();
    for (index, line) in input.lines().enumerate() {
        let line = line?;
        let line_no = index + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        match parse_line(trimmed) {
            Ok(event) if window.contains(event.timestamp) => report.events.push(event),
            Ok(_) => report.out_of_window += 1,
            Err(reason) if strict => {
                return Err(EventError::Malformed {
                    line: line_no,
                    reason,
                })
            }
            Err(reason) => report.rejected.push(RejectedLine {
                line: line_no,
                reason,
            }),
        }
    }
    Ok(report)
}

pub fn write_events<'a, W, I>(mut out: W, events: I) -> io::Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a InteractionEvent>,
{
    for event in events {
        writeln!(out, "{event}")?;
    }
    Ok(())
}

/// Filtered, time-sorted interactions with per-pair weights.
#[derive(Debug, Clone, PartialEq)]
pub struct CleanInteractionSet {
    events: Vec<InteractionEvent>,
    weights: BTreeMap<UndirectedPair, PairWeights>,
    window: ObservationWindow,
}

impl CleanInteractionSet {
    pub fn events(&self) -> &[InteractionEvent] {
        &self.events
    }

    pub fn weights(&self) -> &BTreeMap<UndirectedPair, PairWeights> {
        &self.weights
    }

    pub fn weight(&self, a: NodeId, b: NodeId) -> PairWeights {
        self.weights
            .get(&UndirectedPair::new(a, b))
            .copied()
            .unwrap_or_default()
    }

    pub fn is_linked(&self, a: NodeId, b: NodeId) -> bool {
        self.weights.contains_key(&UndirectedPair::new(a, b))
    }

    pub fn window(&self) -> ObservationWindow {
        self.window
    }

    pub fn node_count(&self) -> usize {
        let mut nodes = HashSet::new();
        for pair in self.weights.keys() {
            nodes.insert(pair.lo);
            nodes.insert(pair.hi);
        }
        nodes.len()
    }

    pub fn link_count(&self) -> usize {
        self.weights.len()
    }
}

/// Applies the cleaning rules to a raw log.
///
/// Zero-duration calls are removed first. Calls on a pair survive only if
/// the remaining calls include both directions. Texts are always kept. The
/// result is sorted by timestamp (stable, so ties keep input order).
///
/// An unbounded `window` is narrowed to the span of the surviving events.
pub fn preprocess(raw: &[InteractionEvent], window: ObservationWindow) -> CleanInteractionSet {
    let answered = |e: &InteractionEvent| !matches!(e.kind, EventKind::Call { duration: 0 });

    let directed_calls: HashSet<(NodeId, NodeId)> = raw
        .iter()
        .filter(|e| e.channel() == Channel::Call && answered(e))
        .map(|e| (e.source, e.destination))
        .collect();

    let mut events: Vec<InteractionEvent> = raw
        .iter()
        .filter(|e| answered(e))
        .filter(|e| match e.kind {
            EventKind::Call { .. } => directed_calls.contains(&(e.destination, e.source)),
            EventKind::Text => true,
        })
        .copied()
        .collect();
    events.sort_by_key(|e| e.timestamp);

    let mut weights: BTreeMap<UndirectedPair, PairWeights> = BTreeMap::new();
    for event in &events {
        let entry = weights.entry(event.pair()).or_default();
        match event.channel() {
            Channel::Call => entry.calls += 1,
            Channel::Text => entry.texts += 1,
        }
    }

    let window = match (window.is_unbounded(), events.first(), events.last()) {
        (true, Some(first), Some(last)) => ObservationWindow {
            start: first.timestamp,
            end: last.timestamp.saturating_add(1),
        },
        _ => window,
    };

    CleanInteractionSet {
        events,
        weights,
        window,
    }
}
