//! Run traces: recording, file format, storage, replay and analytics.
//!
//! A trace file is line-delimited JSON. The first line is a header carrying
//! the schema id, session and question ids, mode, outcome and answer; every
//! following line is one event `{seq, at, kind, ...}`.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{self, GraphMode, RunResult, RunStatus, SessionConfig};
use crate::graph::{ActionId, GraphError, StateId, TransitionGraph};
use crate::memory::VisualQuestion;
use crate::oracle::{OracleTag, RecordedExchange, ReplayOracle};
use crate::prompting::ReasonerVerdict;
use crate::tools::{CallKey, FixtureOutcome, MockBackend, ToolError, ToolOutput, ToolPayload};

pub const TRACE_SCHEMA: &str = "waypoint.trace/v1";
pub const MANIFEST_FILE: &str = "manifest.jsonl";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceMode {
    Agent,
    Human,
    Baseline,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Success,
    Failure,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    SessionStart {
        question: VisualQuestion,
        mode: TraceMode,
        graph_mode: GraphMode,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_steps: Option<usize>,
        exemplar_budget: usize,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        pipeline: Vec<ActionId>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        preloaded: Option<ToolOutput>,
    },
    Decomposition {
        visual: String,
        knowledge: String,
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        fallback: bool,
    },
    OracleExchange {
        tag: OracleTag,
        prompt_hash: String,
        response: String,
    },
    PlannerDecision {
        state: StateId,
        tool: ActionId,
        query: String,
        feasible: Vec<ActionId>,
        attempt: u32,
    },
    HumanAction {
        state: StateId,
        tool: ActionId,
        query: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        object_index: Option<usize>,
        available: Vec<ActionId>,
    },
    ToolCall {
        tool: ActionId,
        query: String,
        image_ref: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        object_index: Option<usize>,
    },
    ToolOutput {
        tool: ActionId,
        payload: ToolPayload,
    },
    ToolError {
        tool: ActionId,
        error: ToolError,
    },
    ReasonerVerdict {
        state: StateId,
        tool: ActionId,
        verdict: ReasonerVerdict,
    },
    Backtrack {
        state: StateId,
        tool: ActionId,
    },
    StateChange {
        from: StateId,
        to: StateId,
    },
    PhaseSwitch {
        visual_answer: String,
        query: String,
    },
    FinalAnswer {
        answer: String,
    },
    SessionEnd {
        status: RunStatus,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        answer: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        error: Option<String>,
    },
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::SessionStart { .. } => "session_start",
            EventKind::Decomposition { .. } => "decomposition",
            EventKind::OracleExchange { .. } => "oracle_exchange",
            EventKind::PlannerDecision { .. } => "planner_decision",
            EventKind::HumanAction { .. } => "human_action",
            EventKind::ToolCall { .. } => "tool_call",
            EventKind::ToolOutput { .. } => "tool_output",
            EventKind::ToolError { .. } => "tool_error",
            EventKind::ReasonerVerdict { .. } => "reasoner_verdict",
            EventKind::Backtrack { .. } => "backtrack",
            EventKind::StateChange { .. } => "state_change",
            EventKind::PhaseSwitch { .. } => "phase_switch",
            EventKind::FinalAnswer { .. } => "final_answer",
            EventKind::SessionEnd { .. } => "session_end",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub seq: u64,
    /// Milliseconds; informational only.
    pub at: u64,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub schema: String,
    pub session_id: String,
    pub question_id: String,
    pub mode: TraceMode,
    pub outcome: Outcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer: Option<String>,
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace line {line}: {message}")]
    Schema { line: usize, message: String },
    #[error("invalid trace: {0}")]
    Invalid(String),
    #[error("trace io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunTrace {
    pub header: TraceHeader,
    pub events: Vec<TraceEvent>,
}

impl RunTrace {
    /// Header line then one line per event, each newline terminated.
    pub fn serialize(&self) -> String {
        let mut out = serde_json::to_string(&self.header).expect("header serializes");
        out.push('\n');
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("event serializes"));
            out.push('\n');
        }
        out
    }

    pub fn parse(source: &str) -> Result<Self, TraceError> {
        let mut lines = source.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, first) = lines.next().ok_or(TraceError::Schema {
            line: 1,
            message: "empty trace".into(),
        })?;
        let header: TraceHeader = serde_json::from_str(first).map_err(|e| TraceError::Schema {
            line: 1,
            message: e.to_string(),
        })?;
        if header.schema != TRACE_SCHEMA {
            return Err(TraceError::Schema {
                line: 1,
                message: format!("expected schema `{TRACE_SCHEMA}`, found `{}`", header.schema),
            });
        }
        let events = lines
            .map(|(i, l)| {
                serde_json::from_str(l).map_err(|e| TraceError::Schema {
                    line: i + 1,
                    message: e.to_string(),
                })
            })
            .collect::<Result<Vec<TraceEvent>, _>>()?;
        let trace = Self { header, events };
        trace.validate()?;
        Ok(trace)
    }

    pub fn load_file(path: impl AsRef<Path>) -> Result<Self, TraceError> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), TraceError> {
        fs::write(path, self.serialize())?;
        Ok(())
    }

    /// Structural checks: increasing seq, start first, end last, and every
    /// tool call answered by an output or an error.
    pub fn validate(&self) -> Result<(), TraceError> {
        let bad = |m: String| Err(TraceError::Invalid(m));
        match (self.events.first(), self.events.last()) {
            (Some(f), Some(l)) => {
                if !matches!(f.kind, EventKind::SessionStart { .. }) {
                    return bad("first event is not session_start".into());
                }
                if !matches!(l.kind, EventKind::SessionEnd { .. }) {
                    return bad("last event is not session_end".into());
                }
            }
            _ => return bad("trace has no events".into()),
        }
        for w in self.events.windows(2) {
            if w[1].seq <= w[0].seq {
                return bad(format!("seq {} does not follow {}", w[1].seq, w[0].seq));
            }
        }
        let mut open: Option<&ActionId> = None;
        for e in &self.events {
            match &e.kind {
                EventKind::ToolCall { tool, .. } => {
                    if let Some(t) = open {
                        return bad(format!("tool_call `{t}` has no output"));
                    }
                    open = Some(tool);
                }
                EventKind::ToolOutput { tool, .. } | EventKind::ToolError { tool, .. } => {
                    if open != Some(tool) {
                        return bad(format!("unmatched result for `{tool}` at seq {}", e.seq));
                    }
                    open = None;
                }
                _ => {}
            }
        }
        if let Some(t) = open {
            return bad(format!("tool_call `{t}` has no output"));
        }
        Ok(())
    }

    pub fn session_start(&self) -> Option<&EventKind> {
        self.events.first().map(|e| &e.kind).filter(|k| matches!(k, EventKind::SessionStart { .. }))
    }

    pub fn status(&self) -> Option<RunStatus> {
        self.events.iter().rev().find_map(|e| match &e.kind {
            EventKind::SessionEnd { status, .. } => Some(*status),
            _ => None,
        })
    }

    /// Tools in `tool_call` order.
    pub fn tool_calls(&self) -> Vec<&ActionId> {
        self.events
            .iter()
            .filter_map(|e| match &e.kind {
                EventKind::ToolCall { tool, .. } => Some(tool),
                _ => None,
            })
            .collect()
    }

    pub fn count(&self, kind: &str) -> usize {
        self.events.iter().filter(|e| e.kind.name() == kind).count()
    }

    /// (state, action) decisions: planner or human choices, or for fixed
    /// pipelines the tool-call chain starting at `START`.
    pub fn transitions(&self) -> Vec<(StateId, ActionId)> {
        let decisions: Vec<_> = self
            .events
            .iter()
            .filter_map(|e| match &e.kind {
                EventKind::PlannerDecision { state, tool, .. } | EventKind::HumanAction { state, tool, .. } => {
                    Some((state.clone(), tool.clone()))
                }
                _ => None,
            })
            .collect();
        if !decisions.is_empty() || self.header.mode != TraceMode::Baseline {
            return decisions;
        }
        let mut state = StateId::start();
        self.tool_calls()
            .into_iter()
            .map(|t| {
                let from = std::mem::replace(&mut state, StateId::from(t));
                (from, t.clone())
            })
            .collect()
    }

    pub fn oracle_exchanges(&self) -> Vec<RecordedExchange> {
        self.events
            .iter()
            .filter_map(|e| match &e.kind {
                EventKind::OracleExchange {
                    tag,
                    prompt_hash,
                    response,
                } => Some(RecordedExchange {
                    tag: *tag,
                    prompt_hash: prompt_hash.clone(),
                    response: response.clone(),
                }),
                _ => None,
            })
            .collect()
    }

    /// Mock backend answering every recorded tool call with its recorded result.
    pub fn recorded_tools(&self) -> MockBackend {
        let mut mock = MockBackend::new();
        let mut pending: Option<CallKey> = None;
        for e in &self.events {
            match &e.kind {
                EventKind::ToolCall {
                    tool, query, image_ref, ..
                } => pending = Some(CallKey::new(tool, query, image_ref)),
                EventKind::ToolOutput { payload, .. } => {
                    if let Some(k) = pending.take() {
                        mock.insert_outcome(k, FixtureOutcome::Payload(payload.clone()));
                    }
                }
                EventKind::ToolError { error, .. } => {
                    if let Some(k) = pending.take() {
                        mock.insert_outcome(k, FixtureOutcome::Error(error.clone()));
                    }
                }
                _ => {}
            }
        }
        mock
    }
}

/// Source of event timestamps.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Clock {
    /// `at` equals `seq`, so traces are reproducible byte for byte.
    #[default]
    Logical,
    System,
}

pub type EventObserver = Arc<dyn Fn(&TraceEvent) + Send + Sync>;

/// Per-session event writer.
#[derive(Clone)]
pub struct TraceRecorder {
    events: Vec<TraceEvent>,
    clock: Clock,
    observer: Option<EventObserver>,
}

impl std::fmt::Debug for TraceRecorder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TraceRecorder")
            .field("events", &self.events.len())
            .field("clock", &self.clock)
            .finish()
    }
}

impl TraceRecorder {
    pub fn new(clock: Clock, observer: Option<EventObserver>) -> Self {
        Self {
            events: Vec::new(),
            clock,
            observer,
        }
    }

    pub fn push(&mut self, kind: EventKind) {
        let seq = self.events.len() as u64;
        let at = match self.clock {
            Clock::Logical => seq,
            Clock::System => SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_millis() as u64)
                .unwrap_or(0),
        };
        let event = TraceEvent { seq, at, kind };
        if let Some(o) = &self.observer {
            o(&event);
        }
        self.events.push(event);
    }

    pub fn events(&self) -> &[TraceEvent] {
        &self.events
    }

    pub fn finish(self, header: TraceHeader) -> RunTrace {
        RunTrace {
            header,
            events: self.events,
        }
    }
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("trace cannot be replayed: {0}")]
    NotReplayable(String),
    #[error("replay diverged at event {index}")]
    Divergence {
        index: usize,
        expected: Option<String>,
        actual: Option<String>,
    },
}

/// Re-executes a recorded agent or baseline session with its recorded oracle
/// responses and tool results, comparing every event except `at`.
///
/// `base` supplies the graph, templates, exemplars and tool specs; its oracle
/// and tool backends are replaced.
pub fn replay(trace: &RunTrace, base: &SessionConfig) -> Result<RunResult, ReplayError> {
    let Some(EventKind::SessionStart {
        question,
        mode,
        graph_mode,
        max_steps,
        exemplar_budget,
        pipeline,
        ..
    }) = trace.session_start()
    else {
        return Err(ReplayError::NotReplayable("missing session_start".into()));
    };
    let mut config = base.clone();
    config.oracle = Arc::new(ReplayOracle::new(trace.oracle_exchanges()));
    config.registry = Arc::new(base.registry.with_backend(Arc::new(trace.recorded_tools())));
    config.mode = *graph_mode;
    config.max_steps = *max_steps;
    config.exemplar_budget = *exemplar_budget;
    config.session_id = Some(trace.header.session_id.clone());
    config.observer = None;
    let result = match mode {
        TraceMode::Agent => engine::run(&config, question.clone()),
        TraceMode::Baseline => engine::run_sequential_baseline(pipeline, &config, question.clone())
            .map_err(|e| ReplayError::NotReplayable(e.to_string()))?,
        TraceMode::Human => return Err(ReplayError::NotReplayable("human traces have no oracle".into())),
    };
    compare_events(&trace.events, &result.trace.events)?;
    if result.trace.header != trace.header {
        return Err(ReplayError::Divergence {
            index: trace.events.len(),
            expected: serde_json::to_string(&trace.header).ok(),
            actual: serde_json::to_string(&result.trace.header).ok(),
        });
    }
    Ok(result)
}

fn without_at(e: &TraceEvent) -> String {
    let mut v = serde_json::to_value(e).expect("event serializes");
    if let Some(o) = v.as_object_mut() {
        o.remove("at");
    }
    v.to_string()
}

fn compare_events(expected: &[TraceEvent], actual: &[TraceEvent]) -> Result<(), ReplayError> {
    let n = expected.len().max(actual.len());
    for i in 0..n {
        let a = expected.get(i).map(without_at);
        let b = actual.get(i).map(without_at);
        if a != b {
            return Err(ReplayError::Divergence {
                index: i,
                expected: a,
                actual: b,
            });
        }
    }
    Ok(())
}

/// Transition counts and row-normalized probabilities.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct InducedGraph {
    pub nodes: BTreeSet<StateId>,
    pub edge_counts: BTreeMap<(StateId, ActionId), u64>,
    pub edge_probs: BTreeMap<(StateId, ActionId), f64>,
}

impl InducedGraph {
    pub fn is_empty(&self) -> bool {
        self.edge_counts.is_empty()
    }

    pub fn count(&self, state: &str, action: &str) -> u64 {
        self.edge_counts
            .get(&(StateId::from(state), ActionId::from(action)))
            .copied()
            .unwrap_or(0)
    }

    pub fn prob(&self, state: &str, action: &str) -> f64 {
        self.edge_probs
            .get(&(StateId::from(state), ActionId::from(action)))
            .copied()
            .unwrap_or(0.0)
    }

    /// `state,action,count,probability` rows sorted by state then action.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["state", "action", "count", "probability"]).expect("csv write");
        for ((s, a), c) in &self.edge_counts {
            let p = self.edge_probs[&(s.clone(), a.clone())];
            w.write_record([s.as_str(), a.as_str(), &c.to_string(), &format!("{p}")])
                .expect("csv write");
        }
        String::from_utf8(w.into_inner().expect("csv flush")).expect("utf8 csv")
    }

    /// A loadable transition graph: edge lists ordered by descending count
    /// then name, states without outgoing edges marked terminal.
    pub fn to_transition_graph(&self) -> Result<TransitionGraph, GraphError> {
        let mut states: Vec<StateId> = vec![StateId::start()];
        states.extend(self.nodes.iter().filter(|s| !s.is_start()).cloned());
        let mut rows: IndexMap<StateId, Vec<(u64, ActionId)>> = IndexMap::new();
        for ((s, a), c) in &self.edge_counts {
            rows.entry(s.clone()).or_default().push((*c, a.clone()));
        }
        let mut edges = IndexMap::new();
        for s in &states {
            if let Some(mut row) = rows.shift_remove(s) {
                row.sort_by(|x, y| y.0.cmp(&x.0).then_with(|| x.1.cmp(&y.1)));
                edges.insert(s.clone(), row.into_iter().map(|(_, a)| a).collect::<Vec<_>>());
            }
        }
        let terminal = states.iter().filter(|s| !edges.contains_key(*s)).cloned().collect();
        TransitionGraph::new(states, edges, terminal)
    }
}

/// Counts every (state, action) decision across the traces.
pub fn induce_graph(traces: &[RunTrace]) -> InducedGraph {
    let mut g = InducedGraph::default();
    for t in traces {
        for (s, a) in t.transitions() {
            g.nodes.insert(s.clone());
            g.nodes.insert(StateId::from(&a));
            *g.edge_counts.entry((s, a)).or_default() += 1;
        }
    }
    let mut row_sums: BTreeMap<&StateId, u64> = BTreeMap::new();
    for ((s, _), c) in &g.edge_counts {
        *row_sums.entry(s).or_default() += c;
    }
    g.edge_probs = g
        .edge_counts
        .iter()
        .map(|(k, c)| (k.clone(), *c as f64 / row_sums[&k.0] as f64))
        .collect();
    g
}

/// Tool-call counts overall, or of the `position`-th call (1-based) per trace.
pub fn tool_frequency(traces: &[RunTrace], position: Option<usize>) -> BTreeMap<ActionId, u64> {
    let mut out = BTreeMap::new();
    for t in traces {
        let calls = t.tool_calls();
        match position {
            None => calls.into_iter().for_each(|c| *out.entry(c.clone()).or_default() += 1),
            Some(k) => {
                if let Some(c) = k.checked_sub(1).and_then(|i| calls.get(i)) {
                    *out.entry((*c).clone()).or_default() += 1;
                }
            }
        }
    }
    out
}

/// Histogram of tool calls per trace.
pub fn length_distribution(traces: &[RunTrace]) -> BTreeMap<usize, u64> {
    let mut out = BTreeMap::new();
    for t in traces {
        *out.entry(t.tool_calls().len()).or_default() += 1;
    }
    out
}

/// Histogram of reasoner verdict kinds.
pub fn verdict_frequency(traces: &[RunTrace]) -> BTreeMap<String, u64> {
    let mut out = BTreeMap::new();
    for t in traces {
        for e in &t.events {
            if let EventKind::ReasonerVerdict { verdict, .. } = &e.kind {
                *out.entry(verdict.kind_name().to_string()).or_default() += 1;
            }
        }
    }
    out
}

/// Two-column CSV with the given header.
pub fn histogram_csv<K: std::fmt::Display>(header: [&str; 2], rows: &BTreeMap<K, u64>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("csv write");
    for (k, v) in rows {
        w.write_record([k.to_string(), v.to_string()]).expect("csv write");
    }
    String::from_utf8(w.into_inner().expect("csv flush")).expect("utf8 csv")
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub session_id: String,
    pub question_id: String,
    pub mode: TraceMode,
    pub outcome: Outcome,
    pub file: String,
}

/// A directory of trace files indexed by a manifest.
#[derive(Debug)]
pub struct TraceStore {
    dir: PathBuf,
    lock: Mutex<()>,
}

impl TraceStore {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, TraceError> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir, lock: Mutex::new(()) })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn file_name(session_id: &str) -> String {
        let safe: String = session_id
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
            .collect();
        format!("{safe}.jsonl")
    }

    /// Writes the trace and indexes it; returns the file path.
    pub fn save(&self, trace: &RunTrace) -> Result<PathBuf, TraceError> {
        let _guard = self.lock.lock().expect("store lock");
        let file = Self::file_name(&trace.header.session_id);
        let path = self.dir.join(&file);
        trace.save(&path)?;
        let entry = ManifestEntry {
            session_id: trace.header.session_id.clone(),
            question_id: trace.header.question_id.clone(),
            mode: trace.header.mode,
            outcome: trace.header.outcome,
            file,
        };
        let mut f = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(self.dir.join(MANIFEST_FILE))?;
        writeln!(f, "{}", serde_json::to_string(&entry).expect("manifest serializes"))?;
        Ok(path)
    }

    /// Manifest entries, latest entry per session id, in first-save order.
    pub fn list(&self) -> Result<Vec<ManifestEntry>, TraceError> {
        let path = self.dir.join(MANIFEST_FILE);
        if !path.exists() {
            return Ok(Vec::new());
        }
        let mut out: IndexMap<String, ManifestEntry> = IndexMap::new();
        for (i, line) in fs::read_to_string(path)?.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let e: ManifestEntry = serde_json::from_str(line).map_err(|e| TraceError::Schema {
                line: i + 1,
                message: e.to_string(),
            })?;
            out.insert(e.session_id.clone(), e);
        }
        Ok(out.into_values().collect())
    }

    pub fn load(&self, session_id: &str) -> Result<Option<RunTrace>, TraceError> {
        let Some(entry) = self.list()?.into_iter().find(|e| e.session_id == session_id) else {
            return Ok(None);
        };
        RunTrace::load_file(self.dir.join(entry.file)).map(Some)
    }

    pub fn load_all(&self) -> Result<Vec<RunTrace>, TraceError> {
        self.list()?
            .into_iter()
            .map(|e| RunTrace::load_file(self.dir.join(e.file)))
            .collect()
    }
}

/// Loads every `*.jsonl` trace under `path` (or `path` itself if it is a
/// file), skipping the manifest.
pub fn load_traces(path: impl AsRef<Path>) -> Result<Vec<RunTrace>, TraceError> {
    let path = path.as_ref();
    if path.is_file() {
        return Ok(vec![RunTrace::load_file(path)?]);
    }
    let mut files: Vec<PathBuf> = fs::read_dir(path)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().is_some_and(|x| x == "jsonl") && p.file_name().is_some_and(|n| n != MANIFEST_FILE)
        })
        .collect();
    files.sort();
    files.iter().map(RunTrace::load_file).collect()
}
