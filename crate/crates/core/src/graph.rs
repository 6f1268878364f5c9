//! Transition graphs that constrain which tool the planner may pick next.
//!
//! A session's state is the name of the last tool whose output was judged
//! informative, or [`START`] before any such judgment. The graph maps each
//! state to an ordered list of actions; the order is surfaced verbatim in the
//! planner prompt.
//!
//! Graph files are TOML with a mandatory schema line:
//!
//! ```text
//! schema = "waypoint.graph/v1"
//! states = ["START", "caption", "answer"]
//! terminal = ["answer"]
//!
//! [edges]
//! START = ["caption"]
//! caption = ["answer"]
//! ```

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::memory::WorkingMemory;

/// Schema identifier required at the top of every graph file.
pub const GRAPH_SCHEMA: &str = "waypoint.graph/v1";

/// Reserved initial state.
pub const START: &str = "START";

/// Reserved terminal action: ask the oracle for a final answer over memory.
pub const ANSWER: &str = "answer";

/// Name of a tool (or the reserved `answer` action).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActionId(String);

impl ActionId {
    pub fn new(name: impl Into<String>) -> Self {
        Self(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_answer(&self) -> bool {
        self.0 == ANSWER
    }
}

impl fmt::Display for ActionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ActionId {
    fn from(s: &str) -> Self {
        Self(s.to_string())
    }
}

/// A node of the transition graph: `START` or the action that led there.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateId(String);

impl StateId {
    pub fn new(name: impl Into<String>) -> Self {
        Self(name.into())
    }

    pub fn start() -> Self {
        Self(START.to_string())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_start(&self) -> bool {
        self.0 == START
    }
}

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for StateId {
    fn from(s: &str) -> Self {
        Self(s.to_string())
    }
}

impl From<&ActionId> for StateId {
    fn from(a: &ActionId) -> Self {
        Self(a.0.clone())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("graph schema error: {0}")]
    Schema(String),
    #[error("graph validation error: {0}")]
    Validation(String),
    #[error("unknown state `{0}`")]
    UnknownState(StateId),
}

/// Ordered actions the planner may choose from at one step.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeasibleActionSet(Vec<ActionId>);

impl FeasibleActionSet {
    /// Builds a set from an ordered list, dropping repeats after the first.
    pub fn from_ordered(actions: impl IntoIterator<Item = ActionId>) -> Self {
        let mut seen = HashSet::new();
        Self(actions.into_iter().filter(|a| seen.insert(a.clone())).collect())
    }

    pub fn actions(&self) -> &[ActionId] {
        &self.0
    }

    pub fn contains(&self, action: &ActionId) -> bool {
        self.0.contains(action)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ActionId> {
        self.0.iter()
    }

    pub fn into_vec(self) -> Vec<ActionId> {
        self.0
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransitionGraph {
    states: Vec<StateId>,
    edges: IndexMap<StateId, Vec<ActionId>>,
    terminal: Vec<StateId>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphDocument {
    schema: String,
    states: Vec<String>,
    #[serde(default)]
    terminal: Vec<String>,
    #[serde(default)]
    edges: IndexMap<String, Vec<String>>,
}

impl TransitionGraph {
    /// Builds and validates a graph. Edge lists are stored in the order given.
    pub fn new(
        states: Vec<StateId>,
        edges: IndexMap<StateId, Vec<ActionId>>,
        terminal: Vec<StateId>,
    ) -> Result<Self, GraphError> {
        let graph = Self {
            states,
            edges,
            terminal,
        };
        graph.validate(true)?;
        Ok(graph)
    }

    /// Parses a graph document.
    pub fn load(source: &str) -> Result<Self, GraphError> {
        let doc: GraphDocument =
            toml::from_str(source).map_err(|e| GraphError::Schema(e.message().to_string()))?;
        if doc.schema != GRAPH_SCHEMA {
            return Err(GraphError::Schema(format!(
                "expected schema `{GRAPH_SCHEMA}`, found `{}`",
                doc.schema
            )));
        }
        let states = doc.states.into_iter().map(StateId::new).collect();
        let terminal = doc.terminal.into_iter().map(StateId::new).collect();
        let edges = doc
            .edges
            .into_iter()
            .map(|(s, acts)| (StateId::new(s), acts.into_iter().map(ActionId::new).collect()))
            .collect();
        Self::new(states, edges, terminal)
    }

    pub fn load_file(path: impl AsRef<std::path::Path>) -> Result<Self, GraphError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| GraphError::Schema(format!("{}: {e}", path.display())))?;
        Self::load(&text)
    }

    /// Canonical serialization; `load(g.serialize()) == g` and the output of
    /// loading a canonical document reproduces it byte for byte.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("schema = {}\n", quote(GRAPH_SCHEMA)));
        out.push_str(&format!(
            "states = {}\n",
            list(self.states.iter().map(|s| s.as_str()))
        ));
        out.push_str(&format!(
            "terminal = {}\n",
            list(self.terminal.iter().map(|s| s.as_str()))
        ));
        out.push_str("\n[edges]\n");
        for (state, actions) in &self.edges {
            out.push_str(&format!(
                "{} = {}\n",
                key(state.as_str()),
                list(actions.iter().map(|a| a.as_str()))
            ));
        }
        out
    }

    fn validate(&self, require_outgoing: bool) -> Result<(), GraphError> {
        let invalid = |msg: String| Err(GraphError::Validation(msg));
        let mut declared = HashSet::new();
        for s in &self.states {
            if s.as_str().is_empty() {
                return invalid("empty state identifier".into());
            }
            if !declared.insert(s) {
                return invalid(format!("state `{s}` declared twice"));
            }
        }
        let start = StateId::start();
        if !declared.contains(&start) {
            return invalid("missing START state".into());
        }
        for t in &self.terminal {
            if !declared.contains(t) {
                return invalid(format!("terminal state `{t}` is not declared"));
            }
        }
        for (state, actions) in &self.edges {
            if !declared.contains(state) {
                return invalid(format!("edges declared for unknown state `{state}`"));
            }
            let mut seen = HashSet::new();
            for a in actions {
                if a.as_str() == START {
                    return invalid("START cannot be used as an action".into());
                }
                if !declared.contains(&StateId::from(a)) {
                    return invalid(format!("state `{state}` references undeclared action `{a}`"));
                }
                if !seen.insert(a) {
                    return invalid(format!("state `{state}` lists action `{a}` twice"));
                }
            }
        }
        if self.outgoing(&start).is_empty() {
            return invalid("START has no outgoing actions".into());
        }
        if require_outgoing {
            for state in self.reachable() {
                if !self.is_terminal(&state) && self.outgoing(&state).is_empty() {
                    return invalid(format!(
                        "non-terminal state `{state}` is reachable but has no outgoing actions"
                    ));
                }
            }
        }
        Ok(())
    }

    fn reachable(&self) -> BTreeSet<StateId> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![StateId::start()];
        while let Some(s) = stack.pop() {
            if !seen.insert(s.clone()) {
                continue;
            }
            for a in self.outgoing(&s) {
                stack.push(StateId::from(a));
            }
        }
        seen
    }

    pub fn states(&self) -> &[StateId] {
        &self.states
    }

    pub fn terminal_states(&self) -> &[StateId] {
        &self.terminal
    }

    pub fn contains_state(&self, state: &StateId) -> bool {
        self.states.contains(state)
    }

    pub fn is_terminal(&self, state: &StateId) -> bool {
        self.terminal.contains(state)
    }

    /// Edge list of a state; empty for states without an `edges` entry.
    pub fn outgoing(&self, state: &StateId) -> &[ActionId] {
        self.edges.get(state).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn edges(&self) -> impl Iterator<Item = (&StateId, &[ActionId])> {
        self.edges.iter().map(|(s, a)| (s, a.as_slice()))
    }

    /// Every action that appears in some edge list, in first-seen order.
    pub fn actions(&self) -> Vec<ActionId> {
        let mut seen = HashSet::new();
        self.edges
            .values()
            .flatten()
            .filter(|a| seen.insert(*a))
            .cloned()
            .collect()
    }

    /// Total number of (state, action) edges.
    pub fn edge_count(&self) -> usize {
        self.edges.values().map(Vec::len).sum()
    }

    /// Actions allowed at `state` minus those already taken there.
    pub fn feasible_actions(
        &self,
        state: &StateId,
        memory: &WorkingMemory,
    ) -> Result<FeasibleActionSet, GraphError> {
        if !self.contains_state(state) {
            return Err(GraphError::UnknownState(state.clone()));
        }
        let taken = memory.traversed(state);
        Ok(FeasibleActionSet::from_ordered(
            self.outgoing(state)
                .iter()
                .filter(|a| !taken.is_some_and(|t| t.contains(*a)))
                .cloned(),
        ))
    }

    /// Copy of the graph with the given actions removed from every edge list.
    ///
    /// Removed actions stay declared as states so traces mentioning them still
    /// load; states left without outgoing actions become dead ends.
    pub fn without_actions(&self, excluded: &BTreeSet<ActionId>) -> Result<Self, GraphError> {
        let edges = self
            .edges
            .iter()
            .map(|(s, acts)| {
                (
                    s.clone(),
                    acts.iter().filter(|a| !excluded.contains(*a)).cloned().collect(),
                )
            })
            .collect();
        let graph = Self {
            states: self.states.clone(),
            edges,
            terminal: self.terminal.clone(),
        };
        graph.validate(false)?;
        Ok(graph)
    }
}

/// Registered tools minus those already taken at `state`; the graph-free mode.
pub fn unconstrained_actions<'a>(
    registry: impl IntoIterator<Item = &'a ActionId>,
    memory: &WorkingMemory,
    state: &StateId,
) -> FeasibleActionSet {
    let taken = memory.traversed(state);
    FeasibleActionSet::from_ordered(
        registry
            .into_iter()
            .filter(|a| !taken.is_some_and(|t| t.contains(*a)))
            .cloned(),
    )
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c if c.is_control() => out.push_str(&format!("\\u{:04X}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn key(s: &str) -> String {
    let bare = !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
    if bare {
        s.to_string()
    } else {
        quote(s)
    }
}

fn list<'a>(items: impl Iterator<Item = &'a str>) -> String {
    let items: Vec<String> = items.map(quote).collect();
    format!("[{}]", items.join(", "))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assets;
    use crate::memory::{VisualQuestion, WorkingMemory};

    fn memory() -> WorkingMemory {
        WorkingMemory::new(VisualQuestion::new("q1", "img.jpg", "what is this?"))
    }

    fn ids(names: &[&str]) -> Vec<ActionId> {
        names.iter().map(|n| ActionId::from(*n)).collect()
    }

    #[test]
    fn default_graph_start_actions() {
        let g = assets::default_graph();
        let feasible = g.feasible_actions(&StateId::start(), &memory()).unwrap();
        assert_eq!(feasible.actions(), ids(&["caption", "vqa", "object_detection"]));
    }

    #[test]
    fn default_graph_file_is_canonical() {
        let g = assets::default_graph();
        assert_eq!(g.serialize(), assets::DEFAULT_GRAPH);
    }

    #[test]
    fn zero_states_is_invalid() {
        let doc = "schema = \"waypoint.graph/v1\"\nstates = []\n";
        assert!(matches!(TransitionGraph::load(doc), Err(GraphError::Validation(_))));
    }

    #[test]
    fn dangling_action_is_invalid() {
        let doc = "schema = \"waypoint.graph/v1\"\nstates = [\"START\", \"vqa\"]\nterminal = [\"vqa\"]\n\n[edges]\nSTART = [\"vqa\", \"teleport\"]\n";
        let err = TransitionGraph::load(doc).unwrap_err();
        assert!(matches!(&err, GraphError::Validation(m) if m.contains("teleport")), "{err}");
    }

    #[test]
    fn missing_schema_is_schema_error() {
        let doc = "states = [\"START\"]\n";
        assert!(matches!(TransitionGraph::load(doc), Err(GraphError::Schema(_))));
        let doc = "schema = \"other/v9\"\nstates = [\"START\"]\n";
        assert!(matches!(TransitionGraph::load(doc), Err(GraphError::Schema(_))));
        assert!(matches!(TransitionGraph::load("[[["), Err(GraphError::Schema(_))));
    }

    #[test]
    fn reachable_dead_end_is_invalid() {
        let doc = "schema = \"waypoint.graph/v1\"\nstates = [\"START\", \"vqa\"]\nterminal = []\n\n[edges]\nSTART = [\"vqa\"]\n";
        assert!(matches!(TransitionGraph::load(doc), Err(GraphError::Validation(_))));
    }

    #[test]
    fn full_exclusion_leaves_nothing() {
        let doc = "schema = \"waypoint.graph/v1\"\nstates = [\"START\", \"a\", \"b\"]\nterminal = [\"a\", \"b\"]\n\n[edges]\nSTART = [\"a\", \"b\"]\n";
        let g = TransitionGraph::load(doc).unwrap();
        let mut m = memory();
        m.record_uninformative(&ActionId::from("a"));
        m.record_uninformative(&ActionId::from("b"));
        assert!(g.feasible_actions(&StateId::start(), &m).unwrap().is_empty());
    }

    #[test]
    fn partial_exclusion_keeps_order() {
        let g = assets::default_graph();
        let mut m = memory();
        m.record_informative(&ActionId::from("vqa"), "a red bus", "what color?");
        assert_eq!(m.current_state().as_str(), "vqa");
        m.record_uninformative(&ActionId::from("web_search"));
        let feasible = g.feasible_actions(&StateId::from("vqa"), &m).unwrap();
        assert_eq!(feasible.actions(), ids(&["llm_qa"]));
    }

    #[test]
    fn unknown_state_is_error() {
        let g = assets::default_graph();
        let err = g.feasible_actions(&StateId::from("nowhere"), &memory()).unwrap_err();
        assert_eq!(err, GraphError::UnknownState(StateId::from("nowhere")));
    }

    #[test]
    fn unconstrained_subtracts_traversed() {
        let registry = ids(&["a", "b", "c", "d", "e", "f", "g"]);
        let m = memory();
        assert_eq!(unconstrained_actions(&registry, &m, &StateId::start()).len(), 7);

        let mut m = memory();
        for t in ["b", "d", "f"] {
            m.record_uninformative(&ActionId::from(t));
        }
        let rest = unconstrained_actions(&registry, &m, &StateId::start());
        assert_eq!(rest.actions(), ids(&["a", "c", "e", "g"]));

        assert!(unconstrained_actions(&[], &m, &StateId::start()).is_empty());
    }

    #[test]
    fn ablation_prunes_edges() {
        let g = assets::default_graph();
        let excluded: BTreeSet<ActionId> = ids(&["caption", "vqa"]).into_iter().collect();
        let pruned = g.without_actions(&excluded).unwrap();
        assert_eq!(pruned.outgoing(&StateId::start()), ids(&["object_detection"]));
        assert!(pruned.edges().all(|(_, acts)| acts.iter().all(|a| !excluded.contains(a))));

        let all: BTreeSet<ActionId> = ids(&["caption", "vqa", "object_detection"]).into_iter().collect();
        assert!(g.without_actions(&all).is_err());
    }

    #[test]
    fn quoted_keys_round_trip() {
        let doc = "schema = \"waypoint.graph/v1\"\nstates = [\"START\", \"odd name\"]\nterminal = [\"odd name\"]\n\n[edges]\nSTART = [\"odd name\"]\n";
        let g = TransitionGraph::load(doc).unwrap();
        assert_eq!(g.serialize(), doc);
    }
}
