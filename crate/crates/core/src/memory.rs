//! Working memory for one run: the evidence log plus backtracking bookkeeping.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::graph::{ActionId, StateId};

/// A question about an image. Gold answers are only consulted by evaluation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VisualQuestion {
    pub id: String,
    pub image_ref: String,
    pub question: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gold_answers: Vec<String>,
}

impl VisualQuestion {
    pub fn new(id: impl Into<String>, image_ref: impl Into<String>, question: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            image_ref: image_ref.into(),
            question: question.into(),
            gold_answers: Vec::new(),
        }
    }

    pub fn with_gold_answers(mut self, answers: impl IntoIterator<Item = impl Into<String>>) -> Self {
        self.gold_answers = answers.into_iter().map(Into::into).collect();
        self
    }
}

/// Where a memory entry came from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EntrySource {
    Input,
    Tool(ActionId),
}

impl fmt::Display for EntrySource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EntrySource::Input => f.write_str("input"),
            EntrySource::Tool(a) => f.write_str(a.as_str()),
        }
    }
}

impl Serialize for EntrySource {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for EntrySource {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Ok(if s == "input" {
            EntrySource::Input
        } else {
            EntrySource::Tool(ActionId::new(s))
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryEntry {
    pub source: EntrySource,
    pub content: String,
    pub step_index: u32,
    /// The query that produced this entry.
    pub provenance: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkingMemory {
    question: VisualQuestion,
    visual_subquestion: String,
    knowledge_subquestion: String,
    active_query: String,
    entries: Vec<MemoryEntry>,
    traversed: BTreeMap<StateId, BTreeSet<ActionId>>,
    current_state: StateId,
}

impl WorkingMemory {
    /// Memory holding only the input question, positioned at `START`.
    ///
    /// Until a decomposition is set, both sub-questions are the question
    /// itself and the knowledge sub-question is the bare placeholder.
    pub fn new(question: VisualQuestion) -> Self {
        let entry = MemoryEntry {
            source: EntrySource::Input,
            content: question.question.clone(),
            step_index: 0,
            provenance: question.question.clone(),
        };
        Self {
            visual_subquestion: question.question.clone(),
            knowledge_subquestion: "#".to_string(),
            active_query: question.question.clone(),
            entries: vec![entry],
            traversed: BTreeMap::new(),
            current_state: StateId::start(),
            question,
        }
    }

    pub fn set_decomposition(&mut self, visual: impl Into<String>, knowledge: impl Into<String>) {
        self.visual_subquestion = visual.into();
        self.knowledge_subquestion = knowledge.into();
        self.active_query = self.visual_subquestion.clone();
    }

    /// Switches the active query to the knowledge sub-question with `#`
    /// bound to `visual_answer`, returning the new query.
    pub fn bind_visual_answer(&mut self, visual_answer: &str) -> &str {
        self.active_query = crate::prompting::bind_visual_answer(&self.knowledge_subquestion, visual_answer);
        &self.active_query
    }

    /// True when the knowledge sub-question is only the placeholder, so the
    /// visual answer is already the final answer.
    pub fn knowledge_is_placeholder(&self) -> bool {
        self.knowledge_subquestion.trim() == "#"
    }

    /// Appends the extraction, marks `tool` as taken at the current state and
    /// moves to the state named by `tool`.
    pub fn record_informative(&mut self, tool: &ActionId, extraction: &str, provenance: &str) {
        self.push_entry(EntrySource::Tool(tool.clone()), extraction, provenance);
        self.mark_taken(tool);
        self.current_state = StateId::from(tool);
    }

    /// Excludes `tool` at the current state. Entries and state are untouched.
    pub fn record_uninformative(&mut self, tool: &ActionId) {
        self.mark_taken(tool);
    }

    /// Appends evidence without a state change; used by fixed pipelines.
    pub fn append_evidence(&mut self, tool: &ActionId, content: &str, provenance: &str) {
        self.push_entry(EntrySource::Tool(tool.clone()), content, provenance);
    }

    fn push_entry(&mut self, source: EntrySource, content: &str, provenance: &str) {
        let step_index = self.entries.last().map_or(0, |e| e.step_index + 1);
        self.entries.push(MemoryEntry {
            source,
            content: content.to_string(),
            step_index,
            provenance: provenance.to_string(),
        });
    }

    fn mark_taken(&mut self, tool: &ActionId) {
        self.traversed
            .entry(self.current_state.clone())
            .or_default()
            .insert(tool.clone());
    }

    /// Bracketed listing of every entry's content in step order.
    pub fn render_context(&self) -> String {
        let mut out = String::from("[\n");
        for entry in &self.entries {
            for line in entry.content.lines() {
                out.push_str("  ");
                out.push_str(line);
                out.push('\n');
            }
        }
        out.push(']');
        out
    }

    pub fn question(&self) -> &VisualQuestion {
        &self.question
    }

    pub fn visual_subquestion(&self) -> &str {
        &self.visual_subquestion
    }

    pub fn knowledge_subquestion(&self) -> &str {
        &self.knowledge_subquestion
    }

    pub fn active_query(&self) -> &str {
        &self.active_query
    }

    pub fn entries(&self) -> &[MemoryEntry] {
        &self.entries
    }

    pub fn current_state(&self) -> &StateId {
        &self.current_state
    }

    pub fn traversed(&self, state: &StateId) -> Option<&BTreeSet<ActionId>> {
        self.traversed.get(state)
    }

    pub fn all_traversed(&self) -> &BTreeMap<StateId, BTreeSet<ActionId>> {
        &self.traversed
    }
}
