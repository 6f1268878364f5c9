//! Prompt templates and parsers for the structured oracle outputs.
//!
//! Templates are plain text files with `{{slot}}` placeholders, indexed by a
//! manifest that also carries the per-tool instruction lines shown to the
//! planner. Rendering is a pure function of the template and its inputs.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::exemplars::{Exemplar, ExemplarKind, ExemplarStore};
use crate::graph::{ActionId, FeasibleActionSet};
use crate::memory::WorkingMemory;
use crate::tools::DetectedObject;

pub const TEMPLATE_SCHEMA: &str = "waypoint.templates/v1";

/// Default prompt budget in characters.
pub const DEFAULT_PROMPT_BUDGET: usize = 120_000;

/// Appended to the planner prompt after an unparseable or infeasible choice.
pub const PLANNER_CORRECTION: &str =
    "Your previous answer could not be used. Reply with `Action: <tool>` naming exactly one of the tools listed above.";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptKind {
    Planner,
    ReasonerVisual,
    ReasonerKnowledge,
    Decomposition,
    ObjectSelect,
    QueryFormulation,
    Answer,
}

impl PromptKind {
    pub const ALL: [PromptKind; 7] = [
        PromptKind::Planner,
        PromptKind::ReasonerVisual,
        PromptKind::ReasonerKnowledge,
        PromptKind::Decomposition,
        PromptKind::ObjectSelect,
        PromptKind::QueryFormulation,
        PromptKind::Answer,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PromptKind::Planner => "planner",
            PromptKind::ReasonerVisual => "reasoner_visual",
            PromptKind::ReasonerKnowledge => "reasoner_knowledge",
            PromptKind::Decomposition => "decomposition",
            PromptKind::ObjectSelect => "object_select",
            PromptKind::QueryFormulation => "query_formulation",
            PromptKind::Answer => "answer",
        }
    }
}

impl fmt::Display for PromptKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PromptError {
    #[error("template error: {0}")]
    Template(String),
    #[error("template slot `{0}` was not filled")]
    MissingSlot(String),
    #[error("no template registered for `{0}`")]
    MissingTemplate(PromptKind),
    #[error("rendered prompt has {len} characters, over the budget of {budget}")]
    ContextOverflow { len: usize, budget: usize },
    #[error("output has no `{0}` marker")]
    MissingMarker(&'static str),
    #[error("tool `{0}` is not in the feasible set")]
    UnknownTool(String),
    #[error("object #{index} does not exist ({len} objects)")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("could not parse `{0}` as an object id")]
    BadIndex(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PromptTemplate {
    pub kind: PromptKind,
    pub skeleton: String,
}

impl PromptTemplate {
    pub fn new(kind: PromptKind, skeleton: impl Into<String>) -> Self {
        Self {
            kind,
            skeleton: skeleton.into(),
        }
    }

    /// Slot names referenced by the skeleton, in order of first use.
    pub fn slots(&self) -> Result<Vec<String>, PromptError> {
        let mut out: Vec<String> = Vec::new();
        for piece in self.pieces()? {
            if let Piece::Slot(name) = piece {
                if !out.iter().any(|s| s == name) {
                    out.push(name.to_string());
                }
            }
        }
        Ok(out)
    }

    fn pieces(&self) -> Result<Vec<Piece<'_>>, PromptError> {
        let mut pieces = Vec::new();
        let mut rest = self.skeleton.as_str();
        while let Some(open) = rest.find("{{") {
            pieces.push(Piece::Text(&rest[..open]));
            let after = &rest[open + 2..];
            let close = after
                .find("}}")
                .ok_or_else(|| PromptError::Template(format!("unclosed slot in {} template", self.kind)))?;
            let name = after[..close].trim();
            if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(PromptError::Template(format!("bad slot name `{name}`")));
            }
            pieces.push(Piece::Slot(name));
            rest = &after[close + 2..];
        }
        pieces.push(Piece::Text(rest));
        Ok(pieces)
    }

    /// Fills every slot; a referenced slot missing from `values` is an error.
    pub fn render(&self, values: &BTreeMap<&str, String>) -> Result<Prompt, PromptError> {
        let mut text = String::new();
        let mut slot_digest = BTreeMap::new();
        for piece in self.pieces()? {
            match piece {
                Piece::Text(t) => text.push_str(t),
                Piece::Slot(name) => {
                    let value = values
                        .get(name)
                        .ok_or_else(|| PromptError::MissingSlot(name.to_string()))?;
                    text.push_str(value);
                    slot_digest.insert(name.to_string(), short_digest(value));
                }
            }
        }
        Ok(Prompt {
            kind: self.kind,
            text,
            slot_digest,
        })
    }
}

enum Piece<'a> {
    Text(&'a str),
    Slot(&'a str),
}

fn short_digest(s: &str) -> String {
    hex::encode(&Sha256::digest(s.as_bytes())[..8])
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Prompt {
    pub kind: PromptKind,
    pub text: String,
    /// Slot name to a short hash of the content it was filled with.
    pub slot_digest: BTreeMap<String, String>,
}

/// Tool instruction lines, keyed by action name, in display order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TaskInstructions(IndexMap<ActionId, String>);

impl TaskInstructions {
    pub fn new(entries: impl IntoIterator<Item = (ActionId, String)>) -> Self {
        Self(entries.into_iter().collect())
    }

    pub fn get(&self, action: &ActionId) -> Option<&str> {
        self.0.get(action).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ActionId, &str)> {
        self.0.iter().map(|(a, s)| (a, s.as_str()))
    }

    /// One `  --name: instruction` line per action, newline separated.
    pub fn render(&self, actions: &FeasibleActionSet) -> String {
        actions
            .iter()
            .map(|a| format!("  --{}: {}", a, self.get(a).unwrap_or("")))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    schema: String,
    templates: BTreeMap<PromptKind, String>,
    #[serde(default)]
    task_instructions: IndexMap<String, String>,
}

/// Every template plus the tool instructions and the prompt budget.
#[derive(Clone, Debug)]
pub struct PromptLibrary {
    templates: BTreeMap<PromptKind, PromptTemplate>,
    instructions: TaskInstructions,
    budget: usize,
}

impl PromptLibrary {
    pub fn new(templates: impl IntoIterator<Item = PromptTemplate>, instructions: TaskInstructions) -> Self {
        Self {
            templates: templates.into_iter().map(|t| (t.kind, t)).collect(),
            instructions,
            budget: DEFAULT_PROMPT_BUDGET,
        }
    }

    /// Loads a manifest; `read` resolves template file names to contents.
    pub fn from_manifest(
        manifest: &str,
        mut read: impl FnMut(&str) -> Result<String, String>,
    ) -> Result<Self, PromptError> {
        let m: Manifest = toml::from_str(manifest).map_err(|e| PromptError::Template(e.message().to_string()))?;
        if m.schema != TEMPLATE_SCHEMA {
            return Err(PromptError::Template(format!(
                "expected schema `{TEMPLATE_SCHEMA}`, found `{}`",
                m.schema
            )));
        }
        let mut templates = Vec::new();
        for (kind, file) in m.templates {
            let mut text = read(&file).map_err(PromptError::Template)?;
            if text.ends_with('\n') {
                text.pop();
            }
            let template = PromptTemplate::new(kind, text);
            template.slots()?;
            templates.push(template);
        }
        let instructions = TaskInstructions::new(
            m.task_instructions
                .into_iter()
                .map(|(k, v)| (ActionId::new(k), v)),
        );
        Ok(Self::new(templates, instructions))
    }

    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self, PromptError> {
        let dir = dir.as_ref();
        let manifest = std::fs::read_to_string(dir.join("manifest.toml"))
            .map_err(|e| PromptError::Template(format!("{}: {e}", dir.display())))?;
        Self::from_manifest(&manifest, |file| {
            std::fs::read_to_string(dir.join(file)).map_err(|e| format!("{file}: {e}"))
        })
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = budget;
        self
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn instructions(&self) -> &TaskInstructions {
        &self.instructions
    }

    pub fn template(&self, kind: PromptKind) -> Result<&PromptTemplate, PromptError> {
        self.templates.get(&kind).ok_or(PromptError::MissingTemplate(kind))
    }

    fn render(&self, kind: PromptKind, values: BTreeMap<&str, String>) -> Result<Prompt, PromptError> {
        let prompt = self.template(kind)?.render(&values)?;
        let len = prompt.text.chars().count();
        if len > self.budget {
            return Err(PromptError::ContextOverflow {
                len,
                budget: self.budget,
            });
        }
        Ok(prompt)
    }

    /// Planner prompt: instructions for each feasible action, the selected
    /// exemplars, and the rendered memory, ending in an empty `Action:` line.
    pub fn planner(
        &self,
        exemplars: &[&Exemplar],
        memory: &WorkingMemory,
        actions: &FeasibleActionSet,
        instruction: &str,
    ) -> Result<Prompt, PromptError> {
        let values = BTreeMap::from([
            ("query", memory.active_query().to_string()),
            ("tools", self.instructions.render(actions)),
            ("exemplars", join_bodies(exemplars.iter().copied())),
            ("instruction", instruction.to_string()),
            ("context", memory.render_context()),
        ]);
        self.render(PromptKind::Planner, values)
    }

    pub fn decomposition(&self, store: &ExemplarStore, question: &str) -> Result<Prompt, PromptError> {
        let values = BTreeMap::from([
            ("exemplars", join_bodies(store.of_kind(ExemplarKind::Decomposition))),
            ("query", question.to_string()),
        ]);
        self.render(PromptKind::Decomposition, values)
    }

    /// Object selection over `(id, object)` pairs; ids keep their detection index.
    pub fn object_select(
        &self,
        store: &ExemplarStore,
        query: &str,
        objects: &[(usize, &DetectedObject)],
    ) -> Result<Prompt, PromptError> {
        let listing = objects
            .iter()
            .map(|(i, o)| format!("Object #{i} [\n  {}\n]", o.render_line()))
            .collect::<Vec<_>>()
            .join("\n");
        let values = BTreeMap::from([
            ("exemplars", join_bodies(store.of_kind(ExemplarKind::ObjectSelect))),
            ("query", query.to_string()),
            ("objects", listing),
        ]);
        self.render(PromptKind::ObjectSelect, values)
    }

    pub fn reasoner(
        &self,
        kind: PromptKind,
        exemplars: &[&Exemplar],
        memory: &WorkingMemory,
        tool: &ActionId,
        rendered_output: &str,
    ) -> Result<Prompt, PromptError> {
        debug_assert!(matches!(kind, PromptKind::ReasonerVisual | PromptKind::ReasonerKnowledge));
        let values = BTreeMap::from([
            ("exemplars", join_bodies(exemplars.iter().copied())),
            ("query", memory.active_query().to_string()),
            ("context", memory.render_context()),
            ("tool", tool.to_string()),
            ("output", rendered_output.to_string()),
        ]);
        self.render(kind, values)
    }

    pub fn query_formulation(&self, memory: &WorkingMemory, tool: &ActionId) -> Result<Prompt, PromptError> {
        let values = BTreeMap::from([
            ("tool", tool.to_string()),
            ("instruction", self.instructions.get(tool).unwrap_or("").to_string()),
            ("query", memory.active_query().to_string()),
            ("context", memory.render_context()),
        ]);
        self.render(PromptKind::QueryFormulation, values)
    }

    pub fn answer(&self, exemplars: &[&Exemplar], query: &str, memory: &WorkingMemory) -> Result<Prompt, PromptError> {
        let values = BTreeMap::from([
            ("exemplars", join_bodies(exemplars.iter().copied())),
            ("query", query.to_string()),
            ("context", memory.render_context()),
        ]);
        self.render(PromptKind::Answer, values)
    }
}

fn join_bodies<'a>(exemplars: impl IntoIterator<Item = &'a Exemplar>) -> String {
    exemplars
        .into_iter()
        .map(|e| e.body.trim_end())
        .collect::<Vec<_>>()
        .join("\n\n")
}

/// Tool and query chosen by the planner.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlannerDecision {
    pub tool: ActionId,
    #[serde(default)]
    pub query: String,
}

impl PlannerDecision {
    pub fn new(tool: impl Into<ActionId>, query: impl Into<String>) -> Self {
        Self {
            tool: tool.into(),
            query: query.into(),
        }
    }

    /// The planner output grammar: `Action: <tool>` plus an optional `Query:` line.
    pub fn format(&self) -> String {
        if self.query.is_empty() {
            format!("Action: {}", self.tool)
        } else {
            format!("Action: {}\nQuery: {}", self.tool, self.query)
        }
    }
}

/// Reads the last `Action:` marker and an optional `Query:` line after it.
pub fn parse_planner_output(text: &str, feasible: &FeasibleActionSet) -> Result<PlannerDecision, PromptError> {
    let pos = text.rfind("Action:").ok_or(PromptError::MissingMarker("Action:"))?;
    let after = &text[pos + "Action:".len()..];
    let token = after
        .split_whitespace()
        .next()
        .unwrap_or("")
        .trim_matches(|c: char| !(c.is_alphanumeric() || c == '_'));
    if token.is_empty() {
        return Err(PromptError::MissingMarker("Action:"));
    }
    let tool = ActionId::from(token);
    if !feasible.contains(&tool) {
        return Err(PromptError::UnknownTool(token.to_string()));
    }
    let query = after
        .find("Query:")
        .map(|q| {
            let rest = &after[q + "Query:".len()..];
            rest.lines().next().unwrap_or("").trim().to_string()
        })
        .unwrap_or_default();
    Ok(PlannerDecision { tool, query })
}

/// Splits a decomposition into its `Visual:` and `Knowledge:` lines.
pub fn parse_decomposition(text: &str) -> Result<(String, String), PromptError> {
    let line_after = |marker: &'static str, from: usize| -> Result<(String, usize), PromptError> {
        let pos = text[from..].find(marker).ok_or(PromptError::MissingMarker(marker))? + from;
        let rest = &text[pos + marker.len()..];
        Ok((rest.lines().next().unwrap_or("").trim().to_string(), pos))
    };
    let (visual, vpos) = line_after("Visual:", 0)?;
    let (knowledge, _) = line_after("Knowledge:", vpos)?;
    Ok((visual, knowledge))
}

/// Replaces every `#` in the knowledge question with the visual answer.
pub fn bind_visual_answer(knowledge_q: &str, visual_answer: &str) -> String {
    if knowledge_q.trim() == "#" {
        return visual_answer.to_string();
    }
    knowledge_q.replace('#', visual_answer)
}

const OBJECT_MARKER: &str = "object #id is";

/// Returns the id after the final "Object #ID is" marker and the rationale
/// that precedes it.
pub fn parse_object_select(text: &str, object_count: usize) -> Result<(usize, String), PromptError> {
    let lower = text.to_ascii_lowercase();
    let pos = lower.rfind(OBJECT_MARKER).ok_or(PromptError::MissingMarker("Object #ID is"))?;
    let digits: String = text[pos + OBJECT_MARKER.len()..]
        .trim_start()
        .chars()
        .take_while(char::is_ascii_digit)
        .collect();
    let index: usize = digits.parse().map_err(|_| PromptError::BadIndex(digits.clone()))?;
    if index >= object_count {
        return Err(PromptError::IndexOutOfRange {
            index,
            len: object_count,
        });
    }
    let line_start = text[..pos].rfind('\n').map_or(0, |i| i + 1);
    let mut rationale = text[..line_start].trim();
    if rationale.is_empty() {
        rationale = text[..pos].trim();
    }
    Ok((index, rationale.to_string()))
}

/// Reasoner classification of one tool output.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReasonerVerdict {
    Informative { extraction: String },
    Uninformative,
    FinalAnswer { answer: String },
}

impl ReasonerVerdict {
    pub fn kind_name(&self) -> &'static str {
        match self {
            ReasonerVerdict::Informative { .. } => "informative",
            ReasonerVerdict::Uninformative => "uninformative",
            ReasonerVerdict::FinalAnswer { .. } => "final_answer",
        }
    }
}

const UNINFORMATIVE_MARKERS: [&str; 2] = ["not informative", "cannot be answered"];
const ANSWER_MARKER: &str = "answer is";

/// Classifies reasoner text by marker precedence: uninformative markers win
/// over answer markers, which win over plain informative text.
///
/// Blank text and an answer marker with nothing after it carry no evidence;
/// the first is uninformative and the second falls through to informative.
pub fn parse_reasoner_output(text: &str) -> ReasonerVerdict {
    let lower = text.to_ascii_lowercase();
    if text.trim().is_empty() || UNINFORMATIVE_MARKERS.iter().any(|m| lower.contains(m)) {
        return ReasonerVerdict::Uninformative;
    }
    if let Some(pos) = lower.rfind(ANSWER_MARKER) {
        let rest = &text[pos + ANSWER_MARKER.len()..];
        let answer = rest
            .lines()
            .next()
            .unwrap_or("")
            .trim()
            .trim_end_matches(['.', '!', '?', ',', ';', ':'])
            .trim();
        if !answer.is_empty() {
            return ReasonerVerdict::FinalAnswer {
                answer: answer.to_string(),
            };
        }
    }
    ReasonerVerdict::Informative {
        extraction: text.trim().to_string(),
    }
}

/// First non-empty line of a query formulation reply, minus a leading label.
pub fn parse_query_formulation(text: &str) -> Option<String> {
    let line = text.lines().map(str::trim).find(|l| !l.is_empty())?;
    let line = ["Question:", "Query:"]
        .iter()
        .find_map(|p| line.strip_prefix(p))
        .unwrap_or(line)
        .trim();
    (!line.is_empty()).then(|| line.to_string())
}
