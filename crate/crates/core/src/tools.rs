//! Tool specs, typed payloads, backends, the registry and a read-through cache.
//!
//! Every tool call resolves to `(tool, canonical query, image_ref)`. Backends
//! are pluggable: [`MockBackend`] answers from fixture records, [`HttpToolBackend`]
//! speaks the versioned wire schema, and [`LlmQaBackend`] forwards to an oracle.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::Path;
use std::sync::{Arc, RwLock};
use std::time::Duration;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::ActionId;
use crate::oracle::{Oracle, OracleRequest, OracleTag};
use crate::prompting::TaskInstructions;

pub const TOOL_SCHEMA: &str = "waypoint.tool/v1";

/// Upper bound on related questions kept from a web search.
pub const MAX_RELATED_QUESTIONS: usize = 5;

/// The nine built-in tools, in registry order.
pub const BUILTIN_TOOLS: [&str; 9] = [
    "caption",
    "vqa",
    "object_detection",
    "object_select",
    "image_search",
    "identical_image_search",
    "ocr",
    "web_search",
    "llm_qa",
];

/// Tools whose backends need a text query.
pub const QUERY_TOOLS: [&str; 3] = ["vqa", "web_search", "llm_qa"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectedObject {
    #[serde(rename = "box")]
    pub bbox: [f64; 4],
    pub crop_ref: String,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

impl DetectedObject {
    pub fn render_line(&self) -> String {
        with_score(self.label.clone(), self.score)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Entity {
    pub name: String,
    #[serde(default)]
    pub kind: String,
    #[serde(default)]
    pub description: String,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OcrLine {
    pub text: String,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snippet {
    pub title: String,
    pub content: String,
}

/// At most [`MAX_RELATED_QUESTIONS`] entries, enforced on every construction path.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>")]
pub struct RelatedQuestions(Vec<String>);

impl RelatedQuestions {
    pub fn new(questions: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Self(
            questions
                .into_iter()
                .take(MAX_RELATED_QUESTIONS)
                .map(Into::into)
                .collect(),
        )
    }

    pub fn as_slice(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<String>> for RelatedQuestions {
    fn from(v: Vec<String>) -> Self {
        Self::new(v)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ToolPayload {
    Caption {
        text: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        region: Option<String>,
    },
    VqaAnswer {
        text: String,
    },
    Objects {
        objects: Vec<DetectedObject>,
    },
    ImageSearchResult {
        #[serde(default)]
        entities: Vec<Entity>,
        #[serde(default)]
        product_titles: Vec<String>,
        #[serde(default)]
        similar_captions: Vec<String>,
        #[serde(default)]
        identical_captions: Vec<String>,
    },
    OcrText {
        lines: Vec<OcrLine>,
    },
    WebSearchResult {
        #[serde(default)]
        snippets: Vec<Snippet>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        knowledge_panel: Option<String>,
        #[serde(default)]
        related_questions: RelatedQuestions,
    },
    LlmAnswer {
        text: String,
    },
}

impl ToolPayload {
    pub fn kind_name(&self) -> &'static str {
        match self {
            ToolPayload::Caption { .. } => "caption",
            ToolPayload::VqaAnswer { .. } => "vqa_answer",
            ToolPayload::Objects { .. } => "objects",
            ToolPayload::ImageSearchResult { .. } => "image_search_result",
            ToolPayload::OcrText { .. } => "ocr_text",
            ToolPayload::WebSearchResult { .. } => "web_search_result",
            ToolPayload::LlmAnswer { .. } => "llm_answer",
        }
    }

    /// Web and language-model answers are reasoned over as knowledge; the
    /// rest as visual evidence.
    pub fn is_knowledge(&self) -> bool {
        matches!(self, ToolPayload::WebSearchResult { .. } | ToolPayload::LlmAnswer { .. })
    }

    pub fn objects(&self) -> Option<&[DetectedObject]> {
        match self {
            ToolPayload::Objects { objects } => Some(objects),
            _ => None,
        }
    }

    /// One display line per item, unbracketed.
    pub fn lines(&self) -> Vec<String> {
        let text_line = |t: &str| if t.trim().is_empty() { vec![] } else { vec![t.trim().to_string()] };
        match self {
            ToolPayload::Caption { text, region } => match region {
                Some(r) if !text.trim().is_empty() => vec![format!("{} ({r})", text.trim())],
                _ => text_line(text),
            },
            ToolPayload::VqaAnswer { text } | ToolPayload::LlmAnswer { text } => text_line(text),
            ToolPayload::Objects { objects } => objects.iter().map(DetectedObject::render_line).collect(),
            ToolPayload::ImageSearchResult {
                entities,
                product_titles,
                similar_captions,
                identical_captions,
            } => {
                let mut out: Vec<String> = entities
                    .iter()
                    .map(|e| {
                        let mut line = e.name.clone();
                        if !e.kind.is_empty() {
                            line.push_str(&format!(" ({})", e.kind));
                        }
                        if !e.description.is_empty() {
                            line.push_str(&format!(": {}", e.description));
                        }
                        with_score(line, Some(e.score))
                    })
                    .collect();
                out.extend(product_titles.iter().map(|t| format!("Product: {t}")));
                out.extend(similar_captions.iter().map(|c| format!("Similar image: {c}")));
                out.extend(identical_captions.iter().map(|c| format!("Identical image: {c}")));
                out
            }
            ToolPayload::OcrText { lines } => lines.iter().map(|l| with_score(l.text.clone(), Some(l.score))).collect(),
            ToolPayload::WebSearchResult {
                snippets,
                knowledge_panel,
                related_questions,
            } => {
                let mut out = Vec::new();
                for s in snippets {
                    out.push(format!("Title: {}", s.title));
                    out.push(format!("Content: {}", s.content));
                }
                if let Some(k) = knowledge_panel {
                    out.push(format!("Knowledge panel: {k}"));
                }
                out.extend(related_questions.as_slice().iter().map(|q| format!("Related question: {q}")));
                out
            }
        }
    }
}

fn with_score(mut line: String, score: Option<f64>) -> String {
    if let Some(s) = score {
        line.push_str(&format!(" (score={s:.1})"));
    }
    line
}

/// Bracketed list with one line per item; an empty payload renders as `[]`.
pub fn render_tool_output(payload: &ToolPayload) -> String {
    let lines = payload.lines();
    if lines.is_empty() {
        return "[]".to_string();
    }
    let mut out = String::from("[\n");
    for line in lines {
        out.push_str("  ");
        out.push_str(&line);
        out.push('\n');
    }
    out.push(']');
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToolOutput {
    pub tool: ActionId,
    pub payload: ToolPayload,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Live,
    Mock,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolSpec {
    pub name: ActionId,
    pub needs_query: bool,
    pub description: String,
    pub backend: BackendKind,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolRequest {
    pub tool: ActionId,
    pub query: String,
    pub image_ref: String,
}

#[derive(Debug, Error, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "error", rename_all = "snake_case")]
pub enum ToolError {
    #[error("tool `{tool}` is not registered")]
    Unregistered { tool: ActionId },
    #[error("tool `{tool}` unavailable: {reason}")]
    Unavailable { tool: ActionId, reason: String },
    #[error("bad query for `{tool}`: {reason}")]
    BadQuery { tool: ActionId, reason: String },
}

pub trait ToolBackend: Send + Sync {
    fn call(&self, request: &ToolRequest) -> Result<ToolPayload, ToolError>;
}

impl<F> ToolBackend for F
where
    F: Fn(&ToolRequest) -> Result<ToolPayload, ToolError> + Send + Sync,
{
    fn call(&self, request: &ToolRequest) -> Result<ToolPayload, ToolError> {
        self(request)
    }
}

/// Lowercased with whitespace runs collapsed.
pub fn canonical_query(query: &str) -> String {
    query
        .split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CallKey {
    pub tool: ActionId,
    pub query: String,
    pub image_ref: String,
}

impl CallKey {
    pub fn new(tool: &ActionId, query: &str, image_ref: &str) -> Self {
        Self {
            tool: tool.clone(),
            query: canonical_query(query),
            image_ref: image_ref.to_string(),
        }
    }

    pub fn of(request: &ToolRequest) -> Self {
        Self::new(&request.tool, &request.query, &request.image_ref)
    }
}

/// Fixture record shared by mock backends and the persisted cache.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToolFixture {
    pub tool: ActionId,
    pub query: String,
    pub image_ref: String,
    #[serde(flatten)]
    pub outcome: FixtureOutcome,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixtureOutcome {
    Payload(ToolPayload),
    Error(ToolError),
}

#[derive(Debug, Error)]
#[error("tool fixture line {line}: {message}")]
pub struct FixtureError {
    pub line: usize,
    pub message: String,
}

pub fn parse_fixtures(source: &str) -> Result<Vec<ToolFixture>, FixtureError> {
    source
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| FixtureError {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

/// Pure lookup over fixture records; a missing key is `Unavailable`.
#[derive(Debug, Default)]
pub struct MockBackend {
    entries: HashMap<CallKey, FixtureOutcome>,
}

impl MockBackend {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_fixtures(fixtures: impl IntoIterator<Item = ToolFixture>) -> Self {
        let mut m = Self::new();
        for f in fixtures {
            m.entries
                .insert(CallKey::new(&f.tool, &f.query, &f.image_ref), f.outcome);
        }
        m
    }

    pub fn load(source: &str) -> Result<Self, FixtureError> {
        Ok(Self::from_fixtures(parse_fixtures(source)?))
    }

    pub fn insert(&mut self, tool: &ActionId, query: &str, image_ref: &str, payload: ToolPayload) {
        self.entries
            .insert(CallKey::new(tool, query, image_ref), FixtureOutcome::Payload(payload));
    }

    pub fn insert_outcome(&mut self, key: CallKey, outcome: FixtureOutcome) {
        self.entries.insert(key, outcome);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl ToolBackend for MockBackend {
    fn call(&self, request: &ToolRequest) -> Result<ToolPayload, ToolError> {
        match self.entries.get(&CallKey::of(request)) {
            Some(FixtureOutcome::Payload(p)) => Ok(p.clone()),
            Some(FixtureOutcome::Error(e)) => Err(e.clone()),
            None => Err(ToolError::Unavailable {
                tool: request.tool.clone(),
                reason: format!(
                    "no fixture for query `{}` on `{}`",
                    canonical_query(&request.query),
                    request.image_ref
                ),
            }),
        }
    }
}

#[derive(Serialize)]
struct WireRequest<'a> {
    schema: &'static str,
    tool: &'a str,
    query: &'a str,
    image_ref: &'a str,
}

#[derive(Deserialize)]
struct WireResponse {
    payload: ToolPayload,
}

/// One POST per call to a live adapter speaking the versioned tool schema.
pub struct HttpToolBackend {
    endpoint: String,
    token: Option<String>,
    client: reqwest::blocking::Client,
}

impl HttpToolBackend {
    /// `token_env` names an environment variable holding a bearer token.
    pub fn new(endpoint: impl Into<String>, token_env: Option<&str>, timeout: Duration) -> Result<Self, ToolError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| ToolError::Unavailable {
                tool: ActionId::from("http"),
                reason: e.to_string(),
            })?;
        Ok(Self {
            endpoint: endpoint.into(),
            token: token_env.and_then(|v| std::env::var(v).ok()),
            client,
        })
    }
}

impl ToolBackend for HttpToolBackend {
    fn call(&self, request: &ToolRequest) -> Result<ToolPayload, ToolError> {
        let unavailable = |reason: String| ToolError::Unavailable {
            tool: request.tool.clone(),
            reason,
        };
        let body = WireRequest {
            schema: TOOL_SCHEMA,
            tool: request.tool.as_str(),
            query: &request.query,
            image_ref: &request.image_ref,
        };
        let mut req = self.client.post(&self.endpoint).json(&body);
        if let Some(t) = &self.token {
            req = req.bearer_auth(t);
        }
        let resp = req.send().map_err(|e| unavailable(e.to_string()))?;
        let status = resp.status();
        if status.as_u16() == 400 || status.as_u16() == 422 {
            return Err(ToolError::BadQuery {
                tool: request.tool.clone(),
                reason: format!("backend rejected the request ({status})"),
            });
        }
        if !status.is_success() {
            return Err(unavailable(format!("backend returned {status}")));
        }
        let wire: WireResponse = resp.json().map_err(|e| unavailable(e.to_string()))?;
        Ok(wire.payload)
    }
}

/// Answers the query with the language model.
pub struct LlmQaBackend {
    oracle: Arc<dyn Oracle>,
}

impl LlmQaBackend {
    pub fn new(oracle: Arc<dyn Oracle>) -> Self {
        Self { oracle }
    }
}

impl ToolBackend for LlmQaBackend {
    fn call(&self, request: &ToolRequest) -> Result<ToolPayload, ToolError> {
        let prompt = format!("Answer the question in one short sentence.\nQuestion: {}\nAnswer:", request.query);
        let text = self
            .oracle
            .complete(&OracleRequest::new(OracleTag::LlmQa, prompt))
            .map_err(|e| ToolError::Unavailable {
                tool: request.tool.clone(),
                reason: e.to_string(),
            })?;
        Ok(ToolPayload::LlmAnswer { text: text.trim().to_string() })
    }
}

/// Read-through cache keyed like the fixtures. Concurrent writers on the same
/// key store equal payloads, so last write wins.
#[derive(Debug, Default)]
pub struct ToolCache {
    entries: RwLock<HashMap<CallKey, ToolPayload>>,
}

impl ToolCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, key: &CallKey) -> Option<ToolPayload> {
        self.entries.read().expect("cache lock").get(key).cloned()
    }

    pub fn insert(&self, key: CallKey, payload: ToolPayload) {
        self.entries.write().expect("cache lock").insert(key, payload);
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn load(source: &str) -> Result<Self, FixtureError> {
        let cache = Self::new();
        for f in parse_fixtures(source)? {
            if let FixtureOutcome::Payload(p) = f.outcome {
                cache.insert(CallKey::new(&f.tool, &f.query, &f.image_ref), p);
            }
        }
        Ok(cache)
    }

    /// Fixture-format lines sorted by key.
    pub fn serialize(&self) -> String {
        let entries = self.entries.read().expect("cache lock");
        let mut keys: Vec<_> = entries.keys().collect();
        keys.sort();
        keys.into_iter()
            .map(|k| {
                let record = ToolFixture {
                    tool: k.tool.clone(),
                    query: k.query.clone(),
                    image_ref: k.image_ref.clone(),
                    outcome: FixtureOutcome::Payload(entries[k].clone()),
                };
                serde_json::to_string(&record).expect("fixture serializes") + "\n"
            })
            .collect()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        std::fs::write(path, self.serialize())
    }
}

/// Registered tools with their backends, in registration order.
#[derive(Clone, Default)]
pub struct ToolRegistry {
    specs: IndexMap<ActionId, ToolSpec>,
    backends: HashMap<ActionId, Arc<dyn ToolBackend>>,
    cache: Option<Arc<ToolCache>>,
}

impl fmt::Debug for ToolRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ToolRegistry")
            .field("tools", &self.specs.keys().collect::<Vec<_>>())
            .field("cached", &self.cache.is_some())
            .finish()
    }
}

impl ToolRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Every built-in tool served by one backend, with descriptions taken from
    /// the planner instructions.
    pub fn builtin(instructions: &TaskInstructions, backend: Arc<dyn ToolBackend>, kind: BackendKind) -> Self {
        let mut r = Self::new();
        for name in BUILTIN_TOOLS {
            let id = ActionId::from(name);
            let spec = ToolSpec {
                needs_query: QUERY_TOOLS.contains(&name),
                description: instructions.get(&id).unwrap_or_default().to_string(),
                name: id,
                backend: kind,
            };
            r.register(spec, backend.clone());
        }
        r
    }

    pub fn register(&mut self, spec: ToolSpec, backend: Arc<dyn ToolBackend>) -> &mut Self {
        self.backends.insert(spec.name.clone(), backend);
        self.specs.insert(spec.name.clone(), spec);
        self
    }

    /// Replaces the backend of an already registered tool.
    pub fn set_backend(&mut self, tool: &ActionId, backend: Arc<dyn ToolBackend>) -> Result<(), ToolError> {
        if !self.specs.contains_key(tool) {
            return Err(ToolError::Unregistered { tool: tool.clone() });
        }
        self.backends.insert(tool.clone(), backend);
        Ok(())
    }

    /// Same specs, every backend replaced by `backend`, no cache.
    pub fn with_backend(&self, backend: Arc<dyn ToolBackend>) -> Self {
        Self {
            specs: self.specs.clone(),
            backends: self.specs.keys().map(|k| (k.clone(), backend.clone())).collect(),
            cache: None,
        }
    }

    pub fn with_cache(mut self, cache: Arc<ToolCache>) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn cache(&self) -> Option<&Arc<ToolCache>> {
        self.cache.as_ref()
    }

    /// The registry minus `excluded`.
    pub fn without(&self, excluded: &BTreeSet<ActionId>) -> Self {
        let mut r = self.clone();
        r.specs.retain(|k, _| !excluded.contains(k));
        r.backends.retain(|k, _| !excluded.contains(k));
        r
    }

    pub fn names(&self) -> impl Iterator<Item = &ActionId> {
        self.specs.keys()
    }

    pub fn spec(&self, tool: &ActionId) -> Option<&ToolSpec> {
        self.specs.get(tool)
    }

    pub fn specs(&self) -> impl Iterator<Item = &ToolSpec> {
        self.specs.values()
    }

    pub fn contains(&self, tool: &ActionId) -> bool {
        self.specs.contains_key(tool)
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    pub fn execute(&self, tool: &ActionId, query: &str, image_ref: &str) -> Result<ToolOutput, ToolError> {
        let spec = self
            .specs
            .get(tool)
            .ok_or_else(|| ToolError::Unregistered { tool: tool.clone() })?;
        if spec.needs_query && query.trim().is_empty() {
            return Err(ToolError::BadQuery {
                tool: tool.clone(),
                reason: "query is empty".to_string(),
            });
        }
        let key = CallKey::new(tool, query, image_ref);
        if let Some(payload) = self.cache.as_ref().and_then(|c| c.get(&key)) {
            return Ok(ToolOutput {
                tool: tool.clone(),
                payload,
            });
        }
        let backend = self
            .backends
            .get(tool)
            .ok_or_else(|| ToolError::Unregistered { tool: tool.clone() })?;
        let payload = backend.call(&ToolRequest {
            tool: tool.clone(),
            query: query.to_string(),
            image_ref: image_ref.to_string(),
        })?;
        if let Some(c) = &self.cache {
            c.insert(key, payload.clone());
        }
        Ok(ToolOutput {
            tool: tool.clone(),
            payload,
        })
    }
}
