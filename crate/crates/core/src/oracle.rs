//! Language-model backends: scripted fixtures, trace replay and a remote client.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const ORACLE_SCHEMA: &str = "waypoint.oracle/v1";
pub const DEFAULT_MAX_OUTPUT: u32 = 1024;
pub const DEFAULT_RETRIES: u32 = 3;

/// Characters of normalized prompt kept as a relaxed-match excerpt.
pub const EXCERPT_CHARS: usize = 400;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleTag {
    Planner,
    Reasoner,
    Decomposition,
    ObjectSelect,
    LlmQa,
    QueryFormulation,
    Answer,
}

impl OracleTag {
    pub fn as_str(self) -> &'static str {
        match self {
            OracleTag::Planner => "planner",
            OracleTag::Reasoner => "reasoner",
            OracleTag::Decomposition => "decomposition",
            OracleTag::ObjectSelect => "object_select",
            OracleTag::LlmQa => "llm_qa",
            OracleTag::QueryFormulation => "query_formulation",
            OracleTag::Answer => "answer",
        }
    }
}

impl fmt::Display for OracleTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleRequest {
    pub prompt: String,
    pub temperature: f64,
    pub max_output: u32,
    pub tag: OracleTag,
}

impl OracleRequest {
    /// Temperature zero and the default output budget.
    pub fn new(tag: OracleTag, prompt: impl Into<String>) -> Self {
        Self {
            prompt: prompt.into(),
            temperature: 0.0,
            max_output: DEFAULT_MAX_OUTPUT,
            tag,
        }
    }

    pub fn hash(&self) -> String {
        prompt_hash(self.tag, &self.prompt)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "error", rename_all = "snake_case")]
pub enum OracleError {
    #[error("oracle unavailable: {reason}")]
    Unavailable { reason: String },
    #[error("no fixture for {tag} prompt {hash}")]
    FixtureMiss { tag: OracleTag, hash: String },
    #[error("prompt of {len} characters exceeds the oracle budget of {budget}")]
    BudgetExceeded { len: usize, budget: usize },
    #[error("replay expected {expected_tag} prompt {expected_hash} at exchange {index}, got {tag} prompt {hash}")]
    ReplayMismatch {
        index: usize,
        expected_tag: OracleTag,
        expected_hash: String,
        tag: OracleTag,
        hash: String,
    },
    #[error("replay ran out of recorded responses after {index} exchanges")]
    ReplayExhausted { index: usize },
}

pub trait Oracle: Send + Sync {
    fn complete(&self, request: &OracleRequest) -> Result<String, OracleError>;
}

/// Whitespace runs collapsed to one space, ends trimmed.
pub fn normalize_prompt(prompt: &str) -> String {
    prompt.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Hex SHA-256 of the tag and the normalized prompt.
pub fn prompt_hash(tag: OracleTag, prompt: &str) -> String {
    let mut h = Sha256::new();
    h.update(tag.as_str().as_bytes());
    h.update(b"\n");
    h.update(normalize_prompt(prompt).as_bytes());
    hex::encode(h.finalize())
}

/// Tail of the normalized prompt, where the query and context live.
pub fn prompt_excerpt(prompt: &str) -> String {
    let norm = normalize_prompt(prompt);
    let n = norm.chars().count();
    norm.chars().skip(n.saturating_sub(EXCERPT_CHARS)).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleFixture {
    pub tag: OracleTag,
    pub prompt_hash: String,
    pub prompt_excerpt: String,
    pub response: String,
}

impl OracleFixture {
    pub fn record(request: &OracleRequest, response: impl Into<String>) -> Self {
        Self {
            tag: request.tag,
            prompt_hash: request.hash(),
            prompt_excerpt: prompt_excerpt(&request.prompt),
            response: response.into(),
        }
    }
}

#[derive(Debug, Error)]
#[error("oracle fixture line {line}: {message}")]
pub struct OracleFixtureError {
    pub line: usize,
    pub message: String,
}

pub fn parse_oracle_fixtures(source: &str) -> Result<Vec<OracleFixture>, OracleFixtureError> {
    source
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| OracleFixtureError {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn serialize_oracle_fixtures(fixtures: &[OracleFixture]) -> String {
    fixtures
        .iter()
        .map(|f| serde_json::to_string(f).expect("fixture serializes") + "\n")
        .collect()
}

type Rule = dyn Fn(&OracleRequest) -> Option<String> + Send + Sync;

/// Pure lookup keyed by prompt hash, with optional relaxed matching and a
/// rule fallback for generated scenarios.
#[derive(Default)]
pub struct ScriptedOracle {
    by_hash: HashMap<String, OracleFixture>,
    relaxed: Vec<OracleFixture>,
    relaxed_mode: bool,
    rule: Option<Box<Rule>>,
}

impl fmt::Debug for ScriptedOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScriptedOracle")
            .field("fixtures", &self.by_hash.len())
            .field("relaxed", &self.relaxed_mode)
            .field("rule", &self.rule.is_some())
            .finish()
    }
}

impl ScriptedOracle {
    pub fn new(fixtures: impl IntoIterator<Item = OracleFixture>) -> Self {
        let mut by_hash = HashMap::new();
        let mut relaxed = Vec::new();
        for f in fixtures {
            relaxed.push(f.clone());
            by_hash.insert(f.prompt_hash.clone(), f);
        }
        relaxed.sort_by_key(|f| std::cmp::Reverse(f.prompt_excerpt.len()));
        Self {
            by_hash,
            relaxed,
            relaxed_mode: false,
            rule: None,
        }
    }

    pub fn load(source: &str) -> Result<Self, OracleFixtureError> {
        Ok(Self::new(parse_oracle_fixtures(source)?))
    }

    /// Answers every request with `rule`; `None` is a fixture miss.
    pub fn from_fn(rule: impl Fn(&OracleRequest) -> Option<String> + Send + Sync + 'static) -> Self {
        Self {
            rule: Some(Box::new(rule)),
            ..Self::default()
        }
    }

    /// On a hash miss, fall back to the fixture of the same tag whose excerpt
    /// is the longest one contained in the normalized prompt.
    pub fn relaxed(mut self, on: bool) -> Self {
        self.relaxed_mode = on;
        self
    }

    pub fn len(&self) -> usize {
        self.by_hash.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_hash.is_empty() && self.rule.is_none()
    }
}

impl Oracle for ScriptedOracle {
    fn complete(&self, request: &OracleRequest) -> Result<String, OracleError> {
        let hash = request.hash();
        if let Some(f) = self.by_hash.get(&hash) {
            if f.tag == request.tag {
                return Ok(f.response.clone());
            }
        }
        if self.relaxed_mode {
            let norm = normalize_prompt(&request.prompt);
            if let Some(f) = self
                .relaxed
                .iter()
                .find(|f| f.tag == request.tag && !f.prompt_excerpt.is_empty() && norm.contains(&f.prompt_excerpt))
            {
                return Ok(f.response.clone());
            }
        }
        if let Some(out) = self.rule.as_ref().and_then(|r| r(request)) {
            return Ok(out);
        }
        Err(OracleError::FixtureMiss { tag: request.tag, hash })
    }
}

/// Wraps an oracle and keeps a fixture record of every exchange.
pub struct RecordingOracle<O> {
    inner: O,
    log: Mutex<Vec<OracleFixture>>,
}

impl<O: Oracle> RecordingOracle<O> {
    pub fn new(inner: O) -> Self {
        Self {
            inner,
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn inner(&self) -> &O {
        &self.inner
    }

    /// Recorded fixtures, deduplicated by hash, in first-seen order.
    pub fn fixtures(&self) -> Vec<OracleFixture> {
        let log = self.log.lock().expect("oracle log");
        let mut seen = std::collections::HashSet::new();
        log.iter().filter(|f| seen.insert(f.prompt_hash.clone())).cloned().collect()
    }
}

impl<O: Oracle> Oracle for RecordingOracle<O> {
    fn complete(&self, request: &OracleRequest) -> Result<String, OracleError> {
        let out = self.inner.complete(request)?;
        self.log
            .lock()
            .expect("oracle log")
            .push(OracleFixture::record(request, out.clone()));
        Ok(out)
    }
}

/// One recorded exchange, as embedded in traces.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecordedExchange {
    pub tag: OracleTag,
    pub prompt_hash: String,
    pub response: String,
}

/// Serves recorded responses in order, checking each request against the
/// recorded tag and prompt hash.
#[derive(Debug)]
pub struct ReplayOracle {
    exchanges: Vec<RecordedExchange>,
    cursor: Mutex<usize>,
}

impl ReplayOracle {
    pub fn new(exchanges: Vec<RecordedExchange>) -> Self {
        Self {
            exchanges,
            cursor: Mutex::new(0),
        }
    }

    pub fn remaining(&self) -> usize {
        self.exchanges.len() - *self.cursor.lock().expect("replay cursor")
    }
}

impl Oracle for ReplayOracle {
    fn complete(&self, request: &OracleRequest) -> Result<String, OracleError> {
        let mut cursor = self.cursor.lock().expect("replay cursor");
        let index = *cursor;
        let recorded = self
            .exchanges
            .get(index)
            .ok_or(OracleError::ReplayExhausted { index })?;
        let hash = request.hash();
        if recorded.tag != request.tag || recorded.prompt_hash != hash {
            return Err(OracleError::ReplayMismatch {
                index,
                expected_tag: recorded.tag,
                expected_hash: recorded.prompt_hash.clone(),
                tag: request.tag,
                hash,
            });
        }
        *cursor += 1;
        Ok(recorded.response.clone())
    }
}

/// Serves per-tag response queues in order, regardless of prompt text.
///
/// Used to script scenarios before their prompt hashes are known; wrap it in
/// a [`RecordingOracle`] to turn a scripted run into fixtures.
#[derive(Debug, Default)]
pub struct SequenceOracle {
    queues: Mutex<HashMap<OracleTag, VecDeque<String>>>,
}

impl SequenceOracle {
    pub fn new(script: impl IntoIterator<Item = (OracleTag, Vec<String>)>) -> Self {
        Self {
            queues: Mutex::new(script.into_iter().map(|(t, v)| (t, v.into())).collect()),
        }
    }

    /// Responses not yet served for `tag`.
    pub fn remaining(&self, tag: OracleTag) -> usize {
        self.queues
            .lock()
            .expect("sequence queues")
            .get(&tag)
            .map_or(0, VecDeque::len)
    }
}

impl Oracle for SequenceOracle {
    fn complete(&self, request: &OracleRequest) -> Result<String, OracleError> {
        self.queues
            .lock()
            .expect("sequence queues")
            .get_mut(&request.tag)
            .and_then(VecDeque::pop_front)
            .ok_or_else(|| OracleError::FixtureMiss {
                tag: request.tag,
                hash: request.hash(),
            })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RemoteConfig {
    pub endpoint: String,
    /// Environment variable holding a bearer token.
    #[serde(default)]
    pub token_env: Option<String>,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
    #[serde(default = "default_retries")]
    pub retries: u32,
    #[serde(default = "default_backoff_ms")]
    pub backoff_ms: u64,
    /// Largest prompt sent, in characters.
    #[serde(default = "default_prompt_budget")]
    pub prompt_budget: usize,
}

fn default_timeout_secs() -> u64 {
    60
}
fn default_retries() -> u32 {
    DEFAULT_RETRIES
}
fn default_backoff_ms() -> u64 {
    250
}
fn default_prompt_budget() -> usize {
    crate::prompting::DEFAULT_PROMPT_BUDGET
}

impl RemoteConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            token_env: None,
            timeout_secs: default_timeout_secs(),
            retries: default_retries(),
            backoff_ms: default_backoff_ms(),
            prompt_budget: default_prompt_budget(),
        }
    }
}

#[derive(Serialize)]
struct WireRequest<'a> {
    schema: &'static str,
    prompt: &'a str,
    temperature: f64,
    max_output: u32,
    tag: OracleTag,
}

#[derive(Deserialize)]
struct WireResponse {
    text: String,
}

/// Text-in, text-out HTTP client with retry and exponential backoff.
pub struct RemoteOracle {
    config: RemoteConfig,
    token: Option<String>,
    client: reqwest::blocking::Client,
}

impl RemoteOracle {
    pub fn new(config: RemoteConfig) -> Result<Self, OracleError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| OracleError::Unavailable { reason: e.to_string() })?;
        let token = config.token_env.as_deref().and_then(|v| std::env::var(v).ok());
        Ok(Self { config, token, client })
    }

    fn attempt(&self, request: &OracleRequest) -> Result<String, Attempt> {
        let body = WireRequest {
            schema: ORACLE_SCHEMA,
            prompt: &request.prompt,
            temperature: request.temperature,
            max_output: request.max_output,
            tag: request.tag,
        };
        let mut req = self.client.post(&self.config.endpoint).json(&body);
        if let Some(t) = &self.token {
            req = req.bearer_auth(t);
        }
        let resp = req.send().map_err(|e| Attempt::Transient(e.to_string()))?;
        let status = resp.status();
        if status.as_u16() == 413 {
            return Err(Attempt::Fatal(OracleError::BudgetExceeded {
                len: request.prompt.chars().count(),
                budget: self.config.prompt_budget,
            }));
        }
        if status.is_server_error() || status.as_u16() == 429 {
            return Err(Attempt::Transient(format!("endpoint returned {status}")));
        }
        if !status.is_success() {
            return Err(Attempt::Fatal(OracleError::Unavailable {
                reason: format!("endpoint returned {status}"),
            }));
        }
        let wire: WireResponse = resp.json().map_err(|e| {
            Attempt::Fatal(OracleError::Unavailable {
                reason: format!("bad response body: {e}"),
            })
        })?;
        Ok(wire.text)
    }
}

enum Attempt {
    Transient(String),
    Fatal(OracleError),
}

impl Oracle for RemoteOracle {
    fn complete(&self, request: &OracleRequest) -> Result<String, OracleError> {
        let len = request.prompt.chars().count();
        if len > self.config.prompt_budget {
            return Err(OracleError::BudgetExceeded {
                len,
                budget: self.config.prompt_budget,
            });
        }
        let mut last = String::new();
        for attempt in 0..=self.config.retries {
            if attempt > 0 {
                std::thread::sleep(Duration::from_millis(self.config.backoff_ms << (attempt - 1)));
            }
            match self.attempt(request) {
                Ok(text) => return Ok(text),
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Transient(reason)) => last = reason,
            }
        }
        Err(OracleError::Unavailable {
            reason: format!("{} attempts failed, last: {last}", self.config.retries + 1),
        })
    }
}
