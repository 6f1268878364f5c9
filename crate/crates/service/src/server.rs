//! HTTP API for step-wise sessions, persisted traces and analytics.
//!
//! Human sessions record externally chosen tool calls; agent sessions run the
//! planner loop in the background (or step by step) and expose an incremental
//! event feed.

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tower_http::cors::{Any, CorsLayer};
use tower_http::services::ServeDir;

use waypoint::assets;
use waypoint::engine::{AgentSession, GraphMode, HumanActionError, HumanSession, SessionConfig, SessionView};
use waypoint::eval::{load_dataset, DatasetFormat, DatasetRecord};
use waypoint::graph::{unconstrained_actions, ActionId, StateId};
use waypoint::memory::VisualQuestion;
use waypoint::tools::{render_tool_output, DetectedObject, ToolError, ToolPayload};
use waypoint::trace::{
    histogram_csv, induce_graph, length_distribution, tool_frequency, verdict_frequency, RunTrace, TraceEvent,
    TraceHeader, TraceMode, TraceStore,
};

use crate::profile::{Profile, ProfileError};

pub const SERVICE_SCHEMA: &str = "waypoint.service/v1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    #[serde(default = "default_bind")]
    pub bind: String,
    /// Where finished traces are persisted.
    #[serde(default = "default_data_dir")]
    pub data_dir: PathBuf,
    /// Served under `/files`; image refs are relative to it.
    #[serde(default = "default_static_dir")]
    pub static_dir: PathBuf,
    /// Allowed browser origins; empty allows any.
    #[serde(default)]
    pub cors_origins: Vec<String>,
    /// Default collection mode for human sessions.
    #[serde(default = "default_collection")]
    pub collection: GraphMode,
    /// Run object detection when a human session opens.
    #[serde(default = "default_true")]
    pub preload_detection: bool,
    /// Dataset whose unanswered questions are offered one after another.
    #[serde(default)]
    pub playlist: Option<PathBuf>,
    /// Named backend profiles; `default` is added when absent.
    #[serde(default)]
    pub profiles: BTreeMap<String, Profile>,
}

fn default_bind() -> String {
    "127.0.0.1:8080".into()
}
fn default_data_dir() -> PathBuf {
    "waypoint-data".into()
}
fn default_static_dir() -> PathBuf {
    PathBuf::from(assets::FIXTURES_DIR)
}
fn default_collection() -> GraphMode {
    GraphMode::Unconstrained
}
fn default_true() -> bool {
    true
}

impl Default for ServiceConfig {
    fn default() -> Self {
        toml::from_str("").expect("defaults deserialize")
    }
}

impl ServiceConfig {
    pub fn load(path: impl AsRef<std::path::Path>) -> anyhow::Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("missing service config file: {} ({e})", path.display()))?;
        let mut config: ServiceConfig =
            toml::from_str(&text).map_err(|e| anyhow::anyhow!("invalid service config {}: {}", path.display(), e.message()))?;
        if let Some(base) = path.parent() {
            for p in config.profiles.values_mut() {
                *p = std::mem::take(p).relative_to(base);
            }
        }
        Ok(config)
    }
}

enum Live {
    Human(HumanSession),
    Agent(Option<AgentSession>),
}

struct Entry {
    live: Live,
    config: SessionConfig,
    question: VisualQuestion,
    /// Set once the session is closed and persisted.
    trace: Option<RunTrace>,
}

impl Entry {
    fn events(&self) -> &[TraceEvent] {
        if let Some(t) = &self.trace {
            return &t.events;
        }
        match &self.live {
            Live::Human(s) => s.events(),
            Live::Agent(Some(s)) => s.events(),
            Live::Agent(None) => &[],
        }
    }

    fn closed(&self) -> bool {
        self.trace.is_some()
    }
}

/// Shared service state.
#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

struct Inner {
    config: ServiceConfig,
    profiles: BTreeMap<String, SessionConfig>,
    store: TraceStore,
    playlist: Vec<DatasetRecord>,
    sessions: Mutex<HashMap<String, Arc<Mutex<Entry>>>>,
}

impl AppState {
    /// Builds every profile up front so missing files fail at startup.
    pub fn new(mut config: ServiceConfig) -> anyhow::Result<Self> {
        config.profiles.entry("default".into()).or_default();
        let profiles = config
            .profiles
            .iter()
            .map(|(name, p)| {
                p.build()
                    .map(|c| (name.clone(), c))
                    .map_err(|e: ProfileError| anyhow::anyhow!("profile `{name}`: {e}"))
            })
            .collect::<anyhow::Result<_>>()?;
        let store = TraceStore::open(&config.data_dir)?;
        let playlist = match &config.playlist {
            Some(p) => load_dataset(p, DatasetFormat::from_path(p))
                .map_err(|e| anyhow::anyhow!("playlist {}: {e}", p.display()))?,
            None => Vec::new(),
        };
        Ok(Self {
            inner: Arc::new(Inner {
                config,
                profiles,
                store,
                playlist,
                sessions: Mutex::new(HashMap::new()),
            }),
        })
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.inner.config
    }

    pub fn store(&self) -> &TraceStore {
        &self.inner.store
    }

    fn entry(&self, id: &str) -> Result<Arc<Mutex<Entry>>, ApiError> {
        self.inner
            .sessions
            .lock()
            .expect("session map")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("unknown session `{id}`")))
    }

    fn next_question(&self) -> Option<DatasetRecord> {
        let done: Vec<String> = self
            .inner
            .store
            .list()
            .unwrap_or_default()
            .into_iter()
            .filter(|e| e.mode == TraceMode::Human)
            .map(|e| e.question_id)
            .collect();
        self.inner.playlist.iter().find(|r| !done.contains(&r.id)).cloned()
    }

    fn persist(&self, trace: &RunTrace) -> Result<PathBuf, ApiError> {
        self.inner.store.save(trace).map_err(ApiError::internal)
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
    view: Option<Value>,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
            view: None,
        }
    }

    fn internal(e: impl std::fmt::Display) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
    }

    fn with_view(mut self, view: Value) -> Self {
        self.view = Some(view);
        self
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({"schema": SERVICE_SCHEMA, "error": self.message});
        if let Some(v) = self.view {
            body["view"] = v;
        }
        (self.status, Json(body)).into_response()
    }
}

fn human_error(e: HumanActionError) -> ApiError {
    let status = match &e {
        HumanActionError::Closed => StatusCode::CONFLICT,
        HumanActionError::NotAvailable(_) | HumanActionError::EmptyQuery(_) => StatusCode::UNPROCESSABLE_ENTITY,
        HumanActionError::MissingAnswer => StatusCode::BAD_REQUEST,
        HumanActionError::Tool(ToolError::BadQuery { .. }) => StatusCode::UNPROCESSABLE_ENTITY,
        HumanActionError::Tool(_) => StatusCode::SERVICE_UNAVAILABLE,
    };
    ApiError::new(status, e.to_string())
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f).await.map_err(ApiError::internal)?
}

/// What a client shows for an agent session.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentView {
    pub session_id: String,
    pub question: String,
    pub image_ref: String,
    pub graph_mode: GraphMode,
    pub state: StateId,
    pub feasible: Vec<ActionId>,
    pub memory: String,
    pub decisions: usize,
    pub closed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<TraceHeader>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum View {
    Human(SessionView),
    Agent(AgentView),
}

fn view_of(id: &str, e: &Entry) -> View {
    match &e.live {
        Live::Human(s) => View::Human(s.view()),
        Live::Agent(s) => {
            let (state, feasible, memory, decisions) = match s {
                Some(s) => {
                    let m = s.memory();
                    let state = m.current_state().clone();
                    let feasible = match e.config.mode {
                        GraphMode::Constrained => e.config.graph.feasible_actions(&state, m).unwrap_or_default(),
                        GraphMode::Unconstrained => unconstrained_actions(e.config.registry.names(), m, &state),
                    };
                    let feasible = if s.is_finished() { Vec::new() } else { feasible.into_vec() };
                    (state, feasible, m.render_context(), s.decisions())
                }
                None => (StateId::start(), Vec::new(), String::new(), e.trace.as_ref().map_or(0, |t| t.count("planner_decision"))),
            };
            View::Agent(AgentView {
                session_id: id.to_string(),
                question: e.question.question.clone(),
                image_ref: e.question.image_ref.clone(),
                graph_mode: e.config.mode,
                state,
                feasible,
                memory,
                decisions,
                closed: e.closed(),
                outcome: e.trace.as_ref().map(|t| t.header.clone()),
            })
        }
    }
}

fn view_json(id: &str, e: &Entry) -> Value {
    serde_json::to_value(view_of(id, e)).expect("view serializes")
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionMode {
    #[default]
    Human,
    Agent,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    pub question: String,
    pub image_ref: String,
    #[serde(default)]
    pub question_id: Option<String>,
    #[serde(default)]
    pub mode: SessionMode,
    #[serde(default)]
    pub config_ref: Option<String>,
    /// Human mode: overrides the configured collection mode.
    #[serde(default)]
    pub collection: Option<GraphMode>,
    /// Agent mode: run to completion in the background (default) or wait
    /// for explicit step calls.
    #[serde(default)]
    pub autorun: Option<bool>,
}

async fn create_session(State(app): State<AppState>, Json(req): Json<CreateSession>) -> Result<Response, ApiError> {
    if req.question.trim().is_empty() || req.image_ref.trim().is_empty() {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "question and image_ref are required"));
    }
    let config_ref = req.config_ref.clone().unwrap_or_else(|| "default".into());
    let Some(base) = app.inner.profiles.get(&config_ref).cloned() else {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, format!("unknown config_ref `{config_ref}`")));
    };
    let id = uuid::Uuid::new_v4().to_string();
    let question = VisualQuestion::new(
        req.question_id.clone().unwrap_or_else(|| id.clone()),
        req.image_ref.trim(),
        req.question.trim(),
    );
    let config = base.with_session_id(id.clone());
    let autorun = req.autorun.unwrap_or(true);
    let app2 = app.clone();
    let id2 = id.clone();
    let (entry, view) = blocking(move || {
        let live = match req.mode {
            SessionMode::Human => {
                let collection = req.collection.unwrap_or(app2.inner.config.collection);
                let s = HumanSession::open(config.clone(), question.clone(), collection, app2.inner.config.preload_detection)
                    .map_err(|e| ApiError::new(StatusCode::SERVICE_UNAVAILABLE, e.to_string()))?;
                Live::Human(s)
            }
            SessionMode::Agent => Live::Agent(Some(AgentSession::open(config.clone(), question.clone()))),
        };
        let entry = Entry {
            live,
            config,
            question,
            trace: None,
        };
        let view = view_json(&id2, &entry);
        Ok((entry, view))
    })
    .await?;
    let entry = Arc::new(Mutex::new(entry));
    app.inner
        .sessions
        .lock()
        .expect("session map")
        .insert(id.clone(), entry.clone());
    let mut body = json!({
        "schema": SERVICE_SCHEMA,
        "session_id": id,
        "mode": req.mode,
        "initial_view": view,
    });
    if req.mode == SessionMode::Agent {
        body["events_url"] = json!(format!("/sessions/{id}/events"));
        if autorun {
            let app = app.clone();
            let id2 = id.clone();
            tokio::task::spawn_blocking(move || while !step_agent(&app, &id2, &entry).unwrap_or(true) {});
        }
    }
    Ok((StatusCode::CREATED, Json(body)).into_response())
}

/// Advances an agent session by one decision; persists the trace when it
/// finishes. Returns whether the session is closed.
fn step_agent(app: &AppState, id: &str, entry: &Mutex<Entry>) -> Result<bool, ApiError> {
    let mut e = entry.lock().expect("session lock");
    if e.closed() {
        return Ok(true);
    }
    let Live::Agent(slot) = &mut e.live else {
        return Err(ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "human sessions are not stepped"));
    };
    let session = slot.as_mut().expect("open agent session");
    session.step();
    if !session.is_finished() {
        return Ok(false);
    }
    let result = slot.take().expect("open agent session").finish();
    app.persist(&result.trace)?;
    tracing::info!(session = id, status = %result.status, "agent session finished");
    e.trace = Some(result.trace);
    Ok(true)
}

async fn get_session(State(app): State<AppState>, UrlPath(id): UrlPath<String>) -> Result<Json<Value>, ApiError> {
    let entry = app.entry(&id)?;
    let e = entry.lock().expect("session lock");
    Ok(Json(json!({"schema": SERVICE_SCHEMA, "session_id": id, "view": view_json(&id, &e)})))
}

async fn step_session(State(app): State<AppState>, UrlPath(id): UrlPath<String>) -> Result<Json<Value>, ApiError> {
    let entry = app.entry(&id)?;
    let app2 = app.clone();
    let id2 = id.clone();
    blocking(move || {
        if entry.lock().expect("session lock").closed() {
            return Err(ApiError::new(StatusCode::CONFLICT, "session is closed"));
        }
        step_agent(&app2, &id2, &entry)?;
        let e = entry.lock().expect("session lock");
        Ok(Json(json!({"schema": SERVICE_SCHEMA, "session_id": id2, "view": view_json(&id2, &e)})))
    })
    .await
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionRequest {
    pub tool: ActionId,
    #[serde(default)]
    pub query: String,
    #[serde(default)]
    pub object_index: Option<usize>,
}

#[derive(Debug, Serialize)]
struct OutputView {
    tool: ActionId,
    payload: ToolPayload,
    rendered: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    objects: Option<Vec<DetectedObject>>,
}

async fn submit_action(
    State(app): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Json(req): Json<ActionRequest>,
) -> Result<Json<Value>, ApiError> {
    let entry = app.entry(&id)?;
    blocking(move || {
        let mut e = entry.lock().expect("session lock");
        if e.closed() {
            return Err(ApiError::new(StatusCode::CONFLICT, "session is closed"));
        }
        let Live::Human(s) = &mut e.live else {
            return Err(ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "agent sessions do not take actions"));
        };
        match s.submit_action(&req.tool, &req.query, req.object_index) {
            Ok(out) => {
                let output = OutputView {
                    tool: out.tool.clone(),
                    rendered: render_tool_output(&out.payload),
                    objects: out.payload.objects().map(<[DetectedObject]>::to_vec),
                    payload: out.payload,
                };
                Ok(Json(json!({
                    "schema": SERVICE_SCHEMA,
                    "session_id": id,
                    "tool_output_view": output,
                    "view": view_json(&id, &e),
                })))
            }
            Err(err) => {
                let recorded = matches!(err, HumanActionError::Tool(ToolError::Unavailable { .. }));
                let api = human_error(err);
                Err(if recorded { api.with_view(view_json(&id, &e)) } else { api })
            }
        }
    })
    .await
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinishStatus {
    Success,
    Failure,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FinishRequest {
    pub status: FinishStatus,
    #[serde(default)]
    pub answer: Option<String>,
}

async fn finish_session(
    State(app): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Json(req): Json<FinishRequest>,
) -> Result<Json<Value>, ApiError> {
    let entry = app.entry(&id)?;
    let app2 = app.clone();
    blocking(move || {
        let mut e = entry.lock().expect("session lock");
        if e.closed() {
            return Err(ApiError::new(StatusCode::CONFLICT, "session is closed"));
        }
        let Live::Human(s) = &mut e.live else {
            return Err(ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "agent sessions finish on their own"));
        };
        let trace = s
            .finish(req.status == FinishStatus::Success, req.answer)
            .map_err(human_error)?;
        let path = app2.persist(&trace)?;
        let outcome = trace.header.outcome;
        e.trace = Some(trace);
        Ok(Json(json!({
            "schema": SERVICE_SCHEMA,
            "session_id": id,
            "trace_ref": id,
            "trace_path": path,
            "outcome": outcome,
            "next": app2.next_question(),
        })))
    })
    .await
}

#[derive(Debug, Default, Deserialize)]
pub struct EventsQuery {
    /// Only events with a larger `seq` are returned.
    #[serde(default)]
    pub after: Option<u64>,
}

async fn session_events(
    State(app): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<EventsQuery>,
) -> Result<Json<Value>, ApiError> {
    let entry = app.entry(&id)?;
    let e = entry.lock().expect("session lock");
    let events: Vec<&TraceEvent> = e
        .events()
        .iter()
        .filter(|ev| q.after.is_none_or(|a| ev.seq > a))
        .collect();
    let last = events.last().map(|ev| ev.seq).or(q.after);
    Ok(Json(json!({
        "schema": SERVICE_SCHEMA,
        "session_id": id,
        "events": events,
        "last_seq": last,
        "closed": e.closed(),
    })))
}

async fn list_traces(State(app): State<AppState>) -> Result<Json<Value>, ApiError> {
    let traces = app.inner.store.list().map_err(ApiError::internal)?;
    Ok(Json(json!({"schema": SERVICE_SCHEMA, "traces": traces})))
}

async fn get_trace(State(app): State<AppState>, UrlPath(id): UrlPath<String>) -> Result<Json<Value>, ApiError> {
    let trace = app
        .inner
        .store
        .load(&id)
        .map_err(ApiError::internal)?
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("unknown trace `{id}`")))?;
    Ok(Json(json!({
        "schema": SERVICE_SCHEMA,
        "header": trace.header,
        "events": trace.events,
    })))
}

#[derive(Debug, Default, Deserialize)]
pub struct AnalyticsQuery {
    /// `human`, `agent` or `baseline`; all traces when absent.
    #[serde(default)]
    pub mode: Option<TraceMode>,
    /// `json` (default) or `csv`.
    #[serde(default)]
    pub format: Option<String>,
    /// Tool frequencies of the k-th call only.
    #[serde(default)]
    pub position: Option<usize>,
}

async fn analytics(
    State(app): State<AppState>,
    UrlPath(kind): UrlPath<String>,
    Query(q): Query<AnalyticsQuery>,
) -> Result<Response, ApiError> {
    let traces: Vec<RunTrace> = app
        .inner
        .store
        .load_all()
        .map_err(ApiError::internal)?
        .into_iter()
        .filter(|t| q.mode.is_none_or(|m| t.header.mode == m))
        .collect();
    let csv = q.format.as_deref() == Some("csv");
    let (table, rows): (String, Value) = match kind.as_str() {
        "induced-graph" => {
            let g = induce_graph(&traces);
            let rows = g
                .edge_counts
                .iter()
                .map(|((s, a), c)| json!({"state": s, "action": a, "count": c, "probability": g.edge_probs[&(s.clone(), a.clone())]}))
                .collect();
            (g.to_csv(), Value::Array(rows))
        }
        "frequencies" => {
            let f = tool_frequency(&traces, q.position);
            (histogram_csv(["tool", "count"], &f), json!(f))
        }
        "lengths" => {
            let f = length_distribution(&traces);
            (histogram_csv(["tool_calls", "traces"], &f), json!(f))
        }
        "verdicts" => {
            let f = verdict_frequency(&traces);
            (histogram_csv(["verdict", "count"], &f), json!(f))
        }
        other => return Err(ApiError::new(StatusCode::NOT_FOUND, format!("unknown analytics table `{other}`"))),
    };
    if csv {
        return Ok(([(header::CONTENT_TYPE, HeaderValue::from_static("text/csv"))], table).into_response());
    }
    Ok(Json(json!({"schema": SERVICE_SCHEMA, "table": kind, "traces": traces.len(), "rows": rows})).into_response())
}

async fn next_question(State(app): State<AppState>) -> Json<Value> {
    Json(json!({"schema": SERVICE_SCHEMA, "next": app.next_question()}))
}

async fn health(State(app): State<AppState>) -> Json<Value> {
    let sessions = app.inner.sessions.lock().expect("session map").len();
    Json(json!({"status": "ok", "schema": SERVICE_SCHEMA, "sessions": sessions}))
}

async fn tools(State(app): State<AppState>) -> Json<Value> {
    let profiles: BTreeMap<&String, Value> = app
        .inner
        .profiles
        .iter()
        .map(|(name, c)| {
            let specs: Vec<_> = c.registry.specs().cloned().collect();
            (name, json!({"mode": c.mode, "max_steps": c.max_steps, "tools": specs}))
        })
        .collect();
    Json(json!({"schema": SERVICE_SCHEMA, "profiles": profiles}))
}

/// Routes, static files and CORS.
pub fn router(app: AppState) -> Router {
    let cors = CorsLayer::new()
        .allow_methods(Any)
        .allow_headers(Any);
    let origins: Vec<HeaderValue> = app
        .inner
        .config
        .cors_origins
        .iter()
        .filter_map(|o| o.parse().ok())
        .collect();
    let cors = if origins.is_empty() {
        cors.allow_origin(Any)
    } else {
        cors.allow_origin(origins)
    };
    let files = ServeDir::new(&app.inner.config.static_dir);
    Router::new()
        .route("/health", get(health))
        .route("/profiles", get(tools))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/action", post(submit_action))
        .route("/sessions/{id}/step", post(step_session))
        .route("/sessions/{id}/finish", post(finish_session))
        .route("/sessions/{id}/events", get(session_events))
        .route("/traces", get(list_traces))
        .route("/traces/{id}", get(get_trace))
        .route("/analytics/{kind}", get(analytics))
        .route("/playlist/next", get(next_question))
        .nest_service("/files", files)
        .layer(cors)
        .with_state(app)
}

/// Binds and serves until the process is stopped.
pub async fn serve(config: ServiceConfig) -> anyhow::Result<()> {
    let bind = config.bind.clone();
    let app = AppState::new(config)?;
    let listener = tokio::net::TcpListener::bind(&bind)
        .await
        .map_err(|e| anyhow::anyhow!("cannot bind {bind}: {e}"))?;
    tracing::info!(addr = %listener.local_addr()?, "serving");
    axum::serve(listener, router(app)).await?;
    Ok(())
}
