//! The planner, the reasoner and the decision loop.
//!
//! [`AgentSession`] runs the loop one decision at a time; [`run`] drives it to
//! completion. [`run_sequential_baseline`] executes a fixed pipeline, and
//! [`HumanSession`] records externally chosen actions.

mod agent;
mod baseline;
mod human;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assets;
use crate::exemplars::{ExemplarStore, DEFAULT_EXEMPLAR_BUDGET};
use crate::graph::{ActionId, GraphError, TransitionGraph};
use crate::memory::VisualQuestion;
use crate::oracle::{Oracle, OracleError, OracleRequest, OracleTag};
use crate::prompting::{Prompt, PromptError, PromptLibrary};
use crate::tools::{DetectedObject, ToolError, ToolRegistry};
use crate::trace::{Clock, EventKind, EventObserver, Outcome, RunTrace, TraceHeader, TraceMode, TraceRecorder, TRACE_SCHEMA};

pub use agent::{plan_step, reason_step, run, AgentSession, PlannedStep, StepOutcome};
pub use baseline::{
    baseline_pipeline, run_sequential_baseline, BASELINES, BASELINE_CAPTION_VQA, BASELINE_OBJECT, BASELINE_OBJECT_SEARCH,
};
pub use human::{HumanActionError, HumanSession, SessionView, ViewAction};

/// Default planner-invocation guard.
pub const DEFAULT_MAX_STEPS: usize = 20;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphMode {
    /// Feasible actions come from the transition graph.
    #[default]
    Constrained,
    /// Every registered tool is feasible.
    Unconstrained,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Answered,
    NoAnswer,
    StepLimitExceeded,
    Error,
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RunStatus::Answered => "answered",
            RunStatus::NoAnswer => "no_answer",
            RunStatus::StepLimitExceeded => "step_limit_exceeded",
            RunStatus::Error => "error",
        })
    }
}

/// Everything a session needs. All shared parts are immutable.
#[derive(Clone)]
pub struct SessionConfig {
    pub graph: Arc<TransitionGraph>,
    pub mode: GraphMode,
    pub exemplar_budget: usize,
    /// `None` disables the planner-invocation guard.
    pub max_steps: Option<usize>,
    pub oracle: Arc<dyn Oracle>,
    pub registry: Arc<ToolRegistry>,
    pub exemplars: Arc<ExemplarStore>,
    pub prompts: Arc<PromptLibrary>,
    pub clock: Clock,
    /// Defaults to the question id.
    pub session_id: Option<String>,
    pub observer: Option<EventObserver>,
}

impl fmt::Debug for SessionConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SessionConfig")
            .field("mode", &self.mode)
            .field("exemplar_budget", &self.exemplar_budget)
            .field("max_steps", &self.max_steps)
            .field("registry", &self.registry)
            .field("clock", &self.clock)
            .field("session_id", &self.session_id)
            .finish_non_exhaustive()
    }
}

impl SessionConfig {
    /// Shipped graph, exemplars and templates; constrained mode.
    pub fn new(oracle: Arc<dyn Oracle>, registry: Arc<ToolRegistry>) -> Self {
        Self {
            graph: Arc::new(assets::default_graph()),
            mode: GraphMode::Constrained,
            exemplar_budget: DEFAULT_EXEMPLAR_BUDGET,
            max_steps: Some(DEFAULT_MAX_STEPS),
            oracle,
            registry,
            exemplars: Arc::new(assets::default_exemplars()),
            prompts: Arc::new(assets::default_prompts()),
            clock: Clock::Logical,
            session_id: None,
            observer: None,
        }
    }

    pub fn with_mode(mut self, mode: GraphMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_max_steps(mut self, max_steps: Option<usize>) -> Self {
        self.max_steps = max_steps;
        self
    }

    pub fn with_graph(mut self, graph: TransitionGraph) -> Self {
        self.graph = Arc::new(graph);
        self
    }

    pub fn with_session_id(mut self, id: impl Into<String>) -> Self {
        self.session_id = Some(id.into());
        self
    }

    pub fn with_observer(mut self, observer: EventObserver) -> Self {
        self.observer = Some(observer);
        self
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if self.max_steps == Some(0) {
            return Err(EngineError::InvalidConfig("max_steps must be at least 1".into()));
        }
        if self.exemplar_budget == 0 {
            return Err(EngineError::InvalidConfig("exemplar budget must be at least 1".into()));
        }
        if self.registry.is_empty() {
            return Err(EngineError::InvalidConfig("tool registry is empty".into()));
        }
        Ok(())
    }

    /// Removes `excluded` from both the graph edges and the registry.
    pub fn ablate(&self, excluded: &BTreeSet<ActionId>) -> Result<Self, EngineError> {
        if let Some(t) = excluded.iter().find(|t| !self.registry.contains(t)) {
            return Err(EngineError::Unregistered(t.clone()));
        }
        if excluded.len() >= self.registry.len() {
            return Err(EngineError::InvalidConfig("ablation must leave at least one tool".into()));
        }
        let mut c = self.clone();
        c.graph = Arc::new(self.graph.without_actions(excluded)?);
        c.registry = Arc::new(self.registry.without(excluded));
        Ok(c)
    }
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("pipeline is empty")]
    EmptyPipeline,
    #[error("tool `{0}` is not registered")]
    Unregistered(ActionId),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Failures that end a session with status `Error`.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum StepError {
    #[error("no feasible action")]
    NoFeasibleAction,
    #[error("planner output unusable after retry: {0}")]
    PlannerParseFailure(PromptError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub status: RunStatus,
    pub answer: Option<String>,
    pub trace: RunTrace,
}

/// Sends a prompt at temperature zero and records the exchange.
pub(crate) fn ask(
    config: &SessionConfig,
    recorder: &mut TraceRecorder,
    tag: OracleTag,
    prompt: &Prompt,
) -> Result<String, OracleError> {
    let request = OracleRequest::new(tag, prompt.text.clone());
    let response = config.oracle.complete(&request)?;
    recorder.push(EventKind::OracleExchange {
        tag,
        prompt_hash: request.hash(),
        response: response.clone(),
    });
    Ok(response)
}

pub(crate) fn session_id(config: &SessionConfig, question: &VisualQuestion) -> String {
    config.session_id.clone().unwrap_or_else(|| question.id.clone())
}

pub(crate) fn close(
    mut recorder: TraceRecorder,
    session_id: String,
    question: &VisualQuestion,
    mode: TraceMode,
    status: RunStatus,
    answer: Option<String>,
    error: Option<String>,
) -> RunResult {
    recorder.push(EventKind::SessionEnd {
        status,
        answer: answer.clone(),
        error,
    });
    let header = TraceHeader {
        schema: TRACE_SCHEMA.to_string(),
        session_id,
        question_id: question.id.clone(),
        mode,
        outcome: if status == RunStatus::Answered {
            Outcome::Success
        } else {
            Outcome::Failure
        },
        answer: answer.clone(),
    };
    RunResult {
        status,
        answer,
        trace: recorder.finish(header),
    }
}

/// Detections and the selected crop, used to route image tools.
#[derive(Clone, Debug, Default)]
pub(crate) struct VisualFocus {
    pub detections: Option<Vec<DetectedObject>>,
    pub crop: Option<String>,
}

/// Resolved arguments of one tool call.
pub(crate) struct CallArgs {
    pub query: String,
    pub image_ref: String,
    pub object_index: Option<usize>,
}

impl VisualFocus {
    /// `object_select` targets the chosen crop, `image_search` the selected
    /// crop when there is one, everything else the full image.
    pub fn args(
        &self,
        tool: &ActionId,
        query: String,
        image_ref: &str,
        object_index: Option<usize>,
    ) -> Result<CallArgs, ToolError> {
        match tool.as_str() {
            "object_select" => {
                let objects = self.detections.as_deref().unwrap_or_default();
                if objects.is_empty() {
                    return Err(ToolError::BadQuery {
                        tool: tool.clone(),
                        reason: "no detected objects to select from".into(),
                    });
                }
                let index = object_index.unwrap_or(0);
                let obj = objects.get(index).ok_or_else(|| ToolError::BadQuery {
                    tool: tool.clone(),
                    reason: format!("object #{index} does not exist ({} objects)", objects.len()),
                })?;
                Ok(CallArgs {
                    query: String::new(),
                    image_ref: obj.crop_ref.clone(),
                    object_index: Some(index),
                })
            }
            "image_search" => Ok(CallArgs {
                query,
                image_ref: self.crop.clone().unwrap_or_else(|| image_ref.to_string()),
                object_index: None,
            }),
            _ => Ok(CallArgs {
                query,
                image_ref: image_ref.to_string(),
                object_index: None,
            }),
        }
    }

    /// Updates detections and crop after a successful call.
    pub fn observe(&mut self, tool: &ActionId, args: &CallArgs, payload: &crate::tools::ToolPayload) {
        if let Some(objects) = payload.objects() {
            self.detections = Some(objects.to_vec());
        }
        if tool.as_str() == "object_select" {
            self.crop = Some(args.image_ref.clone());
        }
    }
}
