use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{ActionId, FeasibleActionSet, StateId};
use crate::memory::{VisualQuestion, WorkingMemory};
use crate::tools::{DetectedObject, ToolError, ToolOutput};
use crate::trace::{EventKind, RunTrace, TraceEvent, TraceMode, TraceRecorder};

use super::{close, session_id, GraphMode, RunStatus, SessionConfig, VisualFocus};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HumanActionError {
    #[error("session is closed")]
    Closed,
    #[error("`{0}` is not available in the current state")]
    NotAvailable(ActionId),
    #[error("`{0}` needs a non-empty query")]
    EmptyQuery(ActionId),
    #[error("a successful finish needs an answer")]
    MissingAnswer,
    #[error(transparent)]
    Tool(#[from] ToolError),
}

/// One button of the action palette.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViewAction {
    pub tool: ActionId,
    pub label: String,
    pub description: String,
    pub needs_query: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object_index: Option<usize>,
}

/// What a collection client shows for a session.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: String,
    pub question: String,
    pub image_ref: String,
    pub collection: GraphMode,
    pub state: StateId,
    pub objects: Vec<DetectedObject>,
    pub actions: Vec<ViewAction>,
    pub memory: String,
    pub steps: usize,
    pub closed: bool,
}

/// A session whose actions are chosen by a person.
pub struct HumanSession {
    config: SessionConfig,
    question: VisualQuestion,
    session_id: String,
    collection: GraphMode,
    memory: WorkingMemory,
    recorder: Option<TraceRecorder>,
    focus: VisualFocus,
    steps: usize,
}

impl HumanSession {
    /// Opens a session. With `preload_detection` the object detector runs
    /// first so the view can offer per-object actions; its failure fails the open.
    pub fn open(
        config: SessionConfig,
        question: VisualQuestion,
        collection: GraphMode,
        preload_detection: bool,
    ) -> Result<Self, ToolError> {
        let mut focus = VisualFocus::default();
        let preloaded = if preload_detection {
            let out = config
                .registry
                .execute(&ActionId::from("object_detection"), "", &question.image_ref)?;
            focus.detections = out.payload.objects().map(<[DetectedObject]>::to_vec);
            Some(out)
        } else {
            None
        };
        let mut recorder = TraceRecorder::new(config.clock, config.observer.clone());
        recorder.push(EventKind::SessionStart {
            question: question.clone(),
            mode: TraceMode::Human,
            graph_mode: collection,
            max_steps: None,
            exemplar_budget: config.exemplar_budget,
            pipeline: Vec::new(),
            preloaded,
        });
        Ok(Self {
            session_id: session_id(&config, &question),
            memory: WorkingMemory::new(question.clone()),
            config,
            question,
            collection,
            recorder: Some(recorder),
            focus,
            steps: 0,
        })
    }

    pub fn session_id(&self) -> &str {
        &self.session_id
    }

    pub fn is_closed(&self) -> bool {
        self.recorder.is_none()
    }

    pub fn events(&self) -> &[TraceEvent] {
        self.recorder.as_ref().map(TraceRecorder::events).unwrap_or_default()
    }

    /// Graph-feasible tools in constrained collection, every registered tool
    /// otherwise. The terminal `answer` action is replaced by finishing.
    pub fn available(&self) -> FeasibleActionSet {
        if self.is_closed() {
            return FeasibleActionSet::default();
        }
        match self.collection {
            GraphMode::Constrained => self
                .config
                .graph
                .feasible_actions(self.memory.current_state(), &self.memory)
                .map(|f| {
                    FeasibleActionSet::from_ordered(
                        f.into_vec()
                            .into_iter()
                            .filter(|a| !a.is_answer() && self.config.registry.contains(a)),
                    )
                })
                .unwrap_or_default(),
            GraphMode::Unconstrained => FeasibleActionSet::from_ordered(self.config.registry.names().cloned()),
        }
    }

    pub fn view(&self) -> SessionView {
        let objects = self.focus.detections.clone().unwrap_or_default();
        let mut actions = Vec::new();
        for tool in self.available().iter() {
            let spec = self.config.registry.spec(tool);
            let description = spec.map(|s| s.description.clone()).unwrap_or_default();
            let needs_query = spec.is_some_and(|s| s.needs_query);
            if tool.as_str() == "object_select" {
                for (i, o) in objects.iter().enumerate() {
                    actions.push(ViewAction {
                        tool: tool.clone(),
                        label: format!("entities in box {i} ({})", o.label),
                        description: description.clone(),
                        needs_query,
                        object_index: Some(i),
                    });
                }
                continue;
            }
            actions.push(ViewAction {
                tool: tool.clone(),
                label: tool.as_str().replace('_', " "),
                description,
                needs_query,
                object_index: None,
            });
        }
        SessionView {
            session_id: self.session_id.clone(),
            question: self.question.question.clone(),
            image_ref: self.question.image_ref.clone(),
            collection: self.collection,
            state: self.memory.current_state().clone(),
            objects,
            actions,
            memory: self.memory.render_context(),
            steps: self.steps,
            closed: self.is_closed(),
        }
    }

    /// Executes one chosen tool and records it.
    pub fn submit_action(
        &mut self,
        tool: &ActionId,
        query: &str,
        object_index: Option<usize>,
    ) -> Result<ToolOutput, HumanActionError> {
        if self.is_closed() {
            return Err(HumanActionError::Closed);
        }
        let available = self.available();
        if !available.contains(tool) {
            return Err(HumanActionError::NotAvailable(tool.clone()));
        }
        let needs_query = self.config.registry.spec(tool).is_some_and(|s| s.needs_query);
        if needs_query && query.trim().is_empty() {
            return Err(HumanActionError::EmptyQuery(tool.clone()));
        }
        let query = if needs_query { query.trim().to_string() } else { String::new() };
        let args = self
            .focus
            .args(tool, query.clone(), &self.question.image_ref, object_index)?;
        let state = self.memory.current_state().clone();
        let recorder = self.recorder.as_mut().expect("open session");
        recorder.push(EventKind::HumanAction {
            state: state.clone(),
            tool: tool.clone(),
            query: args.query.clone(),
            object_index: args.object_index,
            available: available.into_vec(),
        });
        recorder.push(EventKind::ToolCall {
            tool: tool.clone(),
            query: args.query.clone(),
            image_ref: args.image_ref.clone(),
            object_index: args.object_index,
        });
        self.steps += 1;
        match self.config.registry.execute(tool, &args.query, &args.image_ref) {
            Ok(out) => {
                recorder.push(EventKind::ToolOutput {
                    tool: tool.clone(),
                    payload: out.payload.clone(),
                });
                self.focus.observe(tool, &args, &out.payload);
                let provenance = if args.query.is_empty() { &self.question.question } else { &args.query };
                self.memory
                    .record_informative(tool, &out.payload.lines().join("\n"), provenance);
                recorder.push(EventKind::StateChange {
                    from: state,
                    to: self.memory.current_state().clone(),
                });
                Ok(out)
            }
            Err(e) => {
                recorder.push(EventKind::ToolError {
                    tool: tool.clone(),
                    error: e.clone(),
                });
                if self.collection == GraphMode::Constrained {
                    self.memory.record_uninformative(tool);
                }
                Err(e.into())
            }
        }
    }

    /// Closes the session; success requires a non-empty answer.
    pub fn finish(&mut self, success: bool, answer: Option<String>) -> Result<RunTrace, HumanActionError> {
        if self.is_closed() {
            return Err(HumanActionError::Closed);
        }
        let answer = answer.map(|a| a.trim().to_string()).filter(|a| !a.is_empty());
        if success && answer.is_none() {
            return Err(HumanActionError::MissingAnswer);
        }
        let mut recorder = self.recorder.take().expect("open session");
        let (status, answer) = if success {
            let a = answer.expect("checked above");
            recorder.push(EventKind::FinalAnswer { answer: a.clone() });
            (RunStatus::Answered, Some(a))
        } else {
            (RunStatus::NoAnswer, None)
        };
        Ok(close(
            recorder,
            self.session_id.clone(),
            &self.question,
            TraceMode::Human,
            status,
            answer,
            None,
        )
        .trace)
    }
}
