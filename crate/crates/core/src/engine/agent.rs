use crate::graph::{unconstrained_actions, ActionId, FeasibleActionSet, StateId};
use crate::memory::{VisualQuestion, WorkingMemory};
use crate::oracle::OracleTag;
use crate::prompting::{
    parse_decomposition, parse_object_select, parse_planner_output, parse_query_formulation, parse_reasoner_output,
    PlannerDecision, PromptKind, ReasonerVerdict, PLANNER_CORRECTION,
};
use crate::tools::{render_tool_output, ToolError, ToolOutput};
use crate::trace::{EventKind, TraceMode, TraceRecorder};

use super::{ask, close, session_id, CallArgs, GraphMode, RunResult, RunStatus, SessionConfig, StepError, VisualFocus};

/// Exemplar groups for the two reasoner prompts.
pub(crate) const KNOWLEDGE_TOOLS: [&str; 2] = ["web_search", "llm_qa"];
pub(crate) const VISUAL_TOOLS: [&str; 7] = [
    "caption",
    "vqa",
    "object_detection",
    "object_select",
    "image_search",
    "identical_image_search",
    "ocr",
];

#[derive(Clone, Debug, PartialEq)]
pub struct PlannedStep {
    pub state: StateId,
    pub feasible: FeasibleActionSet,
    pub decision: PlannerDecision,
    /// 1 when the first reply parsed, 2 after the corrective retry.
    pub attempt: u32,
}

/// Feasible actions, exemplar selection, prompt, oracle call and parse, with
/// one corrective retry on an unusable reply.
pub fn plan_step(
    config: &SessionConfig,
    memory: &WorkingMemory,
    recorder: &mut TraceRecorder,
) -> Result<PlannedStep, StepError> {
    let state = memory.current_state().clone();
    let feasible = match config.mode {
        GraphMode::Constrained => config.graph.feasible_actions(&state, memory)?,
        GraphMode::Unconstrained => unconstrained_actions(config.registry.names(), memory, &state),
    };
    if feasible.is_empty() {
        return Err(StepError::NoFeasibleAction);
    }
    let exemplars = config.exemplars.select(&feasible, config.exemplar_budget);
    let mut instruction = "";
    let mut last = None;
    for attempt in 1..=2 {
        let prompt = config.prompts.planner(&exemplars, memory, &feasible, instruction)?;
        let text = ask(config, recorder, OracleTag::Planner, &prompt)?;
        match parse_planner_output(&text, &feasible) {
            Ok(decision) => {
                return Ok(PlannedStep {
                    state,
                    feasible,
                    decision,
                    attempt,
                })
            }
            Err(e) => {
                last = Some(e);
                instruction = PLANNER_CORRECTION;
            }
        }
    }
    Err(StepError::PlannerParseFailure(last.expect("two failed attempts")))
}

/// Classifies one tool output with the reasoner prompt matching its payload.
pub fn reason_step(
    config: &SessionConfig,
    memory: &WorkingMemory,
    output: &ToolOutput,
    recorder: &mut TraceRecorder,
) -> Result<ReasonerVerdict, StepError> {
    let (kind, group): (_, &[&str]) = if output.payload.is_knowledge() {
        (PromptKind::ReasonerKnowledge, &KNOWLEDGE_TOOLS)
    } else {
        (PromptKind::ReasonerVisual, &VISUAL_TOOLS)
    };
    let exemplars = config.exemplars.reasoner_examples(group, config.exemplar_budget);
    let rendered = render_tool_output(&output.payload);
    let prompt = config
        .prompts
        .reasoner(kind, &exemplars, memory, &output.tool, &rendered)?;
    let text = ask(config, recorder, OracleTag::Reasoner, &prompt)?;
    Ok(parse_reasoner_output(&text))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepOutcome {
    Continue,
    Finished(RunStatus),
}

struct Done {
    status: RunStatus,
    answer: Option<String>,
    error: Option<String>,
}

/// One agent run, advanced a decision at a time.
pub struct AgentSession {
    config: SessionConfig,
    question: VisualQuestion,
    session_id: String,
    memory: WorkingMemory,
    recorder: TraceRecorder,
    focus: VisualFocus,
    knowledge_phase: bool,
    decisions: usize,
    done: Option<Done>,
}

impl AgentSession {
    /// Records the session start and decomposes the question.
    pub fn open(config: SessionConfig, question: VisualQuestion) -> Self {
        let mut recorder = TraceRecorder::new(config.clock, config.observer.clone());
        recorder.push(EventKind::SessionStart {
            question: question.clone(),
            mode: TraceMode::Agent,
            graph_mode: config.mode,
            max_steps: config.max_steps,
            exemplar_budget: config.exemplar_budget,
            pipeline: Vec::new(),
            preloaded: None,
        });
        let mut s = Self {
            session_id: session_id(&config, &question),
            memory: WorkingMemory::new(question.clone()),
            config,
            question,
            recorder,
            focus: VisualFocus::default(),
            knowledge_phase: false,
            decisions: 0,
            done: None,
        };
        if let Err(e) = s.config.validate() {
            s.end(RunStatus::Error, None, Some(e.to_string()));
        } else if let Err(e) = s.decompose() {
            s.end(RunStatus::Error, None, Some(e.to_string()));
        }
        s
    }

    fn decompose(&mut self) -> Result<(), StepError> {
        let prompt = self
            .config
            .prompts
            .decomposition(&self.config.exemplars, &self.question.question)?;
        let text = ask(&self.config, &mut self.recorder, OracleTag::Decomposition, &prompt)?;
        let (visual, knowledge, fallback) = match parse_decomposition(&text) {
            Ok((v, k)) if !v.is_empty() => {
                let k = if k.is_empty() { "#".to_string() } else { k };
                (v, k, false)
            }
            _ => (self.question.question.clone(), "#".to_string(), true),
        };
        self.recorder.push(EventKind::Decomposition {
            visual: visual.clone(),
            knowledge: knowledge.clone(),
            fallback,
        });
        self.memory.set_decomposition(visual, knowledge);
        Ok(())
    }

    pub fn memory(&self) -> &WorkingMemory {
        &self.memory
    }

    pub fn events(&self) -> &[crate::trace::TraceEvent] {
        self.recorder.events()
    }

    pub fn decisions(&self) -> usize {
        self.decisions
    }

    pub fn is_finished(&self) -> bool {
        self.done.is_some()
    }

    pub fn session_id(&self) -> &str {
        &self.session_id
    }

    fn end(&mut self, status: RunStatus, answer: Option<String>, error: Option<String>) -> StepOutcome {
        if let Some(a) = &answer {
            self.recorder.push(EventKind::FinalAnswer { answer: a.clone() });
        }
        self.done = Some(Done { status, answer, error });
        StepOutcome::Finished(status)
    }

    /// One planner decision and its consequences.
    pub fn step(&mut self) -> StepOutcome {
        if let Some(d) = &self.done {
            return StepOutcome::Finished(d.status);
        }
        if self.config.max_steps.is_some_and(|m| self.decisions >= m) {
            return self.end(RunStatus::StepLimitExceeded, None, None);
        }
        let planned = match plan_step(&self.config, &self.memory, &mut self.recorder) {
            Ok(p) => p,
            Err(StepError::NoFeasibleAction) => return self.end(RunStatus::NoAnswer, None, None),
            Err(e) => {
                self.decisions += 1;
                return self.end(RunStatus::Error, None, Some(e.to_string()));
            }
        };
        self.decisions += 1;
        self.recorder.push(EventKind::PlannerDecision {
            state: planned.state.clone(),
            tool: planned.decision.tool.clone(),
            query: planned.decision.query.clone(),
            feasible: planned.feasible.actions().to_vec(),
            attempt: planned.attempt,
        });
        let result = if planned.decision.tool.is_answer() {
            self.answer_action(&planned.state, &planned.decision.tool)
        } else {
            self.tool_action(&planned.state, planned.decision)
        };
        match result {
            Ok(outcome) => outcome,
            Err(e) => self.end(RunStatus::Error, None, Some(e.to_string())),
        }
    }

    fn backtrack(&mut self, state: &StateId, tool: &ActionId) -> StepOutcome {
        self.recorder.push(EventKind::Backtrack {
            state: state.clone(),
            tool: tool.clone(),
        });
        self.memory.record_uninformative(tool);
        StepOutcome::Continue
    }

    fn answer_action(&mut self, state: &StateId, tool: &ActionId) -> Result<StepOutcome, StepError> {
        let exemplars = self
            .config
            .exemplars
            .reasoner_examples(&KNOWLEDGE_TOOLS, self.config.exemplar_budget);
        let prompt = self
            .config
            .prompts
            .answer(&exemplars, &self.question.question, &self.memory)?;
        let text = ask(&self.config, &mut self.recorder, OracleTag::Answer, &prompt)?;
        let verdict = parse_reasoner_output(&text);
        self.recorder.push(EventKind::ReasonerVerdict {
            state: state.clone(),
            tool: tool.clone(),
            verdict: verdict.clone(),
        });
        Ok(match verdict {
            ReasonerVerdict::FinalAnswer { answer } => self.end(RunStatus::Answered, Some(answer), None),
            _ => self.backtrack(state, tool),
        })
    }

    fn tool_error(&mut self, state: &StateId, tool: &ActionId, args: &CallArgs, error: ToolError) -> StepOutcome {
        self.recorder.push(EventKind::ToolCall {
            tool: tool.clone(),
            query: args.query.clone(),
            image_ref: args.image_ref.clone(),
            object_index: args.object_index,
        });
        self.recorder.push(EventKind::ToolError {
            tool: tool.clone(),
            error,
        });
        self.backtrack(state, tool)
    }

    fn tool_action(&mut self, state: &StateId, decision: PlannerDecision) -> Result<StepOutcome, StepError> {
        let tool = decision.tool;
        let needs_query = self.config.registry.spec(&tool).is_some_and(|s| s.needs_query);
        let mut query = if needs_query { decision.query } else { String::new() };
        if needs_query && query.trim().is_empty() {
            let prompt = self.config.prompts.query_formulation(&self.memory, &tool)?;
            let text = ask(&self.config, &mut self.recorder, OracleTag::QueryFormulation, &prompt)?;
            query = parse_query_formulation(&text).unwrap_or_else(|| self.memory.active_query().to_string());
        }

        let mut object_index = None;
        let objects = self.focus.detections.clone().unwrap_or_default();
        if tool.as_str() == "object_select" && !objects.is_empty() {
            let listing: Vec<_> = objects.iter().enumerate().collect();
            let prompt =
                self.config
                    .prompts
                    .object_select(&self.config.exemplars, self.memory.active_query(), &listing)?;
            let text = ask(&self.config, &mut self.recorder, OracleTag::ObjectSelect, &prompt)?;
            match parse_object_select(&text, objects.len()) {
                Ok((i, _)) => object_index = Some(i),
                Err(e) => {
                    let args = CallArgs {
                        query,
                        image_ref: self.question.image_ref.clone(),
                        object_index: None,
                    };
                    let err = ToolError::BadQuery {
                        tool: tool.clone(),
                        reason: format!("object selection: {e}"),
                    };
                    return Ok(self.tool_error(state, &tool, &args, err));
                }
            }
        }

        let args = match self.focus.args(&tool, query.clone(), &self.question.image_ref, object_index) {
            Ok(a) => a,
            Err(e) => {
                let args = CallArgs {
                    query,
                    image_ref: self.question.image_ref.clone(),
                    object_index: None,
                };
                return Ok(self.tool_error(state, &tool, &args, e));
            }
        };
        let output = match self.config.registry.execute(&tool, &args.query, &args.image_ref) {
            Ok(o) => o,
            Err(e) => return Ok(self.tool_error(state, &tool, &args, e)),
        };
        self.recorder.push(EventKind::ToolCall {
            tool: tool.clone(),
            query: args.query.clone(),
            image_ref: args.image_ref.clone(),
            object_index: args.object_index,
        });
        self.recorder.push(EventKind::ToolOutput {
            tool: tool.clone(),
            payload: output.payload.clone(),
        });
        self.focus.observe(&tool, &args, &output.payload);

        let verdict = reason_step(&self.config, &self.memory, &output, &mut self.recorder)?;
        self.recorder.push(EventKind::ReasonerVerdict {
            state: state.clone(),
            tool: tool.clone(),
            verdict: verdict.clone(),
        });
        let provenance = if args.query.is_empty() {
            self.memory.active_query().to_string()
        } else {
            args.query.clone()
        };
        Ok(match verdict {
            ReasonerVerdict::Uninformative => self.backtrack(state, &tool),
            ReasonerVerdict::Informative { extraction } => {
                self.advance(state, &tool, &extraction, &provenance);
                StepOutcome::Continue
            }
            ReasonerVerdict::FinalAnswer { answer } => {
                if !self.knowledge_phase && !self.memory.knowledge_is_placeholder() {
                    self.advance(state, &tool, &answer, &provenance);
                    let query = self.memory.bind_visual_answer(&answer).to_string();
                    self.knowledge_phase = true;
                    self.recorder.push(EventKind::PhaseSwitch {
                        visual_answer: answer,
                        query,
                    });
                    StepOutcome::Continue
                } else {
                    self.end(RunStatus::Answered, Some(answer), None)
                }
            }
        })
    }

    fn advance(&mut self, state: &StateId, tool: &ActionId, content: &str, provenance: &str) {
        self.memory.record_informative(tool, content, provenance);
        self.recorder.push(EventKind::StateChange {
            from: state.clone(),
            to: self.memory.current_state().clone(),
        });
    }

    /// Runs any remaining steps and closes the trace.
    pub fn finish(mut self) -> RunResult {
        while self.done.is_none() {
            self.step();
        }
        let done = self.done.take().expect("finished session");
        close(
            self.recorder,
            self.session_id,
            &self.question,
            TraceMode::Agent,
            done.status,
            done.answer,
            done.error,
        )
    }
}

/// Runs a question to completion.
pub fn run(config: &SessionConfig, question: VisualQuestion) -> RunResult {
    AgentSession::open(config.clone(), question).finish()
}
