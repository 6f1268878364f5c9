use crate::graph::ActionId;
use crate::memory::{VisualQuestion, WorkingMemory};
use crate::oracle::OracleTag;
use crate::prompting::{parse_reasoner_output, ReasonerVerdict};
use crate::trace::{EventKind, TraceMode, TraceRecorder};

use super::agent::KNOWLEDGE_TOOLS;
use super::{ask, close, session_id, EngineError, RunResult, RunStatus, SessionConfig, StepError, VisualFocus};

/// Captioning plus visual question answering.
pub const BASELINE_CAPTION_VQA: [&str; 2] = ["caption", "vqa"];
/// Adds object detection and search over the detected object.
pub const BASELINE_OBJECT: [&str; 4] = ["caption", "vqa", "object_detection", "image_search"];
/// Adds a web search on the question.
pub const BASELINE_OBJECT_SEARCH: [&str; 5] = ["caption", "vqa", "object_detection", "image_search", "web_search"];

/// Named pipelines, in increasing tool coverage.
pub const BASELINES: [(&str, &[&str]); 3] = [
    ("caption_vqa", &BASELINE_CAPTION_VQA),
    ("object", &BASELINE_OBJECT),
    ("object_search", &BASELINE_OBJECT_SEARCH),
];

/// Looks up a named pipeline.
pub fn baseline_pipeline(name: &str) -> Option<Vec<ActionId>> {
    BASELINES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, p)| p.iter().map(|t| ActionId::from(*t)).collect())
}

/// Runs every tool of `pipeline` once, in order, then asks a single answer
/// prompt over the collected evidence.
///
/// Queries are the original question; `image_search` and `object_select`
/// target the first detected object when there is one.
pub fn run_sequential_baseline(
    pipeline: &[ActionId],
    config: &SessionConfig,
    question: VisualQuestion,
) -> Result<RunResult, EngineError> {
    if pipeline.is_empty() {
        return Err(EngineError::EmptyPipeline);
    }
    if let Some(t) = pipeline.iter().find(|t| !config.registry.contains(t)) {
        return Err(EngineError::Unregistered(t.clone()));
    }
    let mut recorder = TraceRecorder::new(config.clock, config.observer.clone());
    recorder.push(EventKind::SessionStart {
        question: question.clone(),
        mode: TraceMode::Baseline,
        graph_mode: config.mode,
        max_steps: None,
        exemplar_budget: config.exemplar_budget,
        pipeline: pipeline.to_vec(),
        preloaded: None,
    });
    let mut memory = WorkingMemory::new(question.clone());
    let mut focus = VisualFocus::default();
    for tool in pipeline {
        let needs_query = config.registry.spec(tool).is_some_and(|s| s.needs_query);
        let query = if needs_query { question.question.clone() } else { String::new() };
        let object_index = (tool.as_str() == "object_select").then_some(0);
        let args = match focus.args(tool, query.clone(), &question.image_ref, object_index) {
            Ok(a) => a,
            Err(e) => {
                recorder.push(EventKind::ToolCall {
                    tool: tool.clone(),
                    query,
                    image_ref: question.image_ref.clone(),
                    object_index: None,
                });
                recorder.push(EventKind::ToolError {
                    tool: tool.clone(),
                    error: e,
                });
                continue;
            }
        };
        let image_ref = match (tool.as_str(), &focus.detections) {
            ("image_search", Some(objects)) if focus.crop.is_none() => objects
                .first()
                .map_or(args.image_ref.clone(), |o| o.crop_ref.clone()),
            _ => args.image_ref.clone(),
        };
        recorder.push(EventKind::ToolCall {
            tool: tool.clone(),
            query: args.query.clone(),
            image_ref: image_ref.clone(),
            object_index: args.object_index,
        });
        match config.registry.execute(tool, &args.query, &image_ref) {
            Ok(out) => {
                recorder.push(EventKind::ToolOutput {
                    tool: tool.clone(),
                    payload: out.payload.clone(),
                });
                focus.observe(tool, &args, &out.payload);
                let lines = out.payload.lines();
                if !lines.is_empty() {
                    memory.append_evidence(tool, &lines.join("\n"), &question.question);
                }
            }
            Err(e) => recorder.push(EventKind::ToolError {
                tool: tool.clone(),
                error: e,
            }),
        }
    }

    let answered = (|| -> Result<Option<String>, StepError> {
        let exemplars = config.exemplars.reasoner_examples(&KNOWLEDGE_TOOLS, config.exemplar_budget);
        let prompt = config.prompts.answer(&exemplars, &question.question, &memory)?;
        let text = ask(config, &mut recorder, OracleTag::Answer, &prompt)?;
        Ok(match parse_reasoner_output(&text) {
            ReasonerVerdict::FinalAnswer { answer } => Some(answer),
            _ => None,
        })
    })();
    let sid = session_id(config, &question);
    Ok(match answered {
        Ok(Some(answer)) => {
            recorder.push(EventKind::FinalAnswer { answer: answer.clone() });
            close(recorder, sid, &question, TraceMode::Baseline, RunStatus::Answered, Some(answer), None)
        }
        Ok(None) => close(recorder, sid, &question, TraceMode::Baseline, RunStatus::NoAnswer, None, None),
        Err(e) => close(
            recorder,
            sid,
            &question,
            TraceMode::Baseline,
            RunStatus::Error,
            None,
            Some(e.to_string()),
        ),
    })
}
