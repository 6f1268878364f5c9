#![allow(dead_code)]

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, BTreeSet};
use std::hash::{Hash, Hasher};
use std::sync::{Arc, Mutex};

use indexmap::IndexMap;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use waypoint::assets;
use waypoint::engine::{GraphMode, SessionConfig};
use waypoint::graph::{ActionId, StateId, TransitionGraph, ANSWER, START};
use waypoint::memory::VisualQuestion;
use waypoint::oracle::{Oracle, OracleError, OracleRequest, OracleTag};
use waypoint::tools::{
    BackendKind, DetectedObject, Entity, OcrLine, Snippet, ToolError, ToolPayload, ToolRegistry, ToolRequest,
};
use waypoint::trace::{EventKind, RunTrace};

pub const TOOLS: [&str; 9] = [
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

const WORDS: [&str; 12] = [
    "bridge", "red", "tower", "1942", "fungus", "river", "carrot", "court", "engine", "museum", "blue", "stone",
];

/// Oracle answering every tag with seeded random text of the right shape,
/// plus a share of malformed and off-list replies.
pub struct RandomOracle {
    rng: Mutex<ChaCha8Rng>,
}

impl RandomOracle {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: Mutex::new(ChaCha8Rng::seed_from_u64(seed)),
        }
    }
}

fn listed_tools(prompt: &str) -> Vec<String> {
    prompt
        .lines()
        .filter_map(|l| l.strip_prefix("  --"))
        .filter_map(|l| l.split(':').next())
        .map(str::to_string)
        .collect()
}

fn phrase(rng: &mut ChaCha8Rng) -> String {
    let n = rng.random_range(1..4);
    (0..n).map(|_| *WORDS.choose(rng).unwrap()).collect::<Vec<_>>().join(" ")
}

impl Oracle for RandomOracle {
    fn complete(&self, request: &OracleRequest) -> Result<String, OracleError> {
        let mut rng = self.rng.lock().unwrap();
        let rng = &mut *rng;
        let roll: f64 = rng.random();
        Ok(match request.tag {
            OracleTag::Decomposition => {
                if roll < 0.15 {
                    "no idea".to_string()
                } else if roll < 0.55 {
                    format!("Visual: What is the {}?\nKnowledge: #", phrase(rng))
                } else {
                    format!("Visual: What is this {}?\nKnowledge: When was # built?", phrase(rng))
                }
            }
            OracleTag::Planner => {
                let listed = listed_tools(&request.prompt);
                if roll < 0.08 || listed.is_empty() {
                    "I am not sure what to do.".to_string()
                } else if roll < 0.16 {
                    format!("Action: {}", TOOLS.choose(rng).unwrap())
                } else if roll < 0.24 {
                    "Action: answer".to_string()
                } else {
                    let tool = listed.choose(rng).unwrap();
                    if rng.random_bool(0.6) {
                        format!("Thought: try {tool}.\nAction: {tool}\nQuery: {}", phrase(rng))
                    } else {
                        format!("Action: {tool}")
                    }
                }
            }
            OracleTag::Reasoner => {
                if roll < 0.4 {
                    "This is not informative.".to_string()
                } else if roll < 0.8 {
                    format!("The image shows a {}.", phrase(rng))
                } else {
                    format!("The answer is {}.", phrase(rng))
                }
            }
            OracleTag::ObjectSelect => format!("The predicted Object #ID is {}", rng.random_range(0..4)),
            OracleTag::QueryFormulation => {
                if roll < 0.2 {
                    String::new()
                } else {
                    format!("Question: what is the {}?", phrase(rng))
                }
            }
            OracleTag::LlmQa => phrase(rng),
            OracleTag::Answer => {
                if roll < 0.5 {
                    "This question cannot be answered.".to_string()
                } else {
                    format!("So the answer is {}", phrase(rng))
                }
            }
        })
    }
}

fn request_hash(seed: u64, request: &ToolRequest) -> u64 {
    let mut h = DefaultHasher::new();
    seed.hash(&mut h);
    request.tool.as_str().hash(&mut h);
    request.query.hash(&mut h);
    request.image_ref.hash(&mut h);
    h.finish()
}

/// Tool backend whose reply is a pure function of the seed and the request.
pub fn random_backend(seed: u64) -> impl Fn(&ToolRequest) -> Result<ToolPayload, ToolError> + Send + Sync {
    move |request: &ToolRequest| {
        let mut rng = ChaCha8Rng::seed_from_u64(request_hash(seed, request));
        if rng.random_bool(0.1) {
            return Err(ToolError::Unavailable {
                tool: request.tool.clone(),
                reason: "simulated outage".into(),
            });
        }
        let text = phrase(&mut rng);
        Ok(match request.tool.as_str() {
            "caption" => ToolPayload::Caption { text, region: None },
            "vqa" => ToolPayload::VqaAnswer { text },
            "object_detection" => ToolPayload::Objects {
                objects: (0..rng.random_range(0..4))
                    .map(|i| DetectedObject {
                        bbox: [0.0, 0.0, 10.0 + i as f64, 10.0],
                        crop_ref: format!("{}#box{i}", request.image_ref),
                        label: phrase(&mut rng),
                        score: None,
                    })
                    .collect(),
            },
            "object_select" => ToolPayload::Caption {
                text,
                region: Some(request.image_ref.clone()),
            },
            "image_search" | "identical_image_search" => ToolPayload::ImageSearchResult {
                entities: vec![Entity {
                    name: text.clone(),
                    kind: String::new(),
                    description: String::new(),
                    score: 0.5,
                }],
                product_titles: Vec::new(),
                similar_captions: vec![phrase(&mut rng)],
                identical_captions: Vec::new(),
            },
            "ocr" => ToolPayload::OcrText {
                lines: vec![OcrLine { text, score: 0.9 }],
            },
            "web_search" => ToolPayload::WebSearchResult {
                snippets: vec![Snippet {
                    title: phrase(&mut rng),
                    content: text,
                }],
                knowledge_panel: None,
                related_questions: Default::default(),
            },
            _ => ToolPayload::LlmAnswer { text },
        })
    }
}

pub fn random_registry(seed: u64) -> ToolRegistry {
    ToolRegistry::builtin(
        assets::default_prompts().instructions(),
        Arc::new(random_backend(seed)),
        BackendKind::Mock,
    )
}

/// A valid graph over a random subset of the tools; every reachable
/// non-terminal state has at least one outgoing action.
pub fn random_graph(rng: &mut ChaCha8Rng) -> TransitionGraph {
    let mut tools: Vec<&str> = TOOLS.iter().copied().filter(|_| rng.random_bool(0.7)).collect();
    if tools.is_empty() {
        tools.push(*TOOLS.choose(rng).unwrap());
    }
    let with_answer = rng.random_bool(0.7);
    let mut actions: Vec<&str> = tools.clone();
    if with_answer {
        actions.push(ANSWER);
    }
    let mut states = vec![StateId::from(START)];
    states.extend(tools.iter().map(|t| StateId::from(*t)));
    if with_answer {
        states.push(StateId::from(ANSWER));
    }
    let mut edges = IndexMap::new();
    for s in std::iter::once(START).chain(tools.iter().copied()) {
        let mut out: Vec<ActionId> = actions
            .iter()
            .filter(|_| rng.random_bool(0.45))
            .map(|a| ActionId::from(*a))
            .collect();
        if out.is_empty() {
            out.push(ActionId::from(*actions.choose(rng).unwrap()));
        }
        edges.insert(StateId::from(s), out);
    }
    let terminal = if with_answer { vec![StateId::from(ANSWER)] } else { Vec::new() };
    TransitionGraph::new(states, edges, terminal).expect("generated graph is valid")
}

pub fn random_question(rng: &mut ChaCha8Rng, i: usize) -> VisualQuestion {
    VisualQuestion::new(
        format!("q{i}"),
        format!("images/random{}.jpg", rng.random_range(0..5)),
        format!("What is the {} in this image?", phrase(rng)),
    )
}

/// Config for one randomized session: default or random graph, random
/// oracle and backend, the given guard.
pub fn random_config(seed: u64, random_graph_too: bool, max_steps: Option<usize>) -> SessionConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut config = SessionConfig::new(Arc::new(RandomOracle::new(seed)), Arc::new(random_registry(seed)))
        .with_max_steps(max_steps);
    if random_graph_too {
        config = config.with_graph(random_graph(&mut rng));
    }
    config
}

/// Independent reading of an agent trace: decisions with their state and the
/// feasible set recomputed from the graph and the replayed bookkeeping.
#[derive(Debug, Default)]
pub struct TraceAudit {
    pub decisions: usize,
    pub infeasible: Vec<String>,
    pub backtrack_violations: Vec<String>,
    pub state_mismatches: Vec<String>,
}

pub fn audit_trace(trace: &RunTrace, graph: &TransitionGraph, mode: GraphMode, registry: &[ActionId]) -> TraceAudit {
    let mut audit = TraceAudit::default();
    let mut state = StateId::from(START);
    let mut taken: BTreeMap<StateId, BTreeSet<ActionId>> = BTreeMap::new();
    let mut rejected: BTreeSet<(StateId, ActionId)> = BTreeSet::new();
    let mut last: Option<ActionId> = None;
    for (i, e) in trace.events.iter().enumerate() {
        match &e.kind {
            EventKind::PlannerDecision {
                state: s,
                tool,
                feasible,
                ..
            } => {
                audit.decisions += 1;
                if *s != state {
                    audit
                        .state_mismatches
                        .push(format!("event {i}: decision at {s}, expected {state}"));
                }
                let done = taken.get(&state).cloned().unwrap_or_default();
                let allowed: Vec<ActionId> = match mode {
                    GraphMode::Constrained => graph
                        .edges()
                        .find(|(from, _)| **from == state)
                        .map(|(_, acts)| acts.to_vec())
                        .unwrap_or_default(),
                    GraphMode::Unconstrained => registry.to_vec(),
                }
                .into_iter()
                .filter(|a| !done.contains(a))
                .collect();
                if !allowed.contains(tool) {
                    audit
                        .infeasible
                        .push(format!("event {i}: {tool} at {state}, allowed {allowed:?}"));
                }
                if *feasible != allowed {
                    audit
                        .infeasible
                        .push(format!("event {i}: recorded feasible {feasible:?} != {allowed:?}"));
                }
                if rejected.contains(&(state.clone(), tool.clone())) {
                    audit
                        .backtrack_violations
                        .push(format!("event {i}: {tool} re-selected at {state}"));
                }
                taken.entry(state.clone()).or_default().insert(tool.clone());
                last = Some(tool.clone());
            }
            EventKind::ReasonerVerdict { state: s, tool, verdict } => {
                if verdict.kind_name() == "uninformative" {
                    rejected.insert((s.clone(), tool.clone()));
                }
            }
            EventKind::Backtrack { state: s, tool } => {
                rejected.insert((s.clone(), tool.clone()));
            }
            EventKind::StateChange { from, to } => {
                if *from != state || Some(StateId::from(last.as_ref().unwrap())) != Some(to.clone()) {
                    audit
                        .state_mismatches
                        .push(format!("event {i}: state change {from} -> {to} from {state}"));
                }
                state = to.clone();
            }
            _ => {}
        }
    }
    audit
}
