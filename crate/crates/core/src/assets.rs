//! Shipped graph, exemplars, prompt templates and the mock corpus.
//!
//! Everything is compiled in, so the defaults work without any files on
//! disk. [`FIXTURES_DIR`] points at the source copy for image serving and
//! regeneration.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Deserialize;

use crate::engine::{self, baseline_pipeline, RunStatus, SessionConfig, BASELINES};
use crate::eval::{parse_dataset, DatasetFormat, DatasetRecord, Split};
use crate::exemplars::ExemplarStore;
use crate::graph::TransitionGraph;
use crate::memory::VisualQuestion;
use crate::oracle::{Oracle, OracleFixture, OracleTag, RecordingOracle, ScriptedOracle, SequenceOracle};
use crate::prompting::PromptLibrary;
use crate::tools::{BackendKind, MockBackend, ToolRegistry};

pub const DEFAULT_GRAPH: &str = include_str!("../assets/default_graph.toml");
pub const EXEMPLARS: &str = include_str!("../assets/exemplars.jsonl");
pub const TEMPLATE_MANIFEST: &str = include_str!("../assets/templates/manifest.toml");

const TEMPLATE_FILES: [(&str, &str); 7] = [
    ("planner.txt", include_str!("../assets/templates/planner.txt")),
    ("reasoner_visual.txt", include_str!("../assets/templates/reasoner_visual.txt")),
    ("reasoner_knowledge.txt", include_str!("../assets/templates/reasoner_knowledge.txt")),
    ("decomposition.txt", include_str!("../assets/templates/decomposition.txt")),
    ("object_select.txt", include_str!("../assets/templates/object_select.txt")),
    ("query_formulation.txt", include_str!("../assets/templates/query_formulation.txt")),
    ("answer.txt", include_str!("../assets/templates/answer.txt")),
];

pub const TOOL_FIXTURES: &str = include_str!("../assets/fixtures/tools.jsonl");
pub const ORACLE_FIXTURES: &str = include_str!("../assets/fixtures/oracle.jsonl");
pub const DATASET: &str = include_str!("../assets/fixtures/dataset.jsonl");
pub const SCENARIOS: &str = include_str!("../assets/fixtures/scenarios.toml");

/// Source directories of the shipped assets.
pub const ASSETS_DIR: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/assets");
pub const FIXTURES_DIR: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/assets/fixtures");

/// Id of the motorcycle scenario, whose agent run takes four tool actions.
pub const GOLDEN_SCENARIO: &str = "harley";
pub const GOLDEN_ANSWER: &str = "1942";

pub fn default_graph() -> TransitionGraph {
    TransitionGraph::load(DEFAULT_GRAPH).expect("shipped graph is valid")
}

pub fn default_exemplars() -> ExemplarStore {
    ExemplarStore::load(EXEMPLARS).expect("shipped exemplars are valid")
}

pub fn default_prompts() -> PromptLibrary {
    PromptLibrary::from_manifest(TEMPLATE_MANIFEST, |file| {
        TEMPLATE_FILES
            .iter()
            .find(|(name, _)| *name == file)
            .map(|(_, text)| text.to_string())
            .ok_or_else(|| format!("{file}: not shipped"))
    })
    .expect("shipped templates are valid")
}

pub fn mock_backend() -> MockBackend {
    MockBackend::load(TOOL_FIXTURES).expect("shipped tool fixtures are valid")
}

/// Every built-in tool, served from the shipped tool fixtures.
pub fn mock_registry() -> ToolRegistry {
    ToolRegistry::builtin(default_prompts().instructions(), Arc::new(mock_backend()), BackendKind::Mock)
}

pub fn scripted_oracle() -> ScriptedOracle {
    ScriptedOracle::load(ORACLE_FIXTURES).expect("shipped oracle fixtures are valid")
}

/// Scripted oracle plus mock tools over the shipped defaults.
pub fn mock_config() -> SessionConfig {
    SessionConfig::new(Arc::new(scripted_oracle()), Arc::new(mock_registry()))
}

pub fn dataset() -> Vec<DatasetRecord> {
    parse_dataset(DATASET, DatasetFormat::Jsonl).expect("shipped dataset is valid")
}

/// One scripted question: per-tag oracle responses for the agent run and one
/// answer response per named baseline.
#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct Scenario {
    pub id: String,
    pub image_ref: String,
    pub question: String,
    pub answers: Vec<String>,
    #[serde(default)]
    pub split: Split,
    pub oracle: BTreeMap<OracleTag, Vec<String>>,
    #[serde(default)]
    pub baseline: BTreeMap<String, String>,
}

#[derive(Deserialize)]
struct ScenarioFile {
    schema: String,
    scenario: Vec<Scenario>,
}

pub const SCENARIO_SCHEMA: &str = "waypoint.scenarios/v1";

impl Scenario {
    pub fn record(&self) -> DatasetRecord {
        DatasetRecord {
            id: self.id.clone(),
            image_ref: self.image_ref.clone(),
            question: self.question.clone(),
            answers: self.answers.clone(),
            split: self.split,
        }
    }

    pub fn question(&self) -> VisualQuestion {
        self.record().to_question()
    }

    pub fn agent_oracle(&self) -> SequenceOracle {
        SequenceOracle::new(self.oracle.clone())
    }

    /// `None` when the scenario scripts no answer for that baseline.
    pub fn baseline_oracle(&self, name: &str) -> Option<SequenceOracle> {
        let answer = self.baseline.get(name)?;
        Some(SequenceOracle::new([(OracleTag::Answer, vec![answer.clone()])]))
    }
}

pub fn parse_scenarios(source: &str) -> Result<Vec<Scenario>, String> {
    let file: ScenarioFile = toml::from_str(source).map_err(|e| e.message().to_string())?;
    if file.schema != SCENARIO_SCHEMA {
        return Err(format!("expected schema `{SCENARIO_SCHEMA}`, found `{}`", file.schema));
    }
    Ok(file.scenario)
}

pub fn scenarios() -> Vec<Scenario> {
    parse_scenarios(SCENARIOS).expect("shipped scenarios are valid")
}

pub fn scenario(id: &str) -> Option<Scenario> {
    scenarios().into_iter().find(|s| s.id == id)
}

/// Runs every scenario (agent, then each scripted baseline) over the mock
/// tools and returns the oracle fixtures the runs produced, deduplicated.
///
/// Fails when a script is left with unused responses or the agent run does
/// not end with an answer.
pub fn record_scenario_fixtures(scenarios: &[Scenario]) -> Result<Vec<OracleFixture>, String> {
    let registry = Arc::new(mock_registry());
    let mut fixtures: Vec<OracleFixture> = Vec::new();
    let mut keep = |recorded: Vec<OracleFixture>| {
        for f in recorded {
            if !fixtures.iter().any(|g| g.prompt_hash == f.prompt_hash) {
                fixtures.push(f);
            }
        }
    };
    for sc in scenarios {
        let oracle = Arc::new(RecordingOracle::new(sc.agent_oracle()));
        let config = SessionConfig::new(oracle.clone() as Arc<dyn Oracle>, registry.clone());
        let result = engine::run(&config, sc.question());
        if result.status != RunStatus::Answered {
            let error = result.trace.events.last().map(|e| format!("{:?}", e.kind)).unwrap_or_default();
            return Err(format!("scenario `{}` ended {}: {error}", sc.id, result.status));
        }
        keep(oracle.fixtures());
        for tag in sc.oracle.keys() {
            let left = oracle.inner().remaining(*tag);
            if left > 0 {
                return Err(format!("scenario `{}` left {left} unused {tag} responses", sc.id));
            }
        }
        for (name, _) in BASELINES {
            let Some(inner) = sc.baseline_oracle(name) else { continue };
            let oracle = Arc::new(RecordingOracle::new(inner));
            let config = SessionConfig::new(oracle.clone() as Arc<dyn Oracle>, registry.clone());
            let pipeline = baseline_pipeline(name).expect("named baseline");
            let result = engine::run_sequential_baseline(&pipeline, &config, sc.question()).map_err(|e| e.to_string())?;
            if result.status == RunStatus::Error {
                return Err(format!("scenario `{}` baseline `{name}` failed", sc.id));
            }
            keep(oracle.fixtures());
        }
    }
    Ok(fixtures)
}

/// The dataset file matching `scenarios`.
pub fn scenario_dataset(scenarios: &[Scenario]) -> String {
    scenarios
        .iter()
        .map(|s| serde_json::to_string(&s.record()).expect("record serializes") + "\n")
        .collect()
}
