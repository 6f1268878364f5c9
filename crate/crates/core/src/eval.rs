//! Datasets, the VQA accuracy metric and the experiment runner.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{self, EngineError, RunStatus, SessionConfig};
use crate::graph::ActionId;
use crate::memory::VisualQuestion;
use crate::trace::{RunTrace, TraceError, TraceStore};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    UnseenEntity,
    UnseenQuestion,
    Val,
    #[default]
    Custom,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub id: String,
    pub image_ref: String,
    pub question: String,
    pub answers: Vec<String>,
    #[serde(default)]
    pub split: Split,
}

impl DatasetRecord {
    pub fn to_question(&self) -> VisualQuestion {
        VisualQuestion::new(&self.id, &self.image_ref, &self.question).with_gold_answers(self.answers.clone())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DatasetFormat {
    /// One JSON record per line.
    Jsonl,
    /// Header `id,image_ref,question,answers,split`; answers separated by `|`.
    Csv,
}

impl DatasetFormat {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => DatasetFormat::Csv,
            _ => DatasetFormat::Jsonl,
        }
    }
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("dataset line {line}: {message}")]
    Schema { line: usize, message: String },
    #[error("dataset io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Deserialize)]
struct CsvRow {
    id: String,
    image_ref: String,
    question: String,
    answers: String,
    #[serde(default)]
    split: Option<Split>,
}

pub fn parse_dataset(source: &str, format: DatasetFormat) -> Result<Vec<DatasetRecord>, DatasetError> {
    let schema = |line: usize, message: String| DatasetError::Schema { line, message };
    let mut rows: Vec<(usize, DatasetRecord)> = Vec::new();
    match format {
        DatasetFormat::Jsonl => {
            for (i, line) in source.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let r = serde_json::from_str(line).map_err(|e| schema(i + 1, e.to_string()))?;
                rows.push((i + 1, r));
            }
        }
        DatasetFormat::Csv => {
            let mut reader = csv::Reader::from_reader(source.as_bytes());
            for (i, row) in reader.deserialize::<CsvRow>().enumerate() {
                let line = i + 2;
                let row = row.map_err(|e| schema(line, e.to_string()))?;
                let answers = row
                    .answers
                    .split('|')
                    .map(str::trim)
                    .filter(|a| !a.is_empty())
                    .map(String::from)
                    .collect();
                rows.push((
                    line,
                    DatasetRecord {
                        id: row.id,
                        image_ref: row.image_ref,
                        question: row.question,
                        answers,
                        split: row.split.unwrap_or_default(),
                    },
                ));
            }
        }
    }
    let mut ids = HashSet::new();
    for (line, r) in &rows {
        if r.question.trim().is_empty() {
            return Err(schema(*line, format!("record `{}` has an empty question", r.id)));
        }
        if r.answers.is_empty() {
            return Err(schema(*line, format!("record `{}` has no gold answers", r.id)));
        }
        if !ids.insert(r.id.clone()) {
            return Err(schema(*line, format!("duplicate record id `{}`", r.id)));
        }
    }
    Ok(rows.into_iter().map(|(_, r)| r).collect())
}

pub fn load_dataset(path: impl AsRef<Path>, format: DatasetFormat) -> Result<Vec<DatasetRecord>, DatasetError> {
    parse_dataset(&std::fs::read_to_string(path)?, format)
}

/// Lowercase; punctuation becomes a space except a period or comma between
/// digits (the comma is dropped); articles removed; whitespace collapsed.
pub fn normalize_answer(text: &str) -> String {
    let lower = text.to_lowercase();
    let chars: Vec<char> = lower.chars().collect();
    let mut out = String::with_capacity(chars.len());
    for (i, &c) in chars.iter().enumerate() {
        let between_digits = i > 0
            && chars[i - 1].is_ascii_digit()
            && chars.get(i + 1).is_some_and(char::is_ascii_digit);
        match c {
            '.' if between_digits => out.push('.'),
            ',' if between_digits => {}
            c if c.is_alphanumeric() || c.is_whitespace() => out.push(c),
            _ => out.push(' '),
        }
    }
    out.split_whitespace()
        .filter(|w| !matches!(*w, "a" | "an" | "the"))
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccuracyOptions {
    /// A numeric prediction also matches a gold written as `lo - hi` when it
    /// falls inside the range.
    pub numeric_range: bool,
}

fn parse_range(gold: &str) -> Option<(f64, f64)> {
    let (lo, hi) = gold.split_once(" - ").or_else(|| gold.split_once('-'))?;
    let lo: f64 = lo.trim().parse().ok()?;
    let hi: f64 = hi.trim().parse().ok()?;
    Some((lo.min(hi), lo.max(hi)))
}

fn matches(prediction: &str, gold: &str, options: AccuracyOptions) -> bool {
    if normalize_answer(prediction) == normalize_answer(gold) {
        return true;
    }
    if options.numeric_range {
        if let (Ok(p), Some((lo, hi))) = (prediction.trim().parse::<f64>(), parse_range(gold.trim())) {
            return (lo..=hi).contains(&p);
        }
    }
    false
}

/// min(matches / 3, 1) over the gold list; exact match for a single gold.
pub fn vqa_accuracy(prediction: &str, gold_answers: &[String]) -> f64 {
    vqa_accuracy_with(prediction, gold_answers, AccuracyOptions::default())
}

pub fn vqa_accuracy_with(prediction: &str, gold_answers: &[String], options: AccuracyOptions) -> f64 {
    let hits = gold_answers.iter().filter(|g| matches(prediction, g, options)).count();
    if gold_answers.len() == 1 {
        return if hits == 1 { 1.0 } else { 0.0 };
    }
    (hits as f64 / 3.0).min(1.0)
}

/// Tools removed from both the graph and the registry.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ablation {
    pub label: String,
    pub excluded: BTreeSet<ActionId>,
}

impl Ablation {
    pub fn new(label: impl Into<String>, excluded: impl IntoIterator<Item = impl Into<ActionId>>) -> Self {
        Self {
            label: label.into(),
            excluded: excluded.into_iter().map(Into::into).collect(),
        }
    }

    /// `search`, `caption_vqa` or `object`.
    pub fn preset(name: &str) -> Option<Self> {
        Some(match name {
            "search" => Self::new("w/o Search", ["web_search", "image_search", "identical_image_search"]),
            "caption_vqa" => Self::new("w/o Caption/VQA", ["caption", "vqa"]),
            "object" => Self::new("w/o Object", ["object_detection", "object_select", "ocr"]),
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Runner {
    Agent,
    Baseline(Vec<ActionId>),
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub label: String,
    pub runner: Runner,
    pub ablation: Option<Ablation>,
    pub workers: usize,
    pub accuracy: AccuracyOptions,
    /// Where traces are persisted, if anywhere.
    pub trace_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn agent(label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            runner: Runner::Agent,
            ablation: None,
            workers: 1,
            accuracy: AccuracyOptions::default(),
            trace_dir: None,
        }
    }

    pub fn baseline(label: impl Into<String>, pipeline: impl IntoIterator<Item = impl Into<ActionId>>) -> Self {
        Self {
            runner: Runner::Baseline(pipeline.into_iter().map(Into::into).collect()),
            ..Self::agent(label)
        }
    }

    /// Labels the run after the ablation when it has no label of its own.
    pub fn with_ablation(mut self, ablation: Ablation) -> Self {
        if self.label.is_empty() {
            self.label = ablation.label.clone();
        }
        self.ablation = Some(ablation);
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers.max(1);
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordScore {
    pub id: String,
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prediction: Option<String>,
    pub score: f64,
    /// Single-gold records are scored by exact match.
    pub exact_match: bool,
    pub tools: Vec<ActionId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub label: String,
    pub metric: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub excluded_tools: Vec<ActionId>,
    pub records: Vec<RecordScore>,
    pub mean_accuracy: f64,
    pub status_counts: BTreeMap<RunStatus, u64>,
    pub tool_usage: BTreeMap<ActionId, u64>,
}

impl EvalReport {
    pub fn recomputed_mean(&self) -> f64 {
        mean(self.records.iter().map(|r| r.score))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        std::fs::write(path, self.to_json() + "\n")
    }

    pub fn load(path: impl AsRef<Path>) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(std::io::Error::other)
    }
}

fn mean(scores: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = scores.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Trace(#[from] TraceError),
}

/// Runs every record and aggregates scores. Record-level failures score zero
/// and never abort the batch; only invalid configurations are errors.
pub fn run_experiment(
    dataset: &[DatasetRecord],
    base: &SessionConfig,
    experiment: &ExperimentConfig,
) -> Result<(EvalReport, Vec<RunTrace>), EvalError> {
    let config = match &experiment.ablation {
        Some(a) => base.ablate(&a.excluded)?,
        None => base.clone(),
    };
    if let Runner::Baseline(pipeline) = &experiment.runner {
        if pipeline.is_empty() {
            return Err(EngineError::EmptyPipeline.into());
        }
        if let Some(t) = pipeline.iter().find(|t| !config.registry.contains(t)) {
            return Err(EngineError::Unregistered(t.clone()).into());
        }
    }
    let store = experiment.trace_dir.as_ref().map(TraceStore::open).transpose()?;

    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<(RecordScore, RunTrace)>>> = Mutex::new(vec![None; dataset.len()]);
    let workers = experiment.workers.clamp(1, dataset.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(record) = dataset.get(i) else { break };
                let scored = run_record(record, &config, experiment);
                slots.lock().expect("result slots")[i] = Some(scored);
            });
        }
    });
    let (records, traces): (Vec<_>, Vec<_>) = slots
        .into_inner()
        .expect("result slots")
        .into_iter()
        .map(|s| s.expect("every record scored"))
        .unzip();
    if let Some(store) = &store {
        for t in &traces {
            store.save(t)?;
        }
    }

    let mut status_counts = BTreeMap::new();
    let mut tool_usage = BTreeMap::new();
    for r in &records {
        *status_counts.entry(r.status).or_default() += 1;
        for t in &r.tools {
            *tool_usage.entry(t.clone()).or_default() += 1;
        }
    }
    let report = EvalReport {
        label: experiment.label.clone(),
        metric: if experiment.accuracy.numeric_range {
            "vqa_accuracy+numeric_range".into()
        } else {
            "vqa_accuracy".into()
        },
        excluded_tools: experiment
            .ablation
            .as_ref()
            .map(|a| a.excluded.iter().cloned().collect())
            .unwrap_or_default(),
        mean_accuracy: mean(records.iter().map(|r| r.score)),
        records,
        status_counts,
        tool_usage,
    };
    Ok((report, traces))
}

fn run_record(record: &DatasetRecord, config: &SessionConfig, experiment: &ExperimentConfig) -> (RecordScore, RunTrace) {
    let question = record.to_question();
    let result = match &experiment.runner {
        Runner::Agent => Ok(engine::run(config, question)),
        Runner::Baseline(p) => engine::run_sequential_baseline(p, config, question),
    };
    let result = result.expect("baseline preconditions checked before the batch");
    let score = result
        .answer
        .as_deref()
        .map_or(0.0, |a| vqa_accuracy_with(a, &record.answers, experiment.accuracy));
    let error = result.trace.events.last().and_then(|e| match &e.kind {
        crate::trace::EventKind::SessionEnd { error, .. } => error.clone(),
        _ => None,
    });
    let scored = RecordScore {
        id: record.id.clone(),
        status: result.status,
        prediction: result.answer.clone(),
        score,
        exact_match: record.answers.len() == 1,
        tools: result.trace.tool_calls().into_iter().cloned().collect(),
        error,
    };
    (scored, result.trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn golds(items: &[&str]) -> Vec<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn soft_accuracy_cases() {
        let three: Vec<String> = ["netball"; 3].iter().chain(["basketball"; 7].iter()).map(|s| s.to_string()).collect();
        assert_eq!(vqa_accuracy("netball", &three), 1.0);
        let once: Vec<String> = ["netball"].iter().chain(["basketball"; 9].iter()).map(|s| s.to_string()).collect();
        assert_eq!(vqa_accuracy("netball", &once), 1.0 / 3.0);
        assert_eq!(vqa_accuracy("tennis", &once), 0.0);
        assert_eq!(vqa_accuracy("The Netball!", &golds(&["netball"])), 1.0);
        assert_eq!(vqa_accuracy("netballs", &golds(&["netball"])), 0.0);
    }

    #[test]
    fn normalization() {
        assert_eq!(normalize_answer("  The  Stockholm City-Hall. "), "stockholm city hall");
        assert_eq!(normalize_answer("6.54"), "6.54");
        assert_eq!(normalize_answer("1,000"), "1000");
        assert_eq!(normalize_answer("an apple, a pear"), "apple pear");
    }

    #[test]
    fn numeric_range_flag() {
        let g = golds(&["6.54 - 6.86"]);
        assert_eq!(vqa_accuracy("6.7", &g), 0.0);
        let on = AccuracyOptions { numeric_range: true };
        assert_eq!(vqa_accuracy_with("6.7", &g, on), 1.0);
        assert_eq!(vqa_accuracy_with("7.7", &g, on), 0.0);
    }

    #[test]
    fn dataset_parsing() {
        let ok = "{\"id\":\"1\",\"image_ref\":\"a.jpg\",\"question\":\"q1\",\"answers\":[\"x\"]}\n\n{\"id\":\"2\",\"image_ref\":\"b.jpg\",\"question\":\"q2\",\"answers\":[\"y\"],\"split\":\"val\"}\n{\"id\":\"3\",\"image_ref\":\"c.jpg\",\"question\":\"q3\",\"answers\":[\"z\",\"w\"]}\n";
        let rs = parse_dataset(ok, DatasetFormat::Jsonl).unwrap();
        assert_eq!(rs.len(), 3);
        assert_eq!(rs[1].split, Split::Val);
        let empty = "{\"id\":\"1\",\"image_ref\":\"a.jpg\",\"question\":\"q\",\"answers\":[]}\n";
        assert!(matches!(parse_dataset(empty, DatasetFormat::Jsonl), Err(DatasetError::Schema { line: 1, .. })));
        let dup = "{\"id\":\"1\",\"image_ref\":\"a\",\"question\":\"q\",\"answers\":[\"x\"]}\n{\"id\":\"1\",\"image_ref\":\"a\",\"question\":\"q\",\"answers\":[\"x\"]}\n";
        assert!(matches!(parse_dataset(dup, DatasetFormat::Jsonl), Err(DatasetError::Schema { line: 2, .. })));
        let csv = "id,image_ref,question,answers,split\n1,a.jpg,what sport?,netball|women netball,unseen_entity\n";
        let rs = parse_dataset(csv, DatasetFormat::Csv).unwrap();
        assert_eq!(rs[0].answers, golds(&["netball", "women netball"]));
        assert_eq!(rs[0].split, Split::UnseenEntity);
    }

    #[test]
    fn presets() {
        assert_eq!(Ablation::preset("search").unwrap().label, "w/o Search");
        assert!(Ablation::preset("nothing").is_none());
    }

    proptest! {
        #[test]
        fn casing_and_whitespace_do_not_change_scores(
            pred in "[a-z]{1,6}( [a-z]{1,6}){0,2}",
            gold in prop::collection::vec("[a-z]{1,6}", 1..6),
            upper in any::<bool>(),
        ) {
            let base = vqa_accuracy(&pred, &gold);
            let perturbed_pred = if upper { pred.to_uppercase() } else { format!("  {}\t", pred.replace(' ', "   ")) };
            let perturbed_gold: Vec<String> = gold.iter().map(|g| format!(" {} ", g.to_uppercase())).collect();
            prop_assert_eq!(vqa_accuracy(&perturbed_pred, &perturbed_gold), base);
            prop_assert!((0.0..=1.0).contains(&base));
        }
    }
}
