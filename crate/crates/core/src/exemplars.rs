//! Recorded human decisions used as in-context examples.
//!
//! Exemplar files hold one JSON record per line:
//! `{"id", "kind", "action", "query", "context", "body"}`. Planner exemplars
//! are bucketed by action; every other kind is bucketed by kind. Reasoner
//! exemplars carry the tool whose output they demonstrate in `action`.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{ActionId, FeasibleActionSet};

/// Number of in-context examples per planner prompt.
pub const DEFAULT_EXEMPLAR_BUDGET: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExemplarKind {
    Planner,
    Reasoner,
    Decomposition,
    ObjectSelect,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exemplar {
    pub id: String,
    pub kind: ExemplarKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<ActionId>,
    #[serde(default)]
    pub query: String,
    #[serde(default)]
    pub context: String,
    pub body: String,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("exemplar schema error at line {line}: {message}")]
pub struct SchemaError {
    pub line: usize,
    pub message: String,
}

#[derive(Clone, Debug, Default)]
pub struct ExemplarStore {
    exemplars: Vec<Exemplar>,
    by_action: BTreeMap<ActionId, Vec<usize>>,
    by_kind: BTreeMap<ExemplarKind, Vec<usize>>,
}

impl ExemplarStore {
    /// Parses a line-delimited exemplar file. Blank lines are skipped.
    pub fn load(source: &str) -> Result<Self, SchemaError> {
        let mut exemplars = Vec::new();
        for (i, line) in source.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let ex: Exemplar = serde_json::from_str(line).map_err(|e| SchemaError {
                line: i + 1,
                message: e.to_string(),
            })?;
            exemplars.push((i + 1, ex));
        }
        Self::build(exemplars)
    }

    pub fn load_file(path: impl AsRef<std::path::Path>) -> Result<Self, SchemaError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| SchemaError {
            line: 0,
            message: format!("{}: {e}", path.display()),
        })?;
        Self::load(&text)
    }

    pub fn from_exemplars(exemplars: Vec<Exemplar>) -> Result<Self, SchemaError> {
        Self::build(exemplars.into_iter().enumerate().map(|(i, e)| (i + 1, e)).collect())
    }

    fn build(records: Vec<(usize, Exemplar)>) -> Result<Self, SchemaError> {
        let mut store = Self::default();
        let mut ids = HashSet::new();
        for (line, ex) in records {
            let err = |message: String| SchemaError { line, message };
            if !ids.insert(ex.id.clone()) {
                return Err(err(format!("duplicate exemplar id `{}`", ex.id)));
            }
            if ex.body.trim().is_empty() {
                return Err(err(format!("exemplar `{}` has an empty body", ex.id)));
            }
            let idx = store.exemplars.len();
            if ex.kind == ExemplarKind::Planner {
                let action = ex
                    .action
                    .clone()
                    .filter(|a| !a.as_str().is_empty())
                    .ok_or_else(|| err(format!("planner exemplar `{}` has no action", ex.id)))?;
                store.by_action.entry(action).or_default().push(idx);
            } else {
                store.by_kind.entry(ex.kind).or_default().push(idx);
            }
            store.exemplars.push(ex);
        }
        Ok(store)
    }

    /// One JSON record per line, in load order.
    pub fn serialize(&self) -> String {
        self.exemplars
            .iter()
            .map(|e| serde_json::to_string(e).expect("exemplar serializes") + "\n")
            .collect()
    }

    pub fn len(&self) -> usize {
        self.exemplars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exemplars.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Exemplar> {
        self.exemplars.iter()
    }

    /// Planner exemplars for one action, in stored order.
    pub fn for_action(&self, action: &ActionId) -> impl Iterator<Item = &Exemplar> {
        self.by_action
            .get(action)
            .into_iter()
            .flatten()
            .map(|&i| &self.exemplars[i])
    }

    /// Non-planner exemplars of one kind, in stored order.
    pub fn of_kind(&self, kind: ExemplarKind) -> impl Iterator<Item = &Exemplar> {
        self.by_kind
            .get(&kind)
            .into_iter()
            .flatten()
            .map(|&i| &self.exemplars[i])
    }

    /// Planner exemplars for the feasible actions, taken round-robin in the
    /// feasible order, at most `budget` of them.
    pub fn select(&self, actions: &FeasibleActionSet, budget: usize) -> Vec<&Exemplar> {
        let mut queues: Vec<_> = actions.iter().map(|a| self.for_action(a).peekable()).collect();
        let mut out = Vec::new();
        while out.len() < budget {
            let mut progressed = false;
            for q in queues.iter_mut() {
                if out.len() == budget {
                    break;
                }
                if let Some(ex) = q.next() {
                    out.push(ex);
                    progressed = true;
                }
            }
            if !progressed {
                break;
            }
        }
        out
    }

    /// Reasoner exemplars demonstrating any of the given tools, up to `budget`.
    pub fn reasoner_examples<'a>(&'a self, tools: &'a [&str], budget: usize) -> Vec<&'a Exemplar> {
        self.of_kind(ExemplarKind::Reasoner)
            .filter(|e| e.action.as_ref().is_some_and(|a| tools.contains(&a.as_str())))
            .take(budget)
            .collect()
    }
}
