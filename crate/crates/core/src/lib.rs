//! A tool-using visual question answering agent whose planner is constrained
//! by a transition graph induced from human decision traces.
//!
//! The crate is organised by concern:
//!
//! - [`graph`]: states, actions and feasible-action queries.
//! - [`memory`]: the per-run evidence log and traversal bookkeeping.
//! - [`exemplars`]: in-context examples and their selection.
//! - [`prompting`]: templates, prompt builders and output parsers.
//! - [`oracle`]: scripted, replay and remote language-model backends.
//! - [`tools`]: tool payloads, registry, mock and live backends, cache.
//! - [`engine`]: the planner/reasoner loop, fixed baselines, human sessions.
//! - [`trace`]: event traces, replay, graph induction and analytics.
//! - [`eval`]: datasets, VQA accuracy and the experiment runner.
//! - [`assets`]: the shipped defaults and mock corpus.

pub mod assets;
pub mod engine;
pub mod eval;
pub mod exemplars;
pub mod graph;
pub mod memory;
pub mod oracle;
pub mod prompting;
pub mod tools;
pub mod trace;

pub use engine::{run, run_sequential_baseline, GraphMode, RunResult, RunStatus, SessionConfig};
pub use graph::{ActionId, StateId, TransitionGraph};
pub use memory::{VisualQuestion, WorkingMemory};
pub use oracle::{Oracle, OracleTag};
pub use trace::RunTrace;
