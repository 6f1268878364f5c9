use std::path::Path;
use std::process::{Command, Output};

use waypoint::assets;
use waypoint::eval::EvalReport;
use waypoint::graph::TransitionGraph;
use waypoint::trace::{load_traces, RunTrace};

fn waypoint(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_waypoint"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn run_prints_answer_and_trace_path() {
    let dir = tempfile::tempdir().unwrap();
    let q = assets::scenario(assets::GOLDEN_SCENARIO).unwrap();
    let out = waypoint(
        dir.path(),
        &[
            "run",
            "--question",
            &q.question,
            "--image",
            &q.image_ref,
            "--question-id",
            &q.id,
            "--oracle",
            "scripted",
            "--tools",
            "mock",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains(&format!("answer: {}", assets::GOLDEN_ANSWER)), "{text}");
    let path = text
        .lines()
        .find_map(|l| l.strip_prefix("trace: "))
        .expect("trace line");
    let trace = RunTrace::load_file(dir.path().join(path)).unwrap();
    assert_eq!(trace.header.answer.as_deref(), Some(assets::GOLDEN_ANSWER));
}

#[test]
fn induce_graph_writes_a_loadable_graph() {
    let dir = tempfile::tempdir().unwrap();
    for id in ["harley", "carrot"] {
        let q = assets::scenario(id).unwrap();
        let out = waypoint(
            dir.path(),
            &["run", "--question", &q.question, "--image", &q.image_ref, "--question-id", id],
        );
        assert!(out.status.success(), "{}", stderr(&out));
    }
    let out = waypoint(dir.path(), &["induce-graph", "--traces", "waypoint-out/traces"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).starts_with("2 traces"), "{}", stdout(&out));
    let graph = TransitionGraph::load_file(dir.path().join("waypoint-out/induced_graph.toml")).unwrap();
    let traces = load_traces(dir.path().join("waypoint-out/traces")).unwrap();
    for t in &traces {
        for (s, a) in t.transitions() {
            assert!(graph.outgoing(&s).contains(&a), "{s} -> {a} missing");
        }
    }
    let csv = std::fs::read_to_string(dir.path().join("waypoint-out/induced_graph.csv")).unwrap();
    assert!(csv.starts_with("state,action,count,probability\n"));
}

#[test]
fn eval_with_unknown_ablation_tool_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let out = waypoint(dir.path(), &["eval", "--ablation", "web_search,teleport"]);
    assert!(!out.status.success());
    let err = stderr(&out);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.contains("teleport"), "{err}");
}

#[test]
fn eval_writes_a_loadable_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = waypoint(dir.path(), &["eval", "--ablation", "search", "--workers", "2"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report = EvalReport::load(dir.path().join("waypoint-out/report.json")).unwrap();
    assert_eq!(report.records.len(), assets::dataset().len());
    assert_eq!(report.mean_accuracy, report.recomputed_mean());
    assert!(report.tool_usage.keys().all(|t| !t.as_str().contains("search")));

    let out = waypoint(dir.path(), &["eval", "--baseline", "caption_vqa", "--out-dir", "b"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report = EvalReport::load(dir.path().join("b/report.json")).unwrap();
    assert_eq!(report.label, "caption_vqa");
}

#[test]
fn stats_tables_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    assert!(waypoint(dir.path(), &["run"]).status.success());
    let out = waypoint(dir.path(), &["stats", "--traces", "waypoint-out/traces"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let freq = std::fs::read_to_string(dir.path().join("waypoint-out/tool_frequency.csv")).unwrap();
    assert!(freq.starts_with("tool,count\n"));

    let trace = "waypoint-out/traces/harley.jsonl";
    let out = waypoint(dir.path(), &["replay", "--trace", trace]);
    assert!(out.status.success(), "{}", stderr(&out));

    let path = dir.path().join(trace);
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::write(&path, text.replacen("Harley-Davidson", "Indian Scout", 1)).unwrap();
    let out = waypoint(dir.path(), &["replay", "--trace", trace]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("diverged"), "{}", stderr(&out));
}

#[test]
fn missing_files_are_named() {
    let dir = tempfile::tempdir().unwrap();
    let out = waypoint(dir.path(), &["--exemplars", "nowhere.jsonl", "run"]);
    assert!(!out.status.success());
    assert_eq!(stderr(&out).trim(), "error: missing exemplar file: nowhere.jsonl");

    let out = waypoint(dir.path(), &["stats", "--traces", "empty"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("empty"));
}

#[test]
fn config_file_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("profile.toml"), "max_steps = 1\n").unwrap();
    let out = waypoint(dir.path(), &["--config", "profile.toml", "--max-steps", "20", "run"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("status: step_limit_exceeded"), "{}", stdout(&out));
}
