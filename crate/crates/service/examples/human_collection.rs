//! Drives the HTTP service in-process the way the annotation page does: open a
//! human session, take four actions, finish it, then read the induced graph.

use axum::body::Body;
use axum::http::{Method, Request};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use waypoint::assets;
use waypoint_service::{router, AppState, ServiceConfig};

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> Value {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or_else(Body::empty, |b| Body::from(b.to_string())))
        .expect("request");
    let resp = app.clone().oneshot(req).await.expect("response");
    let status = resp.status();
    let bytes = resp.into_body().collect().await.expect("body").to_bytes();
    let value: Value = serde_json::from_slice(&bytes).unwrap_or(Value::Null);
    println!("{uri} -> {status}");
    value
}

#[tokio::main]
async fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    let config = ServiceConfig {
        data_dir: dir.path().to_path_buf(),
        ..ServiceConfig::default()
    };
    let app = router(AppState::new(config).expect("service state"));

    let q = assets::scenario(assets::GOLDEN_SCENARIO).expect("golden scenario").question();
    let opened = call(
        &app,
        Method::POST,
        "/sessions",
        Some(json!({"question": q.question, "image_ref": q.image_ref, "question_id": q.id})),
    )
    .await;
    let id = opened["session_id"].as_str().expect("session id").to_string();
    for action in opened["initial_view"]["actions"].as_array().expect("actions") {
        println!("  offered: {}", action["label"].as_str().unwrap_or_default());
    }

    let xa = "In what year was Harley-Davidson XA built?";
    for action in [
        json!({"tool": "object_select", "object_index": 2}),
        json!({"tool": "image_search"}),
        json!({"tool": "web_search", "query": xa}),
        json!({"tool": "llm_qa", "query": xa}),
    ] {
        let reply = call(&app, Method::POST, &format!("/sessions/{id}/action"), Some(action)).await;
        let rendered = reply["tool_output_view"]["rendered"].as_str().unwrap_or_default();
        println!("  {}", rendered.lines().map(str::trim).find(|l| !l.is_empty() && *l != "[").unwrap_or_default());
    }
    let finished = call(
        &app,
        Method::POST,
        &format!("/sessions/{id}/finish"),
        Some(json!({"status": "success", "answer": assets::GOLDEN_ANSWER})),
    )
    .await;
    println!("  trace saved to {}", finished["trace_path"].as_str().unwrap_or_default());

    let graph = call(&app, Method::GET, "/analytics/induced-graph?mode=human", None).await;
    for row in graph["rows"].as_array().expect("rows") {
        println!("  {} -> {}  x{}", row["state"].as_str().unwrap_or_default(), row["action"].as_str().unwrap_or_default(), row["count"]);
    }
}
