use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use seqval_core::{ModelConfig, PositionSequence, ValuationModel};
use seqval_service::{router, AppState};

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(match body {
            Some(b) => Body::from(b.to_string()),
            None => Body::empty(),
        })
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap()
    };
    (status, value)
}

async fn create(app: &Router, body: Value) -> String {
    let (status, v) = call(app, Method::POST, "/sessions", Some(body)).await;
    assert_eq!(status, StatusCode::CREATED, "{v}");
    v["id"].as_str().unwrap().to_string()
}

fn diagonal() -> Value {
    json!(["A1", "B2", "C3", "D4", "E5", "F6"])
}

#[tokio::test]
async fn create_applies_defaults_and_gives_distinct_ids() {
    let app = router(AppState::in_memory());
    let a = create(&app, json!({})).await;
    let b = create(&app, json!({})).await;
    assert_ne!(a, b);
    let (status, v) = call(&app, Method::GET, &format!("/sessions/{a}"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["config"]["pool"]["pool_size"], 200);
    assert_eq!(v["config"]["pool"]["bins_k"], 8);
    assert_eq!(v["sequence"], json!([]));
    assert_eq!(v["freeze_model"], false);
}

#[tokio::test]
async fn empty_body_creates_a_default_session() {
    let app = router(AppState::in_memory());
    let (status, _) = call(&app, Method::POST, "/sessions", None).await;
    assert_eq!(status, StatusCode::CREATED);
}

#[tokio::test]
async fn invalid_overrides_name_the_field() {
    let app = router(AppState::in_memory());
    for (body, field) in [
        (json!({"bins_k": 1}), "bins_k"),
        (json!({"epsilon": 1.5}), "epsilon"),
        (json!({"pool_size": "many"}), "pool_size"),
        (json!({"board_size": 1}), "board_size"),
        (json!({"scoring": "cubic"}), "scoring"),
        (json!({"colour": "red"}), "colour"),
    ] {
        let (status, v) = call(&app, Method::POST, "/sessions", Some(body.clone())).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{body}");
        assert_eq!(v["field"], field, "{v}");
        assert!(v["error"].is_string() && v["detail"].is_string());
    }
}

#[tokio::test]
async fn diagonal_heatmap_ranks_g7_first() {
    let app = router(AppState::in_memory());
    let id = create(&app, json!({})).await;
    let (status, v) = call(
        &app,
        Method::PUT,
        &format!("/sessions/{id}/sequence"),
        Some(diagonal()),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{v}");
    assert_eq!(v["fields"].as_array().unwrap().len(), 144);
    assert_eq!(v["fields"][0]["field"], "G7");
    assert_eq!(v["fields"][0]["rank"], 1);
    assert_eq!(v["top"].as_array().unwrap().len(), 10);
    let (_, h) = call(
        &app,
        Method::GET,
        &format!("/sessions/{id}/heatmap?top=3"),
        None,
    )
    .await;
    assert_eq!(h["top"].as_array().unwrap().len(), 3);
    assert_eq!(h["fields"], v["fields"]);
}

#[tokio::test]
async fn sequence_errors() {
    let app = router(AppState::in_memory());
    let id = create(&app, json!({})).await;
    let uri = format!("/sessions/{id}/sequence");
    let (status, v) = call(&app, Method::PUT, &uri, Some(json!(["A1"]))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["error"], "sequence too short");
    let (status, v) = call(
        &app,
        Method::PUT,
        &uri,
        Some(json!({"positions": ["A1", "Z9"]})),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(v["index"], 1);
    let (status, v) = call(&app, Method::PUT, &uri, Some(json!(["A1", 7]))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(v["index"], 1);
    let (status, _) = call(
        &app,
        Method::PUT,
        "/sessions/nope/sequence",
        Some(diagonal()),
    )
    .await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, v) = call(&app, Method::GET, &format!("/sessions/{id}/heatmap"), None).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{v}");
}

#[tokio::test]
async fn accept_appends_and_reports_length() {
    let app = router(AppState::in_memory());
    let id = create(&app, json!({})).await;
    call(
        &app,
        Method::PUT,
        &format!("/sessions/{id}/sequence"),
        Some(diagonal()),
    )
    .await;
    let (status, v) = call(
        &app,
        Method::POST,
        &format!("/sessions/{id}/accept"),
        Some(json!({"field": "G7"})),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{v}");
    assert_eq!(v["length"], 7);
    assert_eq!(v["model_base"].as_array().unwrap().len(), 7);
    let (status, v) = call(
        &app,
        Method::POST,
        &format!("/sessions/{id}/accept"),
        Some(json!({"field": "M1"})),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(v["index"], 7);
    let (status, _) = call(
        &app,
        Method::POST,
        "/sessions/missing/accept",
        Some(json!({"field": "G7"})),
    )
    .await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn frozen_session_reproduces_iterative_continuation() {
    let app = router(AppState::in_memory());
    let id = create(&app, json!({"freeze_model": true})).await;
    let seed = json!(["B3", "B5", "D5", "D7"]);
    let (_, mut v) = call(
        &app,
        Method::PUT,
        &format!("/sessions/{id}/sequence"),
        Some(seed),
    )
    .await;
    for _ in 0..4 {
        let best = v["fields"][0]["field"].clone();
        v = call(
            &app,
            Method::POST,
            &format!("/sessions/{id}/accept"),
            Some(json!({ "field": best })),
        )
        .await
        .1;
        assert_eq!(v["model_base"], json!(["B3", "B5", "D5", "D7"]));
    }
    let cfg = ModelConfig::default();
    let base = PositionSequence::parse("B3 B5 D5 D7", cfg.general.board).unwrap();
    let model = ValuationModel::build(base.clone(), &cfg).unwrap();
    let expected = model.continue_iteratively(&base, 4).unwrap();
    assert_eq!(v["sequence"], json!(expected.notations()));
}

#[tokio::test]
async fn equal_sessions_give_identical_heatmaps() {
    let app = router(AppState::in_memory());
    let mut payloads = Vec::new();
    for _ in 0..2 {
        let id = create(&app, json!({"pool_size": 40, "seed": 3})).await;
        let (_, v) = call(
            &app,
            Method::PUT,
            &format!("/sessions/{id}/sequence"),
            Some(json!(["C3", "E4", "G5"])),
        )
        .await;
        payloads.push(v.to_string());
    }
    assert_eq!(payloads[0], payloads[1]);
}

#[tokio::test]
async fn delete_removes_the_session() {
    let app = router(AppState::in_memory());
    let id = create(&app, json!({})).await;
    let (status, _) = call(&app, Method::DELETE, &format!("/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::NO_CONTENT);
    let (status, v) = call(&app, Method::GET, &format!("/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(v["error"], "not_found");
    let (status, _) = call(&app, Method::DELETE, &format!("/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn sessions_survive_a_restart_with_a_state_dir() {
    let dir = tempfile::tempdir().unwrap();
    let app = router(AppState::with_state_dir(dir.path()).unwrap());
    let id = create(&app, json!({"freeze_model": true, "pool_size": 30})).await;
    call(
        &app,
        Method::PUT,
        &format!("/sessions/{id}/sequence"),
        Some(diagonal()),
    )
    .await;
    let (_, before) = call(
        &app,
        Method::POST,
        &format!("/sessions/{id}/accept"),
        Some(json!({"field": "G7"})),
    )
    .await;
    drop(app);

    let state = AppState::with_state_dir(dir.path()).unwrap();
    assert_eq!(state.session_count().await, 1);
    let app = router(Arc::clone(&state));
    let (status, after) = call(&app, Method::GET, &format!("/sessions/{id}/heatmap"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(after, before);
    call(&app, Method::DELETE, &format!("/sessions/{id}"), None).await;
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[tokio::test]
async fn concurrent_requests_on_one_session_are_serialized() {
    let app = router(AppState::in_memory());
    let id = create(&app, json!({"pool_size": 20})).await;
    call(
        &app,
        Method::PUT,
        &format!("/sessions/{id}/sequence"),
        Some(json!(["A1", "B2"])),
    )
    .await;
    let fields = ["C3", "D4", "E5", "F6", "G7", "H8"];
    let tasks: Vec<_> = fields
        .iter()
        .map(|f| {
            let app = app.clone();
            let uri = format!("/sessions/{id}/accept");
            let body = json!({ "field": f });
            tokio::spawn(async move { call(&app, Method::POST, &uri, Some(body)).await })
        })
        .collect();
    for t in tasks {
        assert_eq!(t.await.unwrap().0, StatusCode::OK);
    }
    let (_, v) = call(&app, Method::GET, &format!("/sessions/{id}"), None).await;
    let seq: Vec<String> = serde_json::from_value(v["sequence"].clone()).unwrap();
    assert_eq!(seq.len(), 8);
    let mut tail = seq[2..].to_vec();
    tail.sort();
    assert_eq!(tail, fields);
}
