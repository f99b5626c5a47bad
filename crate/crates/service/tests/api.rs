use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use pal_core::session::{parse_jsonl, replay};
use pal_service::{router, Store};
use serde_json::{json, Value};
use tower::ServiceExt;

const SRT: &str = include_str!("../../core/tests/fixtures/definitions.srt");

struct Reply {
    status: StatusCode,
    headers: axum::http::HeaderMap,
    body: Vec<u8>,
}

impl Reply {
    fn json(&self) -> Value {
        serde_json::from_slice(&self.body).unwrap_or_else(|_| panic!("not json: {}", String::from_utf8_lossy(&self.body)))
    }
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> Reply {
    let body = body.map_or_else(Body::empty, |b| Body::from(b.to_string()));
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body)
        .unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let headers = res.headers().clone();
    let body = res.into_body().collect().await.unwrap().to_bytes().to_vec();
    Reply { status, headers, body }
}

fn app(dir: &std::path::Path) -> (Router, Arc<Store>) {
    let store = Arc::new(Store::open(dir).unwrap());
    (router(store.clone()), store)
}

async fn compiled_bank(app: &Router) -> String {
    let r = call(app, Method::POST, "/banks/compile", Some(json!({"transcript": SRT, "format": "srt", "source_id": "thermo"}))).await;
    assert_eq!(r.status, StatusCode::OK, "{}", String::from_utf8_lossy(&r.body));
    assert_eq!(r.json()["questions"].as_array().unwrap().len(), 3);
    r.headers["x-bank-id"].to_str().unwrap().to_string()
}

async fn new_session(app: &Router, bank_id: &str, planned: u32) -> String {
    let r = call(
        app,
        Method::POST,
        "/sessions",
        Some(json!({"bank_id": bank_id, "learner_id": "ada", "planned_questions": planned, "rng_seed": 7, "interests": ["chemistry"]})),
    )
    .await;
    assert_eq!(r.status, StatusCode::CREATED, "{}", String::from_utf8_lossy(&r.body));
    r.json()["session_id"].as_str().unwrap().to_string()
}

#[tokio::test]
async fn full_session_over_http() {
    let dir = tempfile::tempdir().unwrap();
    let (app, _) = app(dir.path());
    let bank_id = compiled_bank(&app).await;
    let sid = new_session(&app, &bank_id, 3).await;

    for i in 0..3 {
        let q = call(&app, Method::GET, &format!("/sessions/{sid}/next"), None).await;
        assert_eq!(q.status, StatusCode::OK);
        let q = q.json();
        assert_eq!(q["status"], "question");
        assert!(q["a"].get("correct_index").is_none(), "answer must not leak");
        assert_eq!(q["time_limit"], 30.0);
        assert_eq!(q["progress"]["served"], i + 1);
        assert_eq!(q["difficulty"], q["d"]);

        let answer = json!({"question_id": q["question_id"], "choice": 0, "response_time": 4.5});
        let a = call(&app, Method::POST, &format!("/sessions/{sid}/answer"), Some(answer.clone())).await;
        assert_eq!(a.status, StatusCode::OK, "{}", String::from_utf8_lossy(&a.body));
        let a = a.json();
        let correct = a["correct"].as_bool().unwrap();
        assert_eq!(correct, a["correct_index"] == 0);
        assert_eq!(a["reward"]["r_acc"], if correct { 1.0 } else { -0.5 });
        assert_eq!(a["session_complete"], i == 2);

        let again = call(&app, Method::POST, &format!("/sessions/{sid}/answer"), Some(answer)).await;
        assert_eq!(again.status, StatusCode::CONFLICT);
        assert_eq!(again.json()["error"]["code"], "conflict");
    }

    // answering every planned question is enough for a summary
    let early = call(&app, Method::GET, &format!("/sessions/{sid}/summary"), None).await;
    assert_eq!(early.status, StatusCode::OK, "all planned questions answered counts as finished");

    let end = call(&app, Method::GET, &format!("/sessions/{sid}/next"), None).await;
    assert_eq!(end.json(), json!({"status": "ended", "reason": "completed"}));

    let summary = call(&app, Method::GET, &format!("/sessions/{sid}/summary"), None).await.json();
    let rendered = summary["rendered"].as_str().unwrap();
    assert!(rendered.contains("Territory Mastered") && rendered.contains("Discovery Zone"));

    let state = call(&app, Method::GET, &format!("/sessions/{sid}/state"), None).await.json();
    assert_eq!(state["status"], "ended");
    assert_eq!(state["progress"]["answered"], 3);

    let log = call(&app, Method::GET, &format!("/sessions/{sid}/events"), None).await;
    assert_eq!(log.headers["content-type"], "application/x-ndjson");
    let events = parse_jsonl(std::str::from_utf8(&log.body).unwrap()).unwrap();
    let kinds: Vec<&str> = events.iter().map(|e| e.body.kind()).collect();
    assert_eq!(kinds.first(), Some(&"created"));
    assert_eq!(kinds.last(), Some(&"session_ended"));
    assert_eq!(kinds.iter().filter(|k| **k == "answer_submitted").count(), 3);
    let on_disk = std::fs::read_to_string(dir.path().join("sessions").join(format!("{sid}.jsonl"))).unwrap();
    assert_eq!(on_disk.as_bytes(), &log.body[..]);
}

#[tokio::test]
async fn restart_replays_sessions_from_disk() {
    let dir = tempfile::tempdir().unwrap();
    let (app, store) = app(dir.path());
    let bank_id = compiled_bank(&app).await;
    let sid = new_session(&app, &bank_id, 3).await;
    let q = call(&app, Method::GET, &format!("/sessions/{sid}/next"), None).await.json();
    call(&app, Method::POST, &format!("/sessions/{sid}/answer"), Some(json!({"question_id": q["question_id"], "choice": 1, "response_time": 12.0}))).await;
    let before = call(&app, Method::GET, &format!("/sessions/{sid}/state"), None).await.body;
    let live = store.session(&sid).unwrap().lock().await.clone();
    drop(app);
    drop(store);

    let (app, store) = self::app(dir.path());
    assert!(store.load_failures().is_empty());
    assert_eq!(*store.session(&sid).unwrap().lock().await, live);
    assert_eq!(call(&app, Method::GET, &format!("/sessions/{sid}/state"), None).await.body, before);
    // the restarted service keeps going where it stopped
    let q = call(&app, Method::GET, &format!("/sessions/{sid}/next"), None).await;
    assert_eq!(q.json()["progress"]["served"], 2);
    let text = std::fs::read_to_string(store.session_path(&sid)).unwrap();
    assert_eq!(replay(&parse_jsonl(&text).unwrap()).unwrap(), *store.session(&sid).unwrap().lock().await);
}

#[tokio::test]
async fn corrupt_logs_are_skipped_at_startup() {
    let dir = tempfile::tempdir().unwrap();
    let (app, store) = app(dir.path());
    let bank_id = compiled_bank(&app).await;
    let sid = new_session(&app, &bank_id, 2).await;
    let path = store.session_path(&sid);
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::write(&path, text.replace("\"seq\":0", "\"seq\":4")).unwrap();
    let (_, store) = self::app(dir.path());
    assert!(store.session(&sid).is_none());
    assert_eq!(store.load_failures().len(), 1);
    assert!(store.load_failures()[0].reason.contains("seq"));
}

#[tokio::test]
async fn invalid_bank_upload_lists_violations() {
    let dir = tempfile::tempdir().unwrap();
    let (app, _) = app(dir.path());
    let bank = json!({
        "schema": "pal-bank/1",
        "source_id": "x",
        "questions": [
            {"q": "What is a?", "a": {"options": ["1", "2", "3", "4"], "correct_index": 5}, "d": "easy", "t": 1.0, "c": ""},
            {"q": "", "a": {"options": ["1"], "correct_index": 0}, "d": "hard", "t": 2.0, "c": ""}
        ]
    });
    let r = call(&app, Method::POST, "/banks", Some(bank)).await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    let err = r.json()["error"].clone();
    assert_eq!(err["code"], "invalid_bank");
    let paths: Vec<&str> = err["violations"].as_array().unwrap().iter().map(|v| v["path"].as_str().unwrap()).collect();
    assert!(paths.contains(&"questions[0].a.correct_index"), "{paths:?}");
    assert!(paths.len() >= 3, "{paths:?}");
}

#[tokio::test]
async fn uploaded_banks_are_content_addressed() {
    let dir = tempfile::tempdir().unwrap();
    let (app, _) = app(dir.path());
    let bank = std::fs::read("../core/tests/fixtures/definitions.bank.json").unwrap();
    let body: Value = serde_json::from_slice(&bank).unwrap();
    let a = call(&app, Method::POST, "/banks", Some(body.clone())).await;
    let b = call(&app, Method::POST, "/banks", Some(body)).await;
    assert_eq!(a.status, StatusCode::CREATED);
    assert_eq!(a.json()["bank_id"], b.json()["bank_id"]);
    assert_eq!(a.json()["bank_id"], pal_service::bank_id(&bank));
    assert_eq!(a.json()["questions"], 3);
}

#[tokio::test]
async fn request_errors() {
    let dir = tempfile::tempdir().unwrap();
    let (app, store) = app(dir.path());
    let bank_id = compiled_bank(&app).await;

    let r = call(&app, Method::GET, "/sessions/nope/next", None).await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
    assert_eq!(r.json()["error"]["code"], "not_found");

    let r = call(&app, Method::POST, "/sessions", Some(json!({"bank_id": "missing", "learner_id": "a", "planned_questions": 1, "rng_seed": 0}))).await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);

    let r = call(&app, Method::POST, "/sessions", Some(json!({"bank_id": bank_id, "learner_id": "a", "planned_questions": 0, "rng_seed": 0}))).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    assert_eq!(r.json()["error"]["code"], "validation");

    let r = call(&app, Method::POST, "/sessions", Some(json!({"bank_id": bank_id}))).await;
    assert_eq!(r.json()["error"]["code"], "bad_request");

    let sid = new_session(&app, &bank_id, 2).await;
    let r = call(&app, Method::GET, &format!("/sessions/{sid}/summary"), None).await;
    assert_eq!(r.status, StatusCode::CONFLICT);
    assert_eq!(r.json()["error"]["code"], "session_active");

    let q = call(&app, Method::GET, &format!("/sessions/{sid}/next"), None).await.json();
    let r = call(&app, Method::GET, &format!("/sessions/{sid}/next"), None).await;
    assert_eq!(r.json()["error"]["code"], "protocol");
    let r = call(&app, Method::POST, &format!("/sessions/{sid}/answer"), Some(json!({"question_id": q["question_id"], "choice": 9, "response_time": 1.0}))).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);

    // a mutation while another holds the session is refused
    let handle = store.session(&sid).unwrap();
    let guard = handle.lock().await;
    let r = call(&app, Method::POST, &format!("/sessions/{sid}/answer"), Some(json!({"question_id": q["question_id"], "choice": 0, "response_time": 1.0}))).await;
    assert_eq!(r.status, StatusCode::CONFLICT);
    drop(guard);
    let r = call(&app, Method::POST, &format!("/sessions/{sid}/answer"), Some(json!({"question_id": q["question_id"], "choice": 0, "response_time": 1.0}))).await;
    assert_eq!(r.status, StatusCode::OK);

    let r = call(&app, Method::POST, &format!("/sessions/{sid}/end"), None).await;
    assert_eq!(r.status, StatusCode::OK);
    let r = call(&app, Method::POST, &format!("/sessions/{sid}/end"), None).await;
    assert_eq!(r.json()["error"]["code"], "session_ended");
    let r = call(&app, Method::GET, &format!("/sessions/{sid}/summary"), None).await;
    assert_eq!(r.status, StatusCode::OK);
}

#[tokio::test]
async fn compile_rejects_bad_transcripts() {
    let dir = tempfile::tempdir().unwrap();
    let (app, _) = app(dir.path());
    let r = call(&app, Method::POST, "/banks/compile", Some(json!({"transcript": "1\n00:00:xx,000 --> 00:00:01,000\nHi.\n", "format": "srt"}))).await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(r.json()["error"]["code"], "invalid_transcript");
}
