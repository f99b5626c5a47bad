//! HTTP routes.

use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use pal_core::level::Difficulty;
use pal_core::model::QuestionId;
use pal_core::pipeline::{compile_bank, parse_transcript, PipelineConfig, TranscriptFormat, Violation};
use pal_core::session::{AnswerResult, EndReason, NextQuestion, Progress, Session, SessionConfig, SessionError};
use pal_core::summary::{compose_summary, transcript_from_bank, HashedBagEmbedder, LearnerProfile, SummaryConfig, TemplateSynthesizer};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::store::{SessionHandle, Store, StoreError};

pub type AppState = Arc<Store>;

pub fn router(store: AppState) -> Router {
    Router::new()
        .route("/banks", post(upload_bank))
        .route("/banks/compile", post(compile))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/next", get(next_question))
        .route("/sessions/{id}/answer", post(submit_answer))
        .route("/sessions/{id}/end", post(end_session))
        .route("/sessions/{id}/state", get(state))
        .route("/sessions/{id}/summary", get(summary))
        .route("/sessions/{id}/events", get(events))
        .with_state(store)
}

/// Every failure leaves as `{"error": {"code", "message"}}`, with the
/// violation list attached for rejected banks.
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
    violations: Option<Vec<Violation>>,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
            violations: None,
        }
    }

    fn not_found(what: &str, id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", format!("unknown {what} {id}"))
    }

    fn invalid_bank(violations: Vec<Violation>) -> Self {
        Self {
            violations: Some(violations),
            ..Self::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_bank", "bank failed validation")
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut error = json!({"code": self.code, "message": self.message});
        if let Some(v) = self.violations {
            error["violations"] = json!(v);
        }
        (self.status, Json(json!({ "error": error }))).into_response()
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let status = match &e {
            SessionError::Validation(_) => StatusCode::BAD_REQUEST,
            SessionError::InvalidBank(v) => return ApiError::invalid_bank(v.clone()),
            SessionError::Protocol(_) | SessionError::Conflict(_) | SessionError::Ended | SessionError::NotEnded => StatusCode::CONFLICT,
            SessionError::Corruption { .. } | SessionError::Policy(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError::new(status, e.code(), e.to_string())
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::InvalidBank(v) => ApiError::invalid_bank(v),
            other => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "storage", other.to_string()),
        }
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn parse_body<T: DeserializeOwned>(body: &[u8]) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "bad_request", e.to_string()))
}

fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64)
}

fn session_handle(store: &Store, id: &str) -> ApiResult<SessionHandle> {
    store.session(id).ok_or_else(|| ApiError::not_found("session", id))
}

/// Runs one mutation against a copy of the session, persists the events it
/// produced and only then publishes the new state. A second request for a
/// session that is already being mutated gets a conflict.
async fn mutate<T>(store: &Store, id: &str, op: impl FnOnce(&mut Session) -> Result<T, SessionError>) -> ApiResult<T> {
    let handle = session_handle(store, id)?;
    let mut guard = handle
        .try_lock()
        .map_err(|_| ApiError::new(StatusCode::CONFLICT, "conflict", "another request for this session is in flight"))?;
    let mut draft = guard.clone();
    let out = op(&mut draft)?;
    store.append_events(id, &draft.events[guard.events.len()..])?;
    *guard = draft;
    Ok(out)
}

#[derive(Serialize)]
struct BankCreated {
    bank_id: String,
    questions: usize,
}

async fn upload_bank(State(store): State<AppState>, body: Bytes) -> ApiResult<(StatusCode, Json<BankCreated>)> {
    let (bank_id, bank) = store.put_bank(&body)?;
    Ok((StatusCode::CREATED, Json(BankCreated { bank_id, questions: bank.len() })))
}

#[derive(Deserialize)]
struct CompileRequest {
    transcript: String,
    format: TranscriptFormat,
    #[serde(default = "default_source_id")]
    source_id: String,
    #[serde(default)]
    pipeline: PipelineConfig,
}

fn default_source_id() -> String {
    "lecture".into()
}

/// Compiles a transcript, stores the bank (and the transcript, for
/// summaries) and returns the canonical bank file. The id is in the
/// `x-bank-id` header.
async fn compile(State(store): State<AppState>, body: Bytes) -> ApiResult<Response> {
    let req: CompileRequest = parse_body(&body)?;
    req.pipeline
        .validate()
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "validation", e.to_string()))?;
    let transcript = parse_transcript(req.transcript.as_bytes(), req.format, &req.source_id)
        .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_transcript", e.to_string()))?;
    let bytes = compile_bank(&transcript, &req.pipeline)
        .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "compile_failed", e.to_string()))?;
    let (bank_id, _) = store.put_bank(&bytes)?;
    store.put_transcript(&bank_id, &transcript)?;
    let mut response = (StatusCode::OK, [(header::CONTENT_TYPE, "application/json")], bytes).into_response();
    response
        .headers_mut()
        .insert("x-bank-id", HeaderValue::from_str(&bank_id).expect("hex is a valid header"));
    Ok(response)
}

#[derive(Serialize)]
struct SessionCreated {
    session_id: String,
}

async fn create_session(State(store): State<AppState>, body: Bytes) -> ApiResult<(StatusCode, Json<SessionCreated>)> {
    let config: SessionConfig = parse_body(&body)?;
    let bank = store.bank(&config.bank_id).ok_or_else(|| ApiError::not_found("bank", &config.bank_id))?;
    let id = uuid::Uuid::new_v4().to_string();
    let session = Session::create(id.clone(), config, bank, now_ms())?;
    store.insert_session(session)?;
    Ok((StatusCode::CREATED, Json(SessionCreated { session_id: id })))
}

#[derive(Serialize)]
struct PublicAnswerKey {
    options: Vec<String>,
}

/// A served question without its answer.
#[derive(Serialize)]
struct QuestionPayload {
    status: &'static str,
    question_id: QuestionId,
    q: String,
    a: PublicAnswerKey,
    d: Difficulty,
    t: f64,
    c: String,
    difficulty: Difficulty,
    fallback: bool,
    time_limit: f64,
    progress: Progress,
}

#[derive(Serialize)]
struct EndedPayload {
    status: &'static str,
    reason: EndReason,
}

async fn next_question(State(store): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let (next, time_limit) = mutate(&store, &id, |s| Ok((s.next_question(now_ms())?, s.config.time_limit))).await?;
    Ok(match next {
        NextQuestion::Served(q) => Json(QuestionPayload {
            status: "question",
            question_id: q.question_id,
            q: q.record.q,
            a: PublicAnswerKey { options: q.record.a.options },
            d: q.record.d,
            t: q.record.t,
            c: q.record.c,
            difficulty: q.difficulty,
            fallback: q.fallback,
            time_limit,
            progress: q.progress,
        })
        .into_response(),
        NextQuestion::Ended(reason) => Json(EndedPayload { status: "ended", reason }).into_response(),
    })
}

#[derive(Deserialize)]
struct AnswerRequest {
    question_id: QuestionId,
    choice: usize,
    response_time: f64,
}

async fn submit_answer(State(store): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult<Json<AnswerResult>> {
    let req: AnswerRequest = parse_body(&body)?;
    let result = mutate(&store, &id, |s| s.submit_answer(req.question_id, req.choice, req.response_time, now_ms())).await?;
    Ok(Json(result))
}

async fn end_session(State(store): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<EndedPayload>> {
    mutate(&store, &id, |s| s.end(now_ms())).await?;
    Ok(Json(EndedPayload {
        status: "ended",
        reason: EndReason::Stopped,
    }))
}

async fn state(State(store): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let handle = session_handle(&store, &id)?;
    let session = handle.lock().await;
    Ok(Json(session.snapshot()).into_response())
}

async fn summary(State(store): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let handle = session_handle(&store, &id)?;
    let session = handle.lock().await.clone();
    let transcript = store
        .transcript(&session.config.bank_id)
        .unwrap_or_else(|| transcript_from_bank(&session.bank));
    let profile = LearnerProfile {
        learner_id: session.config.learner_id.clone(),
        interests: session.config.interests.clone(),
    };
    let report = compose_summary(
        &session,
        &transcript,
        &profile,
        &SummaryConfig::default(),
        &HashedBagEmbedder::default(),
        &TemplateSynthesizer,
    )?;
    Ok(Json(report).into_response())
}

async fn events(State(store): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let handle = session_handle(&store, &id)?;
    let text = pal_core::session::to_jsonl(&handle.lock().await.events);
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], text).into_response())
}

