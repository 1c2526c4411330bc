//! Stateless HTTP query service: each request gets a fresh engine, runs a
//! goal under limits and returns the captured answers as JSON.
//!
//! Routes:
//! - `POST /solve` takes a [`SolveRequest`] and returns a [`SolveResponse`].
//! - `GET /lessons` lists the pack catalog.
//! - `GET /lessons/{name}` returns one pack's program and canonical goals.

use std::cell::RefCell;
use std::rc::Rc;
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use mathlog_core::{lessons, Database, EngineError, EngineLimits, Error, SolveOptions};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use tokio::net::TcpListener;
use tokio::sync::{oneshot, Semaphore};
use tower_http::cors::CorsLayer;

pub const MAX_BODY_BYTES: usize = 64 * 1024;
pub const DEFAULT_CONCURRENCY: usize = 8;
/// Trace lines kept per request; the rest are dropped.
pub const TRACE_LINE_LIMIT: usize = 10_000;
/// Solver threads get a large stack so deep terms can be reified and
/// formatted without overflowing.
const SOLVER_STACK_BYTES: usize = 256 * 1024 * 1024;

fn default_max_solutions() -> usize {
    100
}

fn default_timeout_ms() -> u64 {
    2000
}

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
pub struct SolveRequest {
    /// Pack to consult first.
    #[serde(default)]
    pub lesson: Option<String>,
    /// Program text consulted after the pack.
    #[serde(default)]
    pub program: Option<String>,
    pub goal: String,
    #[serde(default = "default_max_solutions")]
    pub max_solutions: usize,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
    #[serde(default)]
    pub trace: bool,
}

impl SolveRequest {
    pub fn new(goal: impl Into<String>) -> SolveRequest {
        SolveRequest {
            lesson: None,
            program: None,
            goal: goal.into(),
            max_solutions: default_max_solutions(),
            timeout_ms: default_timeout_ms(),
            trace: false,
        }
    }

    /// Checks the field invariants; the message explains the first violation.
    pub fn validate(&self) -> Result<(), String> {
        if self.lesson.is_none() && self.program.is_none() {
            return Err("one of `lesson` or `program` is required".into());
        }
        if let Some(name) = &self.lesson {
            if lessons::find(name).is_none() {
                return Err(format!("unknown lesson `{name}`"));
            }
        }
        if self.goal.trim().is_empty() {
            return Err("`goal` must not be empty".into());
        }
        if !(1..=1000).contains(&self.max_solutions) {
            return Err("`max_solutions` must be between 1 and 1000".into());
        }
        if !(1..=30_000).contains(&self.timeout_ms) {
            return Err("`timeout_ms` must be between 1 and 30000".into());
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    ParseError,
    EvalError,
    ResourceLimit,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq, Eq)]
pub struct ErrorInfo {
    pub message: String,
    /// Position within the request's `program` or `goal` text, for syntax
    /// errors.
    pub line: Option<usize>,
    pub column: Option<usize>,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq, Eq)]
pub struct SolutionOut {
    /// Variable name to formatted value, in order of first appearance.
    pub bindings: Map<String, Value>,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
pub struct SolveResponse {
    pub solutions: Vec<SolutionOut>,
    pub stdout: String,
    pub truncated: bool,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorInfo>,
    pub elapsed_ms: u64,
    /// Engine trace, present only when requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<String>>,
}

impl SolveResponse {
    fn failed(status: Status, error: ErrorInfo, started: Instant) -> SolveResponse {
        SolveResponse {
            solutions: Vec::new(),
            stdout: String::new(),
            truncated: false,
            status,
            error: Some(error),
            elapsed_ms: elapsed_ms(started),
            trace: None,
        }
    }
}

fn elapsed_ms(since: Instant) -> u64 {
    u64::try_from(since.elapsed().as_millis()).unwrap_or(u64::MAX)
}

fn error_info(err: &Error) -> (Status, ErrorInfo) {
    match err {
        Error::Read(errs) => {
            let first = errs.first();
            (
                Status::ParseError,
                ErrorInfo {
                    message: err.to_string(),
                    line: Some(first.pos.line),
                    column: Some(first.pos.column),
                },
            )
        }
        Error::Engine(e) => engine_error_info(e),
    }
}

fn engine_error_info(e: &EngineError) -> (Status, ErrorInfo) {
    let status = if e.is_resource() {
        Status::ResourceLimit
    } else {
        Status::EvalError
    };
    let info = ErrorInfo {
        message: e.to_string(),
        line: None,
        column: None,
    };
    (status, info)
}

/// Runs one request on the calling thread. The request is assumed valid.
pub fn solve(req: &SolveRequest) -> SolveResponse {
    let started = Instant::now();
    let mut db = match &req.lesson {
        Some(name) => match lessons::find(name) {
            Some(pack) => pack.database(),
            None => {
                let info = ErrorInfo {
                    message: format!("unknown lesson `{name}`"),
                    line: None,
                    column: None,
                };
                return SolveResponse::failed(Status::EvalError, info, started);
            }
        },
        None => Database::new(),
    };
    if let Some(program) = &req.program {
        if let Err(e) = db.consult_text(program) {
            let (status, info) = error_info(&e);
            return SolveResponse::failed(status, info, started);
        }
    }

    let limits = EngineLimits {
        timeout: Some(Duration::from_millis(req.timeout_ms)),
        ..EngineLimits::default()
    };
    let sols = match db.solve_text(&req.goal, SolveOptions::with_limits(limits)) {
        Ok(s) => s,
        Err(e) => {
            let (status, info) = error_info(&e);
            return SolveResponse::failed(status, info, started);
        }
    };
    let trace = Rc::new(RefCell::new(Vec::new()));
    let mut sols = if req.trace {
        let sink = Rc::clone(&trace);
        sols.with_trace_sink(move |line| {
            let mut lines = sink.borrow_mut();
            if lines.len() < TRACE_LINE_LIMIT {
                lines.push(line.to_string());
            }
        })
    } else {
        sols
    };

    let mut solutions = Vec::new();
    let mut failure = None;
    let mut truncated = false;
    loop {
        match sols.next_solution() {
            Ok(Some(answer)) => {
                if solutions.len() == req.max_solutions {
                    truncated = true;
                    break;
                }
                let bindings = answer
                    .formatted()
                    .into_iter()
                    .map(|(n, v)| (n, Value::String(v)))
                    .collect();
                solutions.push(SolutionOut { bindings });
            }
            Ok(None) => break,
            // The cap was reached and the probe for one more answer failed:
            // more answers may exist.
            Err(_) if solutions.len() == req.max_solutions => {
                truncated = true;
                break;
            }
            Err(e) => {
                failure = Some(engine_error_info(&e));
                break;
            }
        }
    }
    let stdout = sols.take_output();
    drop(sols);
    let (status, error) = match failure {
        Some((status, info)) => (status, Some(info)),
        None => (Status::Ok, None),
    };
    let trace = req.trace.then(|| trace.take());
    SolveResponse {
        solutions,
        stdout,
        truncated,
        status,
        error,
        elapsed_ms: elapsed_ms(started),
        trace,
    }
}

#[derive(Clone)]
struct AppState {
    permits: Arc<Semaphore>,
}

#[derive(Clone, Copy, Debug)]
pub struct GatewayConfig {
    /// Solves allowed to run at once; further requests wait.
    pub max_concurrent: usize,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        GatewayConfig {
            max_concurrent: DEFAULT_CONCURRENCY,
        }
    }
}

pub fn router() -> Router {
    router_with(GatewayConfig::default())
}

pub fn router_with(config: GatewayConfig) -> Router {
    let state = AppState {
        permits: Arc::new(Semaphore::new(config.max_concurrent.max(1))),
    };
    Router::new()
        .route("/solve", post(solve_handler))
        .route("/lessons", get(list_lessons))
        .route("/lessons/{name}", get(show_lesson))
        .layer(DefaultBodyLimit::max(MAX_BODY_BYTES))
        .layer(CorsLayer::permissive())
        .with_state(state)
}

/// Serves the default router until the listener fails.
pub async fn serve(listener: TcpListener) -> std::io::Result<()> {
    axum::serve(listener, router()).await
}

fn error_response(code: StatusCode, message: &str) -> Response {
    (code, Json(json!({ "error": message }))).into_response()
}

async fn solve_handler(State(state): State<AppState>, body: Bytes) -> Response {
    // Parsed by hand so every malformed body is a 400, whatever the
    // content type.
    let req: SolveRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return error_response(StatusCode::BAD_REQUEST, &e.to_string()),
    };
    if let Err(msg) = req.validate() {
        return error_response(StatusCode::BAD_REQUEST, &msg);
    }
    let Ok(permit) = Arc::clone(&state.permits).acquire_owned().await else {
        return error_response(StatusCode::INTERNAL_SERVER_ERROR, "internal error");
    };
    let (tx, rx) = oneshot::channel();
    let spawned = std::thread::Builder::new()
        .name("mathlog-solve".into())
        .stack_size(SOLVER_STACK_BYTES)
        .spawn(move || {
            let resp = solve(&req);
            drop(permit);
            let _ = tx.send(resp);
        });
    if spawned.is_err() {
        return error_response(StatusCode::INTERNAL_SERVER_ERROR, "internal error");
    }
    match rx.await {
        Ok(resp) => Json(resp).into_response(),
        // The solver thread panicked.
        Err(_) => error_response(StatusCode::INTERNAL_SERVER_ERROR, "internal error"),
    }
}

#[derive(Serialize)]
struct LessonSummary {
    name: &'static str,
    description: &'static str,
}

async fn list_lessons() -> Json<Vec<LessonSummary>> {
    Json(
        lessons::catalog()
            .map(|p| LessonSummary {
                name: p.name,
                description: p.description,
            })
            .collect(),
    )
}

#[derive(Serialize)]
struct LessonDetail {
    name: &'static str,
    description: &'static str,
    program: &'static str,
    canonical_goals: Vec<&'static str>,
}

async fn show_lesson(Path(name): Path<String>) -> Response {
    match lessons::find(&name) {
        Some(p) => Json(LessonDetail {
            name: p.name,
            description: p.description,
            program: p.program,
            canonical_goals: p.canonical_goals.iter().map(|g| g.goal).collect(),
        })
        .into_response(),
        None => error_response(StatusCode::NOT_FOUND, &format!("unknown lesson `{name}`")),
    }
}
