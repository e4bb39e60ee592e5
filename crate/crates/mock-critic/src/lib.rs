//! Mock critic server for the `/objective` and `/reflect` contract.
//!
//! Requests are checked against the documented JSON shapes (400 on a
//! violation). Replies come from a per-endpoint script queue; once a queue is
//! empty the server answers from a small keypoint oracle.

use std::collections::VecDeque;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::Router;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MockError {
    #[error("mock critic io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid mock script: {0}")]
    Script(String),
}

/// One scripted answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Reply {
    /// 200 with this JSON body.
    Json { body: Value },
    /// Arbitrary status and raw body text.
    Raw { status: u16, body: String },
    /// Sleep, then answer.
    Delay { millis: u64, then: Box<Reply> },
    /// Answer from the oracle.
    Oracle,
}

impl Reply {
    pub fn objective(program: &str) -> Self {
        Reply::Json {
            body: json!({ "reward_program": program, "rationale": "scripted" }),
        }
    }

    pub fn reflect(success: bool, revised: Option<&str>) -> Self {
        Reply::Json {
            body: json!({ "success": success, "revised_program": revised, "rationale": "scripted" }),
        }
    }

    pub fn text(body: &str) -> Self {
        Reply::Raw {
            status: 200,
            body: body.to_string(),
        }
    }

    pub fn status(status: u16, body: &str) -> Self {
        Reply::Raw {
            status,
            body: body.to_string(),
        }
    }

    pub fn delayed(self, d: Duration) -> Self {
        Reply::Delay {
            millis: d.as_millis() as u64,
            then: Box::new(self),
        }
    }
}

fn default_radius() -> f64 {
    0.15
}

/// Replies per endpoint, consumed front to back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Script {
    #[serde(default)]
    pub objective: Vec<Reply>,
    #[serde(default)]
    pub reflect: Vec<Reply>,
    /// Success radius the reflect oracle uses.
    #[serde(default = "default_radius")]
    pub radius: f64,
    /// When set, requests must carry `Authorization: Bearer <key>`.
    #[serde(default, skip_serializing)]
    pub api_key: Option<String>,
}

impl Default for Script {
    fn default() -> Self {
        Self {
            objective: Vec::new(),
            reflect: Vec::new(),
            radius: default_radius(),
            api_key: None,
        }
    }
}

impl Script {
    pub fn from_json(text: &str) -> Result<Self, MockError> {
        serde_json::from_str(text).map_err(|e| MockError::Script(e.to_string()))
    }
}

/// A request as the server saw it.
#[derive(Debug, Clone, PartialEq)]
pub struct Received {
    pub path: &'static str,
    pub body: Value,
    /// Whether a bearer token was present (its value is not kept).
    pub had_bearer: bool,
    pub status: u16,
}

struct Shared {
    objective: Mutex<VecDeque<Reply>>,
    reflect: Mutex<VecDeque<Reply>>,
    radius: f64,
    api_key: Option<String>,
    log: Mutex<Vec<Received>>,
}

type Checked = Result<Map<String, Value>, String>;

fn field<'a>(m: &'a Map<String, Value>, name: &str) -> Result<&'a Value, String> {
    m.get(name).ok_or_else(|| format!("missing field `{name}`"))
}

fn number_array(v: &Value, name: &str) -> Result<Vec<f64>, String> {
    let arr = v.as_array().ok_or_else(|| format!("`{name}` must be an array"))?;
    arr.iter()
        .map(|x| x.as_f64().ok_or_else(|| format!("`{name}` must hold numbers")))
        .collect()
}

fn check_keypoints(v: &Value) -> Result<(), String> {
    let m = v.as_object().ok_or("`keypoints` must be an object")?;
    for (k, p) in m {
        if number_array(p, "keypoints")?.len() != 2 {
            return Err(format!("keypoint `{k}` must be [x, y]"));
        }
    }
    Ok(())
}

fn check_history(v: &Value) -> Result<(), String> {
    let arr = v.as_array().ok_or("`history` must be an array")?;
    for h in arr {
        let m = h.as_object().ok_or("history entries must be objects")?;
        match m.get("kind").and_then(Value::as_str) {
            Some("objective") | Some("reflect") => {}
            _ => return Err("history entry needs kind objective|reflect".into()),
        }
        if !m.get("response").is_some_and(Value::is_string) {
            return Err("history entry needs a string `response`".into());
        }
    }
    Ok(())
}

fn check_objective(body: &Value) -> Checked {
    let m = body.as_object().ok_or("body must be a JSON object")?.clone();
    if !field(&m, "instruction")?.is_string() {
        return Err("`instruction` must be a string".into());
    }
    number_array(field(&m, "observation")?, "observation")?;
    check_keypoints(field(&m, "keypoints")?)?;
    let stages = field(&m, "stages")?
        .as_array()
        .ok_or("`stages` must be an array")?;
    if stages.len() != 4 {
        return Err(format!("expected 4 stages, got {}", stages.len()));
    }
    check_history(field(&m, "history")?)?;
    Ok(m)
}

fn check_reflect(body: &Value) -> Checked {
    let m = body.as_object().ok_or("body must be a JSON object")?.clone();
    number_array(field(&m, "a0")?, "a0")?;
    number_array(field(&m, "a_star")?, "a_star")?;
    number_array(field(&m, "post_observation")?, "post_observation")?;
    check_keypoints(field(&m, "keypoints")?)?;
    check_history(field(&m, "history")?)?;
    Ok(m)
}

fn keypoints(m: &Map<String, Value>) -> Vec<(String, [f64; 2])> {
    m.get("keypoints")
        .and_then(Value::as_object)
        .map(|kp| {
            kp.iter()
                .filter_map(|(k, v)| {
                    let p = number_array(v, k).ok()?;
                    (k != "ee").then(|| (k.clone(), [p[0], p[1]]))
                })
                .collect()
        })
        .unwrap_or_default()
}

/// Keypoint whose name shares the most words with the instruction.
fn oracle_objective(m: &Map<String, Value>) -> Value {
    let text = m.get("instruction").and_then(Value::as_str).unwrap_or("");
    let words: Vec<&str> = text.split_whitespace().collect();
    let best = keypoints(m)
        .into_iter()
        .map(|(k, _)| {
            let hits = k.split('_').filter(|w| words.contains(w)).count();
            (hits, k)
        })
        .fold(None::<(usize, String)>, |acc, x| match acc {
            Some(a) if a.0 >= x.0 => Some(a),
            _ => Some(x),
        });
    match best {
        Some((_, k)) => json!({
            "reward_program": format!("neg(dist(action, {k}))"),
            "rationale": format!("distance to {k}"),
        }),
        None => json!({ "reward_program": "0", "rationale": "no keypoints" }),
    }
}

/// Judges the action against the keypoint named by the latest program.
fn oracle_reflect(m: &Map<String, Value>, radius: f64) -> Value {
    let program = m
        .get("history")
        .and_then(Value::as_array)
        .and_then(|h| {
            h.iter()
                .rev()
                .find_map(|e| e.get("program").and_then(Value::as_str).map(str::to_string))
        })
        .unwrap_or_default();
    let a = m
        .get("a_star")
        .and_then(|v| number_array(v, "a_star").ok())
        .unwrap_or_default();
    let hit = keypoints(m).into_iter().find(|(k, p)| {
        program.replace(' ', "") == format!("neg(dist(action,{k}))")
            && a.len() == 2
            && ((a[0] - p[0]).powi(2) + (a[1] - p[1]).powi(2)).sqrt() <= radius
    });
    json!({
        "success": hit.is_some(),
        "revised_program": Value::Null,
        "rationale": if hit.is_some() { "within radius" } else { "missed" },
    })
}

async fn answer(reply: Reply, oracle: impl FnOnce() -> Value) -> Response {
    let mut reply = reply;
    loop {
        match reply {
            Reply::Delay { millis, then } => {
                tokio::time::sleep(Duration::from_millis(millis)).await;
                reply = *then;
            }
            Reply::Json { body } => return (StatusCode::OK, axum::Json(body)).into_response(),
            Reply::Raw { status, body } => {
                let code = StatusCode::from_u16(status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
                return (code, body).into_response();
            }
            Reply::Oracle => return (StatusCode::OK, axum::Json(oracle())).into_response(),
        }
    }
}

fn bearer(headers: &HeaderMap) -> Option<&str> {
    headers
        .get("authorization")
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "))
}

async fn handle(path: &'static str, shared: Arc<Shared>, headers: HeaderMap, raw: String) -> Response {
    let token = bearer(&headers);
    let had_bearer = token.is_some();
    let parsed: Result<Value, String> = serde_json::from_str(&raw).map_err(|e| e.to_string());
    let body_for_log = parsed.clone().unwrap_or(Value::Null);
    let log = |status: u16| {
        shared.log.lock().expect("log lock").push(Received {
            path,
            body: body_for_log.clone(),
            had_bearer,
            status,
        });
    };
    if let Some(key) = &shared.api_key {
        if token != Some(key.as_str()) {
            log(401);
            return (StatusCode::UNAUTHORIZED, "missing or wrong bearer token").into_response();
        }
    }
    let checked = parsed.and_then(|v| {
        if path == "/objective" {
            check_objective(&v)
        } else {
            check_reflect(&v)
        }
    });
    let m = match checked {
        Ok(m) => m,
        Err(e) => {
            log(400);
            return (StatusCode::BAD_REQUEST, format!("contract violation: {e}")).into_response();
        }
    };
    let queue = if path == "/objective" {
        &shared.objective
    } else {
        &shared.reflect
    };
    let reply = queue
        .lock()
        .expect("queue lock")
        .pop_front()
        .unwrap_or(Reply::Oracle);
    let resp = if path == "/objective" {
        answer(reply, || oracle_objective(&m)).await
    } else {
        let r = shared.radius;
        answer(reply, || oracle_reflect(&m, r)).await
    };
    log(resp.status().as_u16());
    resp
}

fn router(shared: Arc<Shared>) -> Router {
    let s1 = shared.clone();
    let s2 = shared;
    Router::new()
        .route(
            "/objective",
            post(move |h: HeaderMap, b: String| handle("/objective", s1.clone(), h, b)),
        )
        .route(
            "/reflect",
            post(move |h: HeaderMap, b: String| handle("/reflect", s2.clone(), h, b)),
        )
        .fallback(|| async { (StatusCode::NOT_FOUND, "unknown endpoint") })
}

fn shared(script: Script) -> Arc<Shared> {
    Arc::new(Shared {
        objective: Mutex::new(script.objective.into()),
        reflect: Mutex::new(script.reflect.into()),
        radius: script.radius,
        api_key: script.api_key,
        log: Mutex::new(Vec::new()),
    })
}

/// Server running on a background thread; stopped on drop.
pub struct MockServer {
    addr: SocketAddr,
    shared: Arc<Shared>,
    stop: Option<tokio::sync::oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<()>>,
}

impl MockServer {
    /// Bind an ephemeral port on 127.0.0.1 and serve `script`.
    pub fn start(script: Script) -> Result<Self, MockError> {
        Self::bind("127.0.0.1:0".parse().expect("literal address"), script)
    }

    pub fn bind(addr: SocketAddr, script: Script) -> Result<Self, MockError> {
        let shared = shared(script);
        let app = router(shared.clone());
        let rt = tokio::runtime::Builder::new_current_thread()
            .enable_all()
            .build()?;
        let listener = rt.block_on(tokio::net::TcpListener::bind(addr))?;
        let addr = listener.local_addr()?;
        let (tx, rx) = tokio::sync::oneshot::channel::<()>();
        let thread = std::thread::spawn(move || {
            rt.block_on(async move {
                let _ = axum::serve(listener, app)
                    .with_graceful_shutdown(async {
                        let _ = rx.await;
                    })
                    .await;
            });
        });
        Ok(Self {
            addr,
            shared,
            stop: Some(tx),
            thread: Some(thread),
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Requests received so far, in arrival order.
    pub fn received(&self) -> Vec<Received> {
        self.shared.log.lock().expect("log lock").clone()
    }

    pub fn push_objective(&self, r: Reply) {
        self.shared.objective.lock().expect("queue lock").push_back(r);
    }

    pub fn push_reflect(&self, r: Reply) {
        self.shared.reflect.lock().expect("queue lock").push_back(r);
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        if let Some(tx) = self.stop.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

/// Serve on `addr` until Ctrl-C. `on_ready` gets the bound address.
pub fn serve_forever(
    addr: SocketAddr,
    script: Script,
    on_ready: impl FnOnce(SocketAddr),
) -> Result<(), MockError> {
    let app = router(shared(script));
    let rt = tokio::runtime::Builder::new_current_thread()
        .enable_all()
        .build()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr).await?;
        on_ready(listener.local_addr()?);
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        Ok(())
    })
}
