//! Chat-completion backend.
//!
//! Requests go through a [`Transport`], so traffic can be recorded to a JSONL
//! file and replayed later without network access. Latency is wall-clock and
//! includes retries and backoff.

use super::parse::{parse_score, parse_verdict};
use super::{CallFailure, Envisioned, EvalScore, FailureKind, ReasoningBackend, Verdict};
use crate::geometry::Point;
use crate::world::{GoalSpec, Pose, SceneDescription};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::collections::{HashMap, VecDeque};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum TransportError {
    /// Worth retrying: timeouts, connection failures, 429 and 5xx.
    #[error("transient transport failure: {0}")]
    Transient(String),
    #[error("transport failure: {0}")]
    Fatal(String),
}

/// Sends one JSON request body and returns the raw response body.
pub trait Transport: Send + Sync {
    fn post(&self, body: &str) -> Result<String, TransportError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RemoteConfig {
    pub url: String,
    pub evaluator_model: String,
    pub visionary_model: String,
    /// Model for the stop check; the evaluator model when unset.
    pub checker_model: Option<String>,
    pub temperature: f64,
    /// Name of the environment variable holding the bearer token.
    pub api_key_env: String,
    pub timeout_secs: u64,
    pub max_retries: u32,
    pub initial_backoff_ms: u64,
    pub max_backoff_ms: u64,
    pub max_in_flight: usize,
    /// Directory with `system.txt`, `evaluate.txt`, `envision.txt`, `check_found.txt` overrides.
    pub prompts_dir: Option<PathBuf>,
    pub record_path: Option<PathBuf>,
    pub replay_path: Option<PathBuf>,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        RemoteConfig {
            url: "https://api.openai.com/v1/chat/completions".into(),
            evaluator_model: "gpt-4o".into(),
            visionary_model: "gpt-4o".into(),
            checker_model: None,
            temperature: 0.0,
            api_key_env: "OPENAI_API_KEY".into(),
            timeout_secs: 60,
            max_retries: 3,
            initial_backoff_ms: 500,
            max_backoff_ms: 8000,
            max_in_flight: 4,
            prompts_dir: None,
            record_path: None,
            replay_path: None,
        }
    }
}

impl RemoteConfig {
    /// Delay before retry number `attempt` (0-based), doubling up to the cap.
    pub fn backoff(&self, attempt: u32) -> Duration {
        let ms = self.initial_backoff_ms.saturating_mul(1u64 << attempt.min(32));
        Duration::from_millis(ms.min(self.max_backoff_ms))
    }
}

/// Prompt texts. `{goal}` and `{scene}` are substituted.
#[derive(Debug, Clone, PartialEq)]
pub struct PromptTemplates {
    pub system: String,
    pub evaluate: String,
    pub envision: String,
    pub check_found: String,
}

impl Default for PromptTemplates {
    fn default() -> Self {
        PromptTemplates {
            system: include_str!("../../prompts/system.txt").trim_end().to_string(),
            evaluate: include_str!("../../prompts/evaluate.txt").trim_end().to_string(),
            envision: include_str!("../../prompts/envision.txt").trim_end().to_string(),
            check_found: include_str!("../../prompts/check_found.txt").trim_end().to_string(),
        }
    }
}

impl PromptTemplates {
    /// Defaults, with any template file present in `dir` taking precedence.
    pub fn load_dir(dir: &Path) -> std::io::Result<Self> {
        let mut t = PromptTemplates::default();
        for (name, slot) in [
            ("system.txt", &mut t.system),
            ("evaluate.txt", &mut t.evaluate),
            ("envision.txt", &mut t.envision),
            ("check_found.txt", &mut t.check_found),
        ] {
            let path = dir.join(name);
            if path.exists() {
                *slot = std::fs::read_to_string(path)?.trim_end().to_string();
            }
        }
        Ok(t)
    }

    pub fn render(template: &str, goal: Option<&GoalSpec>, scene: &SceneDescription) -> String {
        let goal_text = goal.map(|g| g.text.as_str()).unwrap_or("");
        template.replace("{goal}", goal_text).replace("{scene}", &scene.text)
    }
}

pub struct HttpTransport {
    agent: ureq::Agent,
    url: String,
    api_key: Option<String>,
}

impl HttpTransport {
    pub fn new(url: impl Into<String>, api_key: Option<String>, timeout: Duration) -> Self {
        let config = ureq::Agent::config_builder().timeout_global(Some(timeout)).http_status_as_error(false).build();
        HttpTransport { agent: ureq::Agent::new_with_config(config), url: url.into(), api_key }
    }
}

impl Transport for HttpTransport {
    fn post(&self, body: &str) -> Result<String, TransportError> {
        let mut req = self.agent.post(&self.url).header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", format!("Bearer {key}"));
        }
        let mut resp = req.send(body).map_err(|e| TransportError::Transient(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(|e| TransportError::Transient(e.to_string()))?;
        match status {
            200..=299 => Ok(text),
            429 | 500..=599 => Err(TransportError::Transient(format!("HTTP {status}"))),
            _ => Err(TransportError::Fatal(format!("HTTP {status}: {text}"))),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct Exchange {
    request: Value,
    response: String,
}

/// Appends every successful exchange to a JSONL file.
pub struct RecordingTransport<T> {
    inner: T,
    out: Mutex<File>,
}

impl<T: Transport> RecordingTransport<T> {
    pub fn new(inner: T, path: &Path) -> std::io::Result<Self> {
        let out = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(RecordingTransport { inner, out: Mutex::new(out) })
    }
}

impl<T: Transport> Transport for RecordingTransport<T> {
    fn post(&self, body: &str) -> Result<String, TransportError> {
        let response = self.inner.post(body)?;
        let request = serde_json::from_str(body).unwrap_or(Value::String(body.to_string()));
        let line = serde_json::to_string(&Exchange { request, response: response.clone() })
            .map_err(|e| TransportError::Fatal(e.to_string()))?;
        let mut out = self.out.lock().unwrap_or_else(|p| p.into_inner());
        writeln!(out, "{line}").map_err(|e| TransportError::Fatal(e.to_string()))?;
        Ok(response)
    }
}

/// Serves recorded responses for exactly matching requests, first in first out.
pub struct ReplayTransport {
    responses: Mutex<HashMap<String, VecDeque<String>>>,
}

fn canonical(body: &str) -> String {
    serde_json::from_str::<Value>(body).map(|v| v.to_string()).unwrap_or_else(|_| body.to_string())
}

impl ReplayTransport {
    pub fn load(path: &Path) -> std::io::Result<Self> {
        let reader = BufReader::new(File::open(path)?);
        let mut responses: HashMap<String, VecDeque<String>> = HashMap::new();
        for line in reader.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let ex: Exchange =
                serde_json::from_str(&line).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
            responses.entry(ex.request.to_string()).or_default().push_back(ex.response);
        }
        Ok(ReplayTransport { responses: Mutex::new(responses) })
    }
}

impl Transport for ReplayTransport {
    fn post(&self, body: &str) -> Result<String, TransportError> {
        let mut map = self.responses.lock().unwrap_or_else(|p| p.into_inner());
        map.get_mut(&canonical(body))
            .and_then(VecDeque::pop_front)
            .ok_or_else(|| TransportError::Fatal("no recorded response for request".into()))
    }
}

/// Counting semaphore bounding concurrent requests.
struct Gate {
    free: Mutex<usize>,
    cv: Condvar,
}

struct Permit<'a>(&'a Gate);

impl Gate {
    fn new(n: usize) -> Self {
        Gate { free: Mutex::new(n.max(1)), cv: Condvar::new() }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().unwrap_or_else(|p| p.into_inner());
        while *free == 0 {
            free = self.cv.wait(free).unwrap_or_else(|p| p.into_inner());
        }
        *free -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|p| p.into_inner()) += 1;
        self.0.cv.notify_one();
    }
}

#[derive(Debug, Error)]
pub enum RemoteSetupError {
    #[error("environment variable {0} is not set")]
    MissingKey(String),
    #[error("cannot open {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub struct RemoteBackend {
    transport: Arc<dyn Transport>,
    config: RemoteConfig,
    prompts: PromptTemplates,
    gate: Gate,
    edge_length: f64,
}

impl RemoteBackend {
    pub fn with_transport(
        transport: Arc<dyn Transport>,
        config: RemoteConfig,
        prompts: PromptTemplates,
        edge_length: f64,
    ) -> Self {
        let gate = Gate::new(config.max_in_flight);
        RemoteBackend { transport, config, prompts, gate, edge_length }
    }

    /// Builds the transport the config asks for: replay, HTTP, or HTTP with recording.
    pub fn from_config(config: RemoteConfig, edge_length: f64) -> Result<Self, RemoteSetupError> {
        let io = |path: &Path| {
            let path = path.display().to_string();
            move |source| RemoteSetupError::Io { path, source }
        };
        let prompts = match &config.prompts_dir {
            Some(dir) => PromptTemplates::load_dir(dir).map_err(io(dir))?,
            None => PromptTemplates::default(),
        };
        let transport: Arc<dyn Transport> = if let Some(path) = &config.replay_path {
            Arc::new(ReplayTransport::load(path).map_err(io(path))?)
        } else {
            let key = std::env::var(&config.api_key_env)
                .map_err(|_| RemoteSetupError::MissingKey(config.api_key_env.clone()))?;
            let http = HttpTransport::new(&config.url, Some(key), Duration::from_secs(config.timeout_secs));
            match &config.record_path {
                Some(path) => Arc::new(RecordingTransport::new(http, path).map_err(io(path))?),
                None => Arc::new(http),
            }
        };
        Ok(Self::with_transport(transport, config, prompts, edge_length))
    }

    fn request_body(&self, model: &str, messages: &[Value]) -> String {
        json!({ "model": model, "messages": messages, "temperature": self.config.temperature }).to_string()
    }

    /// One completion, retrying transient failures with exponential backoff.
    fn complete(&self, model: &str, messages: &[Value]) -> Result<String, FailureKind> {
        let body = self.request_body(model, messages);
        let _permit = self.gate.acquire();
        let mut attempt = 0;
        let raw = loop {
            match self.transport.post(&body) {
                Ok(raw) => break raw,
                Err(TransportError::Transient(msg)) if attempt < self.config.max_retries => {
                    log::warn!("transient failure ({msg}); retry {}", attempt + 1);
                    std::thread::sleep(self.config.backoff(attempt));
                    attempt += 1;
                }
                Err(TransportError::Transient(msg) | TransportError::Fatal(msg)) => {
                    return Err(FailureKind::Unavailable(msg))
                }
            }
        };
        let v: Value =
            serde_json::from_str(&raw).map_err(|e| FailureKind::Unavailable(format!("malformed response: {e}")))?;
        v["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| FailureKind::Unavailable("response has no message content".into()))
    }

    /// Asks once, and once more with `reprompt` appended if `parse` rejects the reply.
    fn ask<T>(
        &self,
        model: &str,
        user: String,
        reprompt: &str,
        parse: impl Fn(&str) -> Option<T>,
    ) -> Result<(T, f64), CallFailure> {
        let start = Instant::now();
        let fail = |kind| CallFailure { kind, latency: start.elapsed().as_secs_f64() };
        let mut messages =
            vec![json!({"role": "system", "content": self.prompts.system}), json!({"role": "user", "content": user})];
        let first = self.complete(model, &messages).map_err(fail)?;
        if let Some(v) = parse(&first) {
            return Ok((v, start.elapsed().as_secs_f64()));
        }
        messages.push(json!({"role": "assistant", "content": first}));
        messages.push(json!({"role": "user", "content": reprompt}));
        let second = self.complete(model, &messages).map_err(fail)?;
        match parse(&second) {
            Some(v) => Ok((v, start.elapsed().as_secs_f64())),
            None => Err(fail(FailureKind::Unparseable(second))),
        }
    }
}

impl ReasoningBackend for RemoteBackend {
    fn evaluate(&self, goal: &GoalSpec, scene: &SceneDescription, _key: u64) -> Result<EvalScore, CallFailure> {
        let user = PromptTemplates::render(&self.prompts.evaluate, Some(goal), scene);
        let (v, latency) =
            self.ask(&self.config.evaluator_model, user, "Reply with a single integer from 1 to 5.", parse_score)?;
        Ok(EvalScore::new(v as i64, latency))
    }

    fn envision(&self, scene: &SceneDescription, _key: u64) -> Result<Envisioned, CallFailure> {
        let user = PromptTemplates::render(&self.prompts.envision, None, scene);
        let non_empty = |s: &str| Some(s.trim().to_string()).filter(|t| !t.is_empty());
        let (text, latency) =
            self.ask(&self.config.visionary_model, user, "Describe the scene in one or two sentences.", non_empty)?;
        let position = scene.viewpoint().add(Point::polar(scene.heading, self.edge_length));
        let imagined = SceneDescription {
            source_pose: Pose::new(position, scene.heading),
            heading_index: scene.heading_index,
            heading: scene.heading,
            region: None,
            text,
            mentioned_objects: Vec::new(),
            blocked: false,
        };
        Ok(Envisioned { scene: imagined, latency })
    }

    fn check_found(&self, goal: &GoalSpec, scene: &SceneDescription, _key: u64) -> Result<Verdict, CallFailure> {
        let user = PromptTemplates::render(&self.prompts.check_found, Some(goal), scene);
        let model = self.config.checker_model.as_deref().unwrap_or(&self.config.evaluator_model);
        let (found, latency) = self.ask(model, user, "Reply with yes or no.", parse_verdict)?;
        Ok(Verdict { found, latency })
    }
}
