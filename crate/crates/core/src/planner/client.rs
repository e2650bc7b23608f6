//! Chat-completion transport and the replay store used for offline runs.

use std::fs;
use std::path::PathBuf;
use std::thread;
use std::time::Duration;

use base64::Engine as _;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::prompt::Prompt;
use super::PlanText;

pub const ENDPOINT_ENV: &str = "RAVA_LLM_ENDPOINT";
pub const API_KEY_ENV: &str = "RAVA_LLM_API_KEY";

#[derive(Debug, Error)]
pub enum CompletionError {
    #[error("request failed after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("endpoint answered HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("no replay fixture for prompt {hash} in {dir}")]
    Fixture { hash: String, dir: PathBuf },
    #[error("unexpected response: {0}")]
    Response(String),
    #[error("planner configuration: {0}")]
    Config(String),
}

pub trait Completer {
    fn complete(&self, prompt: &Prompt) -> Result<PlanText, CompletionError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlannerMode {
    Llm,
    Heuristic,
}

#[derive(Debug, Clone)]
pub struct PlannerConfig {
    pub mode: PlannerMode,
    pub endpoint: Option<String>,
    pub model_name: String,
    pub temperature: f64,
    pub timeout: Duration,
    pub max_retries: u32,
    pub multimodal: bool,
    pub api_key: Option<String>,
    pub replay_dir: Option<PathBuf>,
    /// First retry delay; doubled on each further attempt.
    pub backoff: Duration,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            mode: PlannerMode::Heuristic,
            endpoint: None,
            model_name: "gpt-4o".into(),
            temperature: 0.0,
            timeout: Duration::from_secs(60),
            max_retries: 3,
            multimodal: false,
            api_key: None,
            replay_dir: None,
            backoff: Duration::from_millis(500),
        }
    }
}

impl PlannerConfig {
    /// Defaults with endpoint and key taken from the environment.
    pub fn from_env() -> Self {
        let non_empty = |k: &str| std::env::var(k).ok().filter(|v| !v.trim().is_empty());
        Self {
            endpoint: non_empty(ENDPOINT_ENV),
            api_key: non_empty(API_KEY_ENV),
            ..Self::default()
        }
    }
}

/// Hex SHA-256 of the prompt text; names replay fixtures.
pub fn prompt_hash(prompt: &Prompt) -> String {
    let digest = Sha256::digest(prompt.text.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Plan texts keyed by prompt hash, one `<hash>.txt` per prompt.
#[derive(Debug, Clone)]
pub struct ReplayStore {
    dir: PathBuf,
}

impl ReplayStore {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn path_for(&self, prompt: &Prompt) -> PathBuf {
        self.dir.join(format!("{}.txt", prompt_hash(prompt)))
    }

    pub fn save(&self, prompt: &Prompt, text: &PlanText) -> std::io::Result<PathBuf> {
        fs::create_dir_all(&self.dir)?;
        let path = self.path_for(prompt);
        fs::write(&path, text.as_str())?;
        Ok(path)
    }
}

impl Completer for ReplayStore {
    fn complete(&self, prompt: &Prompt) -> Result<PlanText, CompletionError> {
        let path = self.path_for(prompt);
        fs::read_to_string(&path)
            .map(PlanText)
            .map_err(|_| CompletionError::Fixture {
                hash: prompt_hash(prompt),
                dir: self.dir.clone(),
            })
    }
}

/// OpenAI-compatible `POST <endpoint>/chat/completions` client.
pub struct ChatClient {
    agent: ureq::Agent,
    url: String,
    cfg: PlannerConfig,
}

impl ChatClient {
    pub fn new(cfg: &PlannerConfig) -> Result<Self, CompletionError> {
        let endpoint = cfg.endpoint.as_deref().ok_or_else(|| {
            CompletionError::Config(format!("no endpoint; set {ENDPOINT_ENV} or pass one"))
        })?;
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(cfg.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(Self {
            agent,
            url: format!("{}/chat/completions", endpoint.trim_end_matches('/')),
            cfg: cfg.clone(),
        })
    }

    fn body(&self, prompt: &Prompt) -> Value {
        let content = if self.cfg.multimodal && !prompt.images.is_empty() {
            let mut parts = vec![json!({"type": "text", "text": prompt.text})];
            for k in &prompt.images {
                let b64 = base64::engine::general_purpose::STANDARD.encode(&k.png);
                parts.push(json!({
                    "type": "image_url",
                    "image_url": {"url": format!("data:image/png;base64,{b64}")}
                }));
            }
            Value::Array(parts)
        } else {
            Value::String(prompt.text.clone())
        };
        json!({
            "model": self.cfg.model_name,
            "messages": [{"role": "user", "content": content}],
            "temperature": self.cfg.temperature,
        })
    }

    fn attempt(&self, body: &Value) -> Result<(u16, String), String> {
        let mut req = self.agent.post(&self.url).header("Content-Type", "application/json");
        if let Some(key) = &self.cfg.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req.send(body.to_string()).map_err(|e| e.to_string())?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(|e| e.to_string())?;
        Ok((status, text))
    }
}

fn extract_content(body: &str) -> Result<String, CompletionError> {
    let v: Value =
        serde_json::from_str(body).map_err(|e| CompletionError::Response(e.to_string()))?;
    v.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(String::from)
        .ok_or_else(|| CompletionError::Response("missing choices[0].message.content".into()))
}

impl Completer for ChatClient {
    fn complete(&self, prompt: &Prompt) -> Result<PlanText, CompletionError> {
        let body = self.body(prompt);
        let attempts = self.cfg.max_retries + 1;
        let mut last = String::new();
        for n in 0..attempts {
            if n > 0 {
                thread::sleep(self.cfg.backoff * 2u32.saturating_pow(n - 1));
            }
            match self.attempt(&body) {
                Ok((200..=299, text)) => return extract_content(&text).map(PlanText),
                Ok((status, text)) if status == 429 || status >= 500 => {
                    last = format!("HTTP {status}: {text}");
                }
                Ok((status, text)) => return Err(CompletionError::Http { status, body: text }),
                Err(e) => last = e,
            }
        }
        Err(CompletionError::Transport {
            attempts,
            message: last,
        })
    }
}

/// Completes through the replay store when one is configured, else over HTTP.
pub fn complete(cfg: &PlannerConfig, prompt: &Prompt) -> Result<PlanText, CompletionError> {
    if let Some(dir) = &cfg.replay_dir {
        return ReplayStore::new(dir).complete(prompt);
    }
    ChatClient::new(cfg)?.complete(prompt)
}
