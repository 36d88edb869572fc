//! Chat-completion client.
//!
//! Request body: `{"model", "messages": [{"role", "content"}], "temperature"}`
//! posted to `{base_url}/chat/completions` with a bearer token. The reply is
//! read from `choices[0].message.content`; `usage.prompt_tokens` and
//! `usage.completion_tokens` are used when present.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::backend::{
    count_tokens, AgentBackend, AgentRequest, AgentResponse, BackendIdentity, BackendKind, ChatMessage,
};
use super::{ProtocolError, Result};

pub const DEFAULT_TOKEN_ENV: &str = "GROUNDLAB_API_TOKEN";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HttpChatConfig {
    pub base_url: String,
    pub model: String,
    #[serde(default = "default_token_env")]
    pub token_env: String,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default = "default_backoff")]
    pub backoff_ms: u64,
    /// Requests allowed over the whole run, retries included.
    #[serde(default)]
    pub request_budget: Option<usize>,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
    /// Minimum spacing between request starts.
    #[serde(default)]
    pub min_interval_ms: u64,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
}

fn default_token_env() -> String {
    DEFAULT_TOKEN_ENV.into()
}

fn default_retries() -> u32 {
    3
}

fn default_backoff() -> u64 {
    250
}

fn default_in_flight() -> usize {
    4
}

fn default_timeout() -> u64 {
    60
}

impl HttpChatConfig {
    pub fn new(base_url: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            model: model.into(),
            token_env: default_token_env(),
            temperature: 0.0,
            max_retries: default_retries(),
            backoff_ms: default_backoff(),
            request_budget: None,
            max_in_flight: default_in_flight(),
            min_interval_ms: 0,
            timeout_secs: default_timeout(),
        }
    }
}

/// Counting semaphore.
struct Slots {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Slots {
    fn acquire(&self) {
        let mut f = self.free.lock().expect("slot lock");
        while *f == 0 {
            f = self.cv.wait(f).expect("slot lock");
        }
        *f -= 1;
    }

    fn release(&self) {
        *self.free.lock().expect("slot lock") += 1;
        self.cv.notify_one();
    }
}

pub struct HttpChatBackend {
    cfg: HttpChatConfig,
    token: String,
    client: reqwest::blocking::Client,
    sent: AtomicUsize,
    slots: Slots,
    next_start: Mutex<Instant>,
}

enum Attempt {
    Done(String, Option<(u64, u64)>),
    Retry(String),
    Fatal(ProtocolError),
}

impl HttpChatBackend {
    /// Reads the bearer token from `cfg.token_env`; a missing or empty
    /// variable is a configuration error.
    pub fn from_env(cfg: HttpChatConfig) -> Result<Self> {
        let token = std::env::var(&cfg.token_env).ok();
        Self::with_token(cfg, token)
    }

    pub fn with_token(cfg: HttpChatConfig, token: Option<String>) -> Result<Self> {
        let token = token
            .filter(|t| !t.trim().is_empty())
            .ok_or_else(|| ProtocolError::Config(format!("environment variable {} is not set", cfg.token_env)))?;
        if cfg.base_url.trim().is_empty() || cfg.model.trim().is_empty() {
            return Err(ProtocolError::Config("http backend needs base_url and model".into()));
        }
        if cfg.max_in_flight == 0 {
            return Err(ProtocolError::Config("max_in_flight must be at least 1".into()));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(cfg.timeout_secs))
            .build()
            .map_err(|e| ProtocolError::Config(format!("http client: {e}")))?;
        Ok(Self {
            slots: Slots {
                free: Mutex::new(cfg.max_in_flight),
                cv: Condvar::new(),
            },
            cfg,
            token,
            client,
            sent: AtomicUsize::new(0),
            next_start: Mutex::new(Instant::now()),
        })
    }

    pub fn requests_sent(&self) -> usize {
        self.sent.load(Ordering::SeqCst)
    }

    fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.cfg.base_url.trim_end_matches('/'))
    }

    fn take_budget(&self) -> Result<()> {
        let n = self.sent.fetch_add(1, Ordering::SeqCst);
        match self.cfg.request_budget {
            Some(b) if n >= b => Err(ProtocolError::BudgetExhausted),
            _ => Ok(()),
        }
    }

    fn pace(&self) {
        if self.cfg.min_interval_ms == 0 {
            return;
        }
        let wait = {
            let mut next = self.next_start.lock().expect("pace lock");
            let now = Instant::now();
            let start = (*next).max(now);
            *next = start + Duration::from_millis(self.cfg.min_interval_ms);
            start - now
        };
        std::thread::sleep(wait);
    }

    fn attempt(&self, body: &serde_json::Value) -> Attempt {
        self.slots.acquire();
        let res = self
            .client
            .post(self.endpoint())
            .bearer_auth(&self.token)
            .json(body)
            .send();
        self.slots.release();
        let resp = match res {
            Ok(r) => r,
            Err(e) => return Attempt::Retry(format!("transport: {e}")),
        };
        let status = resp.status();
        if status.as_u16() == 429 || status.is_server_error() {
            return Attempt::Retry(format!("status {status}"));
        }
        if status.as_u16() == 401 || status.as_u16() == 403 {
            return Attempt::Fatal(ProtocolError::BackendUnavailable(format!("status {status}")));
        }
        if !status.is_success() {
            return Attempt::Fatal(ProtocolError::Transport(format!("status {status}")));
        }
        let v: serde_json::Value = match resp.json() {
            Ok(v) => v,
            Err(e) => return Attempt::Fatal(ProtocolError::MalformedResponse(e.to_string())),
        };
        let Some(text) = v.pointer("/choices/0/message/content").and_then(|c| c.as_str()) else {
            return Attempt::Fatal(ProtocolError::MalformedResponse(
                "missing choices[0].message.content".into(),
            ));
        };
        let usage = match (
            v.pointer("/usage/prompt_tokens").and_then(|t| t.as_u64()),
            v.pointer("/usage/completion_tokens").and_then(|t| t.as_u64()),
        ) {
            (Some(a), Some(b)) => Some((a, b)),
            _ => None,
        };
        Attempt::Done(text.to_string(), usage)
    }
}

impl AgentBackend for HttpChatBackend {
    fn identity(&self) -> BackendIdentity {
        BackendIdentity {
            name: "http-chat".into(),
            kind: BackendKind::HttpChat,
            model: Some(self.cfg.model.clone()),
            deterministic: false,
        }
    }

    fn complete(&self, _req: &AgentRequest, messages: &[ChatMessage]) -> Result<AgentResponse> {
        let body = json!({
            "model": self.cfg.model,
            "messages": messages,
            "temperature": self.cfg.temperature,
        });
        let mut last_err = String::new();
        for attempt in 0..=self.cfg.max_retries {
            if attempt > 0 {
                std::thread::sleep(Duration::from_millis(self.cfg.backoff_ms << (attempt - 1).min(10)));
            }
            self.take_budget()?;
            self.pace();
            match self.attempt(&body) {
                Attempt::Done(text, usage) => {
                    let (tokens_in, tokens_out) = usage.unwrap_or_else(|| {
                        (
                            messages.iter().map(|m| count_tokens(&m.content)).sum(),
                            count_tokens(&text),
                        )
                    });
                    return Ok(AgentResponse {
                        text,
                        tokens_in,
                        tokens_out,
                        attempts: attempt + 1,
                    });
                }
                Attempt::Retry(e) => {
                    tracing::debug!(attempt, error = %e, "retrying chat request");
                    last_err = e;
                }
                Attempt::Fatal(e) => return Err(e),
            }
        }
        Err(ProtocolError::Transport(format!(
            "gave up after {} attempts: {last_err}",
            self.cfg.max_retries + 1
        )))
    }
}
