//! Chat-completion client: request/response wire types, usage accounting and
//! a blocking HTTP client with bounded exponential backoff.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Environment variable holding the bearer token for the chat endpoint.
pub const API_KEY_ENV: &str = "CAVE_API_KEY";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self { role: Role::System, content: content.into() }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self { role: Role::User, content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self { role: Role::Assistant, content: content.into() }
    }
}

/// Token counts as reported by the endpoint plus locally measured latency.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct UsageRecord {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub total_tokens: u64,
    /// Wall-clock seconds around the whole call, retries included.
    pub latency_secs: f64,
}

impl UsageRecord {
    pub fn new(prompt_tokens: u64, completion_tokens: u64, latency_secs: f64) -> Self {
        Self {
            prompt_tokens,
            completion_tokens,
            total_tokens: prompt_tokens + completion_tokens,
            latency_secs,
        }
    }
}

impl std::ops::Add for UsageRecord {
    type Output = UsageRecord;

    fn add(self, rhs: UsageRecord) -> UsageRecord {
        UsageRecord {
            prompt_tokens: self.prompt_tokens + rhs.prompt_tokens,
            completion_tokens: self.completion_tokens + rhs.completion_tokens,
            total_tokens: self.total_tokens + rhs.total_tokens,
            latency_secs: self.latency_secs + rhs.latency_secs,
        }
    }
}

impl std::iter::Sum for UsageRecord {
    fn sum<I: Iterator<Item = UsageRecord>>(iter: I) -> Self {
        iter.fold(UsageRecord::default(), |a, b| a + b)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub content: String,
    pub usage: UsageRecord,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ChatError {
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("endpoint rejected the request with status {status}: {body}")]
    Rejected { status: u16, body: String },
    #[error("malformed response: {0}")]
    Protocol(String),
}

/// Anything that can answer a list of chat messages.
pub trait ChatClient: Send + Sync {
    fn model(&self) -> &str;
    fn complete(&self, messages: &[ChatMessage]) -> Result<Completion, ChatError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    /// Retries after the first attempt.
    pub max_retries: u32,
    pub base_delay_ms: u64,
    pub max_delay_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { max_retries: 3, base_delay_ms: 200, max_delay_ms: 10_000 }
    }
}

impl RetryPolicy {
    pub fn delay(&self, retry: u32) -> Duration {
        let factor = 1u64.checked_shl(retry).unwrap_or(u64::MAX);
        Duration::from_millis(self.base_delay_ms.saturating_mul(factor).min(self.max_delay_ms))
    }
}

#[derive(Debug, Serialize)]
struct WireRequest<'a> {
    model: &'a str,
    messages: &'a [ChatMessage],
    temperature: f64,
}

#[derive(Debug, Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
    #[serde(default)]
    usage: Option<WireUsage>,
}

#[derive(Debug, Deserialize)]
struct WireChoice {
    message: WireMessage,
}

#[derive(Debug, Deserialize)]
struct WireMessage {
    content: Option<String>,
}

#[derive(Debug, Deserialize)]
struct WireUsage {
    #[serde(default)]
    prompt_tokens: u64,
    #[serde(default)]
    completion_tokens: u64,
    #[serde(default)]
    total_tokens: Option<u64>,
}

/// Parses a chat-completion response body into content and token counts.
pub fn parse_response_body(body: &str) -> Result<(String, UsageRecord), ChatError> {
    let wire: WireResponse =
        serde_json::from_str(body).map_err(|e| ChatError::Protocol(e.to_string()))?;
    let content = wire
        .choices
        .into_iter()
        .next()
        .and_then(|c| c.message.content)
        .ok_or_else(|| ChatError::Protocol("response has no message content".into()))?;
    let usage = wire.usage.map_or_else(UsageRecord::default, |u| UsageRecord {
        prompt_tokens: u.prompt_tokens,
        completion_tokens: u.completion_tokens,
        total_tokens: u.total_tokens.unwrap_or(u.prompt_tokens + u.completion_tokens),
        latency_secs: 0.0,
    });
    Ok((content, usage))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointConfig {
    /// Full URL of the chat-completions route.
    pub url: String,
    pub model: String,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
    #[serde(default)]
    pub retry: RetryPolicy,
}

fn default_timeout_secs() -> u64 {
    120
}

impl EndpointConfig {
    pub fn new(url: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            url: url.into(),
            model: model.into(),
            temperature: 0.0,
            timeout_secs: default_timeout_secs(),
            retry: RetryPolicy::default(),
        }
    }
}

/// Blocking HTTP client. Clones share one connection pool.
#[derive(Debug, Clone)]
pub struct HttpChatClient {
    config: EndpointConfig,
    api_key: Option<String>,
    http: reqwest::blocking::Client,
}

impl HttpChatClient {
    /// Builds a client, reading credentials from [`API_KEY_ENV`] if set.
    pub fn new(config: EndpointConfig) -> Result<Self, ChatError> {
        let api_key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
        Self::with_api_key(config, api_key)
    }

    pub fn with_api_key(config: EndpointConfig, api_key: Option<String>) -> Result<Self, ChatError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| ChatError::Transport { attempts: 0, message: e.to_string() })?;
        Ok(Self { config, api_key, http })
    }

    pub fn config(&self) -> &EndpointConfig {
        &self.config
    }

    fn attempt(&self, messages: &[ChatMessage]) -> Result<(String, UsageRecord), Attempt> {
        let request = WireRequest {
            model: &self.config.model,
            messages,
            temperature: self.config.temperature,
        };
        let mut builder = self.http.post(&self.config.url).json(&request);
        if let Some(key) = &self.api_key {
            builder = builder.bearer_auth(key);
        }
        let response = builder.send().map_err(|e| Attempt::Retryable(e.to_string()))?;
        let status = response.status();
        let body = response.text().map_err(|e| Attempt::Retryable(e.to_string()))?;
        if !status.is_success() {
            let code = status.as_u16();
            return Err(if code == 408 || code == 429 || status.is_server_error() {
                Attempt::Retryable(format!("status {code}: {body}"))
            } else {
                Attempt::Fatal(ChatError::Rejected { status: code, body })
            });
        }
        parse_response_body(&body).map_err(Attempt::Fatal)
    }
}

enum Attempt {
    Retryable(String),
    Fatal(ChatError),
}

impl ChatClient for HttpChatClient {
    fn model(&self) -> &str {
        &self.config.model
    }

    fn complete(&self, messages: &[ChatMessage]) -> Result<Completion, ChatError> {
        let policy = self.config.retry;
        let started = Instant::now();
        let mut attempts = 0;
        loop {
            attempts += 1;
            match self.attempt(messages) {
                Ok((content, mut usage)) => {
                    usage.latency_secs = started.elapsed().as_secs_f64();
                    return Ok(Completion { content, usage });
                }
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Retryable(message)) => {
                    if attempts > policy.max_retries {
                        return Err(ChatError::Transport { attempts, message });
                    }
                    let wait = policy.delay(attempts - 1);
                    tracing::warn!(attempts, ?wait, %message, "chat request failed, retrying");
                    std::thread::sleep(wait);
                }
            }
        }
    }
}
