//! Chat-completion backends.
//!
//! Everything that talks to a model goes through [`ChatBackend`]. The HTTP
//! backend speaks the OpenAI-compatible wire format; the scripted backend
//! answers from an ordered rule table and records every call, which is how
//! the offline experiments and tests run.

mod http;
mod replay;
mod scripted;
pub mod stub;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use http::HttpBackend;
pub use replay::{RecordingBackend, ReplayBackend, SessionRecord};
pub use scripted::{CallRecord, Condition, Rule, ScriptTable, ScriptedBackend};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

/// Joins messages into the single text that scripted matchers search.
pub fn render_transcript(messages: &[ChatMessage]) -> String {
    let mut out = String::new();
    for m in messages {
        let role = match m.role {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        };
        out.push_str(role);
        out.push_str(": ");
        out.push_str(&m.content);
        out.push('\n');
    }
    out
}

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("transport error{}: {message}", status.map(|s| format!(" (HTTP {s})")).unwrap_or_default())]
    Transport { status: Option<u16>, message: String },
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("replay miss: no recorded response for this request")]
    ReplayMiss,
    #[error("invalid backend config: {0}")]
    Config(String),
    #[error("session file error: {0}")]
    Session(String),
}

impl LlmError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, LlmError::Transport { .. })
    }
}

pub trait ChatBackend: Send + Sync {
    fn query(&self, messages: &[ChatMessage], temperature: f64) -> Result<String, LlmError>;
}

impl<B: ChatBackend + ?Sized> ChatBackend for Arc<B> {
    fn query(&self, messages: &[ChatMessage], temperature: f64) -> Result<String, LlmError> {
        (**self).query(messages, temperature)
    }
}

impl<B: ChatBackend + ?Sized> ChatBackend for &B {
    fn query(&self, messages: &[ChatMessage], temperature: f64) -> Result<String, LlmError> {
        (**self).query(messages, temperature)
    }
}

/// Adapts a closure into a backend; handy for fault injection in tests.
pub struct FnBackend<F>(pub F);

impl<F> ChatBackend for FnBackend<F>
where
    F: Fn(&[ChatMessage], f64) -> Result<String, LlmError> + Send + Sync,
{
    fn query(&self, messages: &[ChatMessage], temperature: f64) -> Result<String, LlmError> {
        (self.0)(messages, temperature)
    }
}

/// Exponential backoff for retryable transport errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub base_delay_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            attempts: 3,
            base_delay_ms: 250,
        }
    }
}

impl RetryPolicy {
    pub fn immediate(attempts: u32) -> Self {
        RetryPolicy {
            attempts,
            base_delay_ms: 0,
        }
    }

    pub fn delay(&self, attempt: u32) -> std::time::Duration {
        std::time::Duration::from_millis(self.base_delay_ms.saturating_mul(1u64 << attempt.min(16)))
    }
}

/// Runs one query, retrying retryable errors up to `policy.attempts` times in total.
pub fn query_with_retry(
    backend: &dyn ChatBackend,
    messages: &[ChatMessage],
    temperature: f64,
    policy: RetryPolicy,
) -> Result<String, LlmError> {
    let attempts = policy.attempts.max(1);
    let mut attempt = 0;
    loop {
        match backend.query(messages, temperature) {
            Ok(text) => return Ok(text),
            Err(e) if e.is_retryable() && attempt + 1 < attempts => {
                log::warn!("query attempt {} failed: {e}", attempt + 1);
                std::thread::sleep(policy.delay(attempt));
                attempt += 1;
            }
            Err(e) => return Err(e),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Http,
    Scripted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub endpoint_url: String,
    pub model_name: String,
    /// Name of the environment variable holding the API key; the key itself
    /// never appears in config or logs.
    pub api_key_env_var: String,
    pub timeout_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub script: Option<ScriptTable>,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            kind: BackendKind::Scripted,
            endpoint_url: "http://127.0.0.1:8000".into(),
            model_name: "gpt-3.5-turbo".into(),
            api_key_env_var: "OPENAI_API_KEY".into(),
            timeout_s: 60.0,
            script: None,
        }
    }
}

impl BackendConfig {
    pub fn scripted(table: ScriptTable) -> Self {
        BackendConfig {
            kind: BackendKind::Scripted,
            script: Some(table),
            ..BackendConfig::default()
        }
    }

    pub fn http(endpoint_url: impl Into<String>, model_name: impl Into<String>) -> Self {
        BackendConfig {
            kind: BackendKind::Http,
            endpoint_url: endpoint_url.into(),
            model_name: model_name.into(),
            ..BackendConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        match self.kind {
            BackendKind::Http => {
                if self.endpoint_url.trim().is_empty() {
                    return Err(LlmError::Config("http backend requires endpoint_url".into()));
                }
                if self.api_key_env_var.trim().is_empty() {
                    return Err(LlmError::Config("http backend requires api_key_env_var".into()));
                }
                if self.timeout_s.is_nan() || self.timeout_s <= 0.0 {
                    return Err(LlmError::Config("timeout_s must be positive".into()));
                }
            }
            BackendKind::Scripted => {
                if self.script.is_none() {
                    return Err(LlmError::Config("scripted backend requires a script".into()));
                }
            }
        }
        Ok(())
    }

    pub fn build(&self) -> Result<Arc<dyn ChatBackend>, LlmError> {
        self.validate()?;
        Ok(match self.kind {
            BackendKind::Http => Arc::new(HttpBackend::from_config(self)?),
            BackendKind::Scripted => Arc::new(ScriptedBackend::new(
                self.script.clone().expect("validated"),
            )),
        })
    }
}
