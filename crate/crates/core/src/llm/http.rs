use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{BackendConfig, ChatBackend, ChatMessage, LlmError};

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: &'a [ChatMessage],
    temperature: f64,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ResponseMessage,
}

#[derive(Deserialize)]
struct ResponseMessage {
    content: Option<String>,
}

/// Blocking client for `POST {endpoint}/v1/chat/completions`.
pub struct HttpBackend {
    url: String,
    model: String,
    api_key: Option<String>,
    agent: ureq::Agent,
}

impl HttpBackend {
    pub fn new(endpoint_url: &str, model: &str, api_key: Option<String>, timeout: Duration) -> Self {
        let agent = ureq::AgentBuilder::new().timeout(timeout).build();
        HttpBackend {
            url: format!("{}/v1/chat/completions", endpoint_url.trim_end_matches('/')),
            model: model.to_string(),
            api_key,
            agent,
        }
    }

    /// Reads the API key from the configured environment variable. A missing
    /// variable is allowed so that local keyless servers work.
    pub fn from_config(cfg: &BackendConfig) -> Result<Self, LlmError> {
        let api_key = std::env::var(&cfg.api_key_env_var).ok().filter(|k| !k.is_empty());
        if api_key.is_none() {
            log::warn!(
                "environment variable {} is not set; sending requests without authorization",
                cfg.api_key_env_var
            );
        }
        Ok(HttpBackend::new(
            &cfg.endpoint_url,
            &cfg.model_name,
            api_key,
            Duration::from_secs_f64(cfg.timeout_s),
        ))
    }

    pub fn url(&self) -> &str {
        &self.url
    }
}

impl ChatBackend for HttpBackend {
    fn query(&self, messages: &[ChatMessage], temperature: f64) -> Result<String, LlmError> {
        let body = ChatRequest {
            model: &self.model,
            messages,
            temperature,
        };
        let mut req = self.agent.post(&self.url).set("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            req = req.set("Authorization", &format!("Bearer {key}"));
        }
        let resp = match req.send_json(&body) {
            Ok(r) => r,
            Err(ureq::Error::Status(code, r)) => {
                let text = r.into_string().unwrap_or_default();
                return Err(LlmError::Transport {
                    status: Some(code),
                    message: text.chars().take(200).collect(),
                });
            }
            Err(ureq::Error::Transport(t)) => {
                return Err(LlmError::Transport {
                    status: None,
                    message: t.to_string(),
                })
            }
        };
        let text = resp.into_string().map_err(|e| LlmError::Transport {
            status: None,
            message: e.to_string(),
        })?;
        let parsed: ChatResponse =
            serde_json::from_str(&text).map_err(|e| LlmError::Protocol(format!("bad response body: {e}")))?;
        parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| LlmError::Protocol("response has no choices[0].message.content".into()))
    }
}
