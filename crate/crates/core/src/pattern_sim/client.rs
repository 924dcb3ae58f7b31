//! Provider-agnostic chat-completion client used for pattern simulation.

use std::time::Duration;

use serde_json::json;
use thiserror::Error;

use super::source::GenerationKind;
use crate::error::{Error, Result};

pub const DEFAULT_MODEL: &str = "gpt-3.5-turbo-0613";
pub const DEFAULT_ENDPOINT: &str = "https://api.openai.com/v1/chat/completions";
pub const DEFAULT_API_KEY_ENV: &str = "LLM_API_KEY";

/// One generation call: the rendered prompt as the system message and the
/// sentence to rewrite as the user message.
#[derive(Debug, Clone, Copy)]
pub struct ChatRequest<'a> {
    pub system: &'a str,
    pub user: &'a str,
    /// What is being generated. Remote models only see the prompt text; the
    /// offline mock dispatches on it.
    pub kind: GenerationKind,
    /// 0 for the first try, 1 for the retry after a rejected output.
    pub attempt: u32,
}

#[derive(Debug, Error)]
pub enum ClientError {
    /// Network or server failure; worth retrying.
    #[error("transport: {0}")]
    Transport(String),
    #[error("authentication: {0}")]
    Auth(String),
    /// The backend refused this particular input.
    #[error("rejected: {0}")]
    Rejected(String),
    #[error("invalid response: {0}")]
    InvalidResponse(String),
}

pub trait LlmClient: Sync {
    fn model_id(&self) -> &str;

    fn complete(&self, request: &ChatRequest<'_>) -> std::result::Result<String, ClientError>;

    /// Offline clients are run single-threaded.
    fn is_offline(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 3,
            base_delay: Duration::from_millis(500),
        }
    }
}

/// Calls `client`, retrying transport failures with exponential backoff.
pub fn complete_with_retry(
    client: &dyn LlmClient,
    request: &ChatRequest<'_>,
    policy: &RetryPolicy,
) -> std::result::Result<String, ClientError> {
    let mut attempt = 0;
    loop {
        match client.complete(request) {
            Err(ClientError::Transport(msg)) if attempt + 1 < policy.max_attempts => {
                log_retry(&msg, attempt);
                std::thread::sleep(policy.base_delay * 2u32.pow(attempt));
                attempt += 1;
            }
            other => return other,
        }
    }
}

fn log_retry(msg: &str, attempt: u32) {
    eprintln!(
        "llm request failed (attempt {}): {msg}; retrying",
        attempt + 1
    );
}

/// OpenAI-compatible `/chat/completions` client.
pub struct HttpChatClient {
    agent: ureq::Agent,
    endpoint: String,
    model: String,
    api_key: String,
}

impl HttpChatClient {
    /// Reads the API key from the environment variable `api_key_env`.
    pub fn from_env(
        endpoint: &str,
        model: &str,
        api_key_env: &str,
        timeout: Duration,
    ) -> Result<Self> {
        let api_key = std::env::var(api_key_env)
            .ok()
            .filter(|k| !k.trim().is_empty())
            .ok_or_else(|| {
                Error::Environment(format!(
                    "LLM API key not found in environment variable {api_key_env}"
                ))
            })?;
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(HttpChatClient {
            agent,
            endpoint: endpoint.to_string(),
            model: model.to_string(),
            api_key,
        })
    }
}

impl std::fmt::Debug for HttpChatClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpChatClient")
            .field("endpoint", &self.endpoint)
            .field("model", &self.model)
            .finish_non_exhaustive()
    }
}

impl LlmClient for HttpChatClient {
    fn model_id(&self) -> &str {
        &self.model
    }

    fn complete(&self, request: &ChatRequest<'_>) -> std::result::Result<String, ClientError> {
        let body = json!({
            "model": self.model,
            "messages": [
                {"role": "system", "content": request.system},
                {"role": "user", "content": request.user},
            ],
        });
        let mut response = self
            .agent
            .post(&self.endpoint)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(&body)
            .map_err(|e| ClientError::Transport(e.to_string()))?;
        let status = response.status().as_u16();
        match status {
            200..=299 => {}
            401 | 403 => return Err(ClientError::Auth(format!("HTTP {status}"))),
            429 | 500..=599 => return Err(ClientError::Transport(format!("HTTP {status}"))),
            _ => return Err(ClientError::Rejected(format!("HTTP {status}"))),
        }
        let value: serde_json::Value = response
            .body_mut()
            .read_json()
            .map_err(|e| ClientError::InvalidResponse(e.to_string()))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| {
                ClientError::InvalidResponse("missing choices[0].message.content".into())
            })
    }
}
