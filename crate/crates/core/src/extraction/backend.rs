//! Model backend contract and the OpenAI-compatible HTTP implementation.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::prompt::{response_schema, schema_name, Prompt, PromptKind};

/// One structured-chat call: system + user text and the schema the reply
/// must follow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendRequest {
    pub kind: PromptKind,
    pub system: String,
    pub user: String,
    pub schema_name: String,
    pub schema: Value,
}

impl BackendRequest {
    pub fn from_prompt(prompt: Prompt) -> Self {
        Self {
            kind: prompt.kind,
            schema_name: schema_name(prompt.kind).to_string(),
            schema: response_schema(prompt.kind),
            system: prompt.system,
            user: prompt.user,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BackendError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("request timed out")]
    Timeout,
    #[error("backend answered HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("backend reply has no message content: {0}")]
    Protocol(String),
}

impl BackendError {
    pub fn is_retryable(&self) -> bool {
        match self {
            BackendError::Transport(_) | BackendError::Timeout => true,
            BackendError::Status { status, .. } => *status == 429 || *status >= 500,
            BackendError::Protocol(_) => false,
        }
    }

    /// True for failures that say nothing about the reply content: the
    /// backend could not be reached or refused the call.
    pub fn is_unavailable(&self) -> bool {
        !matches!(self, BackendError::Protocol(_))
    }
}

/// A model that answers structured-chat requests with raw reply text.
/// Implementations must tolerate concurrent calls.
pub trait ExtractorBackend: Send + Sync {
    fn complete(&self, request: &BackendRequest) -> Result<String, BackendError>;

    fn describe(&self) -> String;
}

impl<T: ExtractorBackend + ?Sized> ExtractorBackend for std::sync::Arc<T> {
    fn complete(&self, request: &BackendRequest) -> Result<String, BackendError> {
        (**self).complete(request)
    }

    fn describe(&self) -> String {
        (**self).describe()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub attempts: u32,
    /// Delay before the second attempt; doubles after every further failure.
    pub initial_backoff_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            attempts: 3,
            initial_backoff_ms: 1000,
        }
    }
}

impl RetryPolicy {
    pub fn backoff(&self, failed_attempts: u32) -> Duration {
        let factor = 1u64 << failed_attempts.saturating_sub(1).min(16);
        Duration::from_millis(self.initial_backoff_ms.saturating_mul(factor))
    }
}

/// Calls `backend`, retrying retryable failures with exponential backoff.
/// Every attempt's outcome is handed to `on_attempt`.
pub fn complete_with_retry(
    backend: &dyn ExtractorBackend,
    request: &BackendRequest,
    policy: RetryPolicy,
    mut on_attempt: impl FnMut(&Result<String, BackendError>),
) -> Result<String, BackendError> {
    let attempts = policy.attempts.max(1);
    let mut attempt = 0;
    loop {
        attempt += 1;
        let outcome = backend.complete(request);
        on_attempt(&outcome);
        match outcome {
            Err(e) if e.is_retryable() && attempt < attempts => {
                tracing::debug!(attempt, error = %e, "backend call failed, retrying");
                std::thread::sleep(policy.backoff(attempt));
            }
            other => return other,
        }
    }
}

/// OpenAI-compatible `/chat/completions` client (vLLM and similar servers),
/// temperature 0 with a strict JSON-schema response format.
pub struct HttpBackend {
    agent: ureq::Agent,
    endpoint: String,
    model: String,
    api_key: Option<String>,
}

impl HttpBackend {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            agent,
            endpoint: endpoint.into(),
            model: model.into(),
            api_key: None,
        }
    }

    pub fn with_api_key(mut self, key: Option<String>) -> Self {
        self.api_key = key;
        self
    }

    fn url(&self) -> String {
        let base = self.endpoint.trim_end_matches('/');
        if base.ends_with("/chat/completions") {
            base.to_string()
        } else {
            format!("{base}/chat/completions")
        }
    }

    pub fn request_body(&self, request: &BackendRequest) -> Value {
        json!({
            "model": self.model,
            "temperature": 0.0,
            "messages": [
                {"role": "system", "content": request.system},
                {"role": "user", "content": request.user},
            ],
            "response_format": {
                "type": "json_schema",
                "json_schema": {"name": request.schema_name, "schema": request.schema, "strict": true}
            }
        })
    }
}

impl ExtractorBackend for HttpBackend {
    fn complete(&self, request: &BackendRequest) -> Result<String, BackendError> {
        let mut call = self.agent.post(self.url());
        if let Some(key) = &self.api_key {
            call = call.header("Authorization", format!("Bearer {key}"));
        }
        let mut response = call
            .send_json(self.request_body(request))
            .map_err(|e| match e {
                ureq::Error::Timeout(_) => BackendError::Timeout,
                other => BackendError::Transport(other.to_string()),
            })?;
        let status = response.status().as_u16();
        let body = response
            .body_mut()
            .read_to_string()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        if !(200..300).contains(&status) {
            return Err(BackendError::Status { status, body });
        }
        let value: Value =
            serde_json::from_str(&body).map_err(|e| BackendError::Protocol(e.to_string()))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| BackendError::Protocol("missing choices[0].message.content".into()))
    }

    fn describe(&self) -> String {
        format!("http:{}@{}", self.model, self.endpoint)
    }
}
