//! Text completion backends: a chat-completions HTTP client and a
//! deterministic mock.

mod cache;
mod http;
mod limiter;
mod mock;

pub use cache::ResponseCache;
pub use http::HttpBackend;
pub use limiter::Limiter;
pub use mock::{default_pool, stable_hash, MockBackend};

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::problems::ProblemKind;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LlmError {
    #[error("authentication failed: {0}")]
    AuthError(String),
    #[error("rate limited after {0} attempts")]
    RateLimited(u32),
    #[error("request timed out: {0}")]
    Timeout(String),
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("HTTP status {0}")]
    Status(u16),
    #[error("mock reply pool is empty")]
    EmptyPool,
    #[error("invalid backend configuration: {0}")]
    Config(String),
}

impl LlmError {
    /// Errors that should stop a run rather than mark one attempt infeasible.
    pub fn is_fatal(&self) -> bool {
        matches!(self, LlmError::AuthError(_) | LlmError::Config(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChatRequest {
    pub prompt: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub request_id: String,
    /// Used by the mock; ignored over HTTP.
    pub seed: u64,
}

pub trait Backend: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError>;

    /// Number of completions served so far (cache hits excluded).
    fn queries(&self) -> u64;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Http,
    Mock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub endpoint_url: String,
    pub model_id: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub request_timeout_s: f64,
    pub max_retries: u32,
    pub backoff_base_s: f64,
    pub max_concurrent: usize,
    pub cache_dir: Option<PathBuf>,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            kind: BackendKind::Mock,
            endpoint_url: String::new(),
            model_id: String::new(),
            api_key_env: "EOH_API_KEY".into(),
            temperature: 1.0,
            max_tokens: 2048,
            request_timeout_s: 60.0,
            max_retries: 4,
            backoff_base_s: 1.0,
            max_concurrent: 4,
            cache_dir: None,
        }
    }
}

impl BackendConfig {
    pub fn validate(&self) -> Result<(), LlmError> {
        if self.kind == BackendKind::Http && (self.endpoint_url.is_empty() || self.model_id.is_empty()) {
            return Err(LlmError::Config("http backend needs endpoint_url and model_id".into()));
        }
        if !(self.temperature >= 0.0) {
            return Err(LlmError::Config("temperature must be non-negative".into()));
        }
        if self.max_concurrent == 0 {
            return Err(LlmError::Config("max_concurrent must be at least 1".into()));
        }
        Ok(())
    }

    pub fn build(&self, problem: ProblemKind) -> Result<Box<dyn Backend>, LlmError> {
        self.validate()?;
        Ok(match self.kind {
            BackendKind::Mock => Box::new(MockBackend::new(default_pool(problem))),
            BackendKind::Http => Box::new(HttpBackend::new(self.clone())?),
        })
    }
}
