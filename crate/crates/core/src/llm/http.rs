use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Duration;

use rand::Rng;
use serde_json::{json, Value};

use super::cache::ResponseCache;
use super::limiter::Limiter;
use super::{Backend, BackendConfig, ChatRequest, LlmError};

/// Single-turn chat-completions client with retries and a concurrency cap.
pub struct HttpBackend {
    config: BackendConfig,
    agent: ureq::Agent,
    limiter: Limiter,
    cache: Option<ResponseCache>,
    queries: AtomicU64,
}

enum Failure {
    Retryable(LlmError),
    Final(LlmError),
}

impl HttpBackend {
    pub fn new(config: BackendConfig) -> Result<Self, LlmError> {
        config.validate()?;
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(config.request_timeout_s.max(0.001))))
            .http_status_as_error(false)
            .build()
            .into();
        let cache = match &config.cache_dir {
            Some(dir) => Some(ResponseCache::new(dir).map_err(|e| LlmError::Config(format!("cache dir: {e}")))?),
            None => None,
        };
        Ok(Self { limiter: Limiter::new(config.max_concurrent), agent, cache, queries: AtomicU64::new(0), config })
    }

    fn attempt(&self, key: &str, body: &Value) -> Result<String, Failure> {
        let resp = self
            .agent
            .post(&self.config.endpoint_url)
            .header("Authorization", &format!("Bearer {key}"))
            .header("Content-Type", "application/json")
            .send_json(body);
        let mut resp = match resp {
            Ok(r) => r,
            Err(ureq::Error::Timeout(t)) => return Err(Failure::Retryable(LlmError::Timeout(t.to_string()))),
            Err(e) => return Err(Failure::Retryable(LlmError::Transport(e.to_string()))),
        };
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(|e| Failure::Retryable(LlmError::Transport(e.to_string())));
        match status {
            200..=299 => {
                let text = text?;
                let v: Value = serde_json::from_str(&text)
                    .map_err(|e| Failure::Final(LlmError::MalformedResponse(e.to_string())))?;
                v["choices"][0]["message"]["content"]
                    .as_str()
                    .map(str::to_string)
                    .ok_or_else(|| Failure::Final(LlmError::MalformedResponse("no choices[0].message.content".into())))
            }
            401 | 403 => Err(Failure::Final(LlmError::AuthError(format!("HTTP {status}")))),
            429 => Err(Failure::Retryable(LlmError::RateLimited(self.config.max_retries + 1))),
            500..=599 => Err(Failure::Retryable(LlmError::Status(status))),
            _ => Err(Failure::Final(LlmError::Status(status))),
        }
    }

    fn backoff(&self, attempt: u32) -> Duration {
        let jitter: f64 = rand::rng().random_range(0.5..1.5);
        Duration::from_secs_f64(self.config.backoff_base_s.max(0.0) * 2f64.powi(attempt as i32) * jitter)
    }
}

impl Backend for HttpBackend {
    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError> {
        if request.prompt.is_empty() {
            return Err(LlmError::Config("empty prompt".into()));
        }
        let cache_key = ResponseCache::key(&self.config.model_id, &request.prompt, request.temperature);
        if let Some(hit) = self.cache.as_ref().and_then(|c| c.get(&cache_key)) {
            return Ok(hit);
        }
        let key = std::env::var(&self.config.api_key_env)
            .ok()
            .filter(|k| !k.is_empty())
            .ok_or_else(|| LlmError::AuthError(format!("environment variable {} is not set", self.config.api_key_env)))?;
        let body = json!({
            "model": self.config.model_id,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        });
        let _permit = self.limiter.acquire();
        let mut attempt = 0;
        loop {
            match self.attempt(&key, &body) {
                Ok(reply) => {
                    self.queries.fetch_add(1, Ordering::Relaxed);
                    if let Some(c) = &self.cache {
                        if let Err(e) = c.put(&cache_key, &reply) {
                            tracing::warn!("cache write failed: {e}");
                        }
                    }
                    return Ok(reply);
                }
                Err(Failure::Final(e)) => return Err(e),
                Err(Failure::Retryable(e)) => {
                    if attempt >= self.config.max_retries {
                        return Err(e);
                    }
                    tracing::debug!(request = %request.request_id, attempt, "retrying after {e}");
                    std::thread::sleep(self.backoff(attempt));
                    attempt += 1;
                }
            }
        }
    }

    fn queries(&self) -> u64 {
        self.queries.load(Ordering::Relaxed)
    }
}
