use std::sync::atomic::{AtomicU64, Ordering};

use sha2::{Digest, Sha256};

use super::{Backend, ChatRequest, LlmError};
use crate::problems::registry::NativeHeuristic;
use crate::problems::ProblemKind;

/// First eight bytes of SHA-256, little-endian.
pub fn stable_hash(text: &str) -> u64 {
    let d = Sha256::digest(text.as_bytes());
    u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
}

/// Canned replies: every shipped heuristic for `kind`, each as a braced
/// description followed by a fenced source block.
pub fn default_pool(kind: ProblemKind) -> Vec<String> {
    let name = kind.function_spec().function_name;
    NativeHeuristic::all(kind)
        .into_iter()
        .map(|h| format!("{{{}}}\n```python\n{}\n```", h.description(), h.source(&name)))
        .collect()
}

/// Picks `pool[(stable_hash(prompt) ^ seed) % len]`.
#[derive(Debug)]
pub struct MockBackend {
    pool: Vec<String>,
    queries: AtomicU64,
}

impl MockBackend {
    pub fn new(pool: Vec<String>) -> Self {
        Self { pool, queries: AtomicU64::new(0) }
    }

    pub fn pool(&self) -> &[String] {
        &self.pool
    }
}

impl Backend for MockBackend {
    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError> {
        if self.pool.is_empty() {
            return Err(LlmError::EmptyPool);
        }
        let idx = (stable_hash(&request.prompt) ^ request.seed) % self.pool.len() as u64;
        self.queries.fetch_add(1, Ordering::Relaxed);
        Ok(self.pool[idx as usize].clone())
    }

    fn queries(&self) -> u64 {
        self.queries.load(Ordering::Relaxed)
    }
}
