//! Uniform chat-completion interface over a network endpoint plus a
//! deterministic simulated backend, with a persistent response cache.

mod cache;
mod http;
mod sim;

pub use cache::{CachedBackend, DiskCache};
pub use http::{HttpBackend, HttpConfig};
pub use sim::{Script, ScriptEntry, ScriptedDistribution, SimBackend};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Decoding parameters for one generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Decoding {
    Greedy,
    Sampled { temperature: f64, top_p: f64 },
}

impl Decoding {
    pub fn sampled_default() -> Self {
        Decoding::Sampled { temperature: 0.7, top_p: 0.95 }
    }
}

/// Default generation lengths: long for reasoning calls, short for
/// answer-only calls.
pub const MAX_TOKENS_REASONING: u32 = 1024;
pub const MAX_TOKENS_ANSWER: u32 = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub prompt: String,
    pub decoding: Decoding,
    /// Distinguishes repeated samples of the same prompt. Greedy requests
    /// ignore this beyond 0.
    pub sample_index: usize,
    pub max_tokens: u32,
    pub model_id: String,
}

impl GenerationRequest {
    pub fn greedy(prompt: String, max_tokens: u32, model_id: String) -> Self {
        GenerationRequest { prompt, decoding: Decoding::Greedy, sample_index: 0, max_tokens, model_id }
    }

    pub fn sampled(
        prompt: String,
        sample_index: usize,
        temperature: f64,
        top_p: f64,
        max_tokens: u32,
        model_id: String,
    ) -> Self {
        GenerationRequest {
            prompt,
            decoding: Decoding::Sampled { temperature, top_p },
            sample_index,
            max_tokens,
            model_id,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationResponse {
    pub text: String,
    pub cached: bool,
    pub latency_ms: u64,
    /// Network attempts made; cached responses have 0.
    pub attempt_count: u32,
}

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("transport failure after retries: {0}")]
    Transport(String),
    #[error("rate limited, retry after {retry_after_ms} ms")]
    RateLimited { retry_after_ms: u64 },
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("no script entry for {0}")]
    MissingScriptEntry(String),
    #[error("cache i/o: {0}")]
    CacheIo(String),
}

/// Content digest identifying a request for caching. Any field change
/// produces a different key.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CacheKey(pub String);

impl CacheKey {
    pub fn for_request(backend_id: &str, request: &GenerationRequest) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(backend_id.as_bytes());
        hasher.update([0]);
        hasher.update(request.model_id.as_bytes());
        hasher.update([0]);
        hasher.update(request.prompt.as_bytes());
        hasher.update([0]);
        match &request.decoding {
            Decoding::Greedy => hasher.update(b"greedy"),
            Decoding::Sampled { temperature, top_p } => {
                hasher.update(format!("sampled:{temperature}:{top_p}").as_bytes());
                hasher.update([0]);
                hasher.update(request.sample_index.to_le_bytes());
            }
        }
        hasher.update([0]);
        hasher.update(request.max_tokens.to_le_bytes());
        CacheKey(hex::encode(hasher.finalize()))
    }
}

/// A completion source. Implementations must be safe for concurrent callers.
pub trait Backend: Send + Sync {
    /// Stable identifier mixed into cache keys.
    fn id(&self) -> &str;

    fn generate(&self, request: &GenerationRequest) -> Result<GenerationResponse, BackendError>;

    /// Network (or simulated-draw) calls made so far, for call-budget
    /// assertions. Cache hits do not count.
    fn call_count(&self) -> u64;
}
