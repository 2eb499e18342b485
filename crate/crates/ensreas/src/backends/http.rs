//! OpenAI-compatible chat-completions client over HTTP, with bounded retry
//! and non-decreasing backoff. Greedy decoding is encoded as temperature 0
//! on the wire.

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

use serde::Deserialize;
use serde_json::json;

use super::{Backend, BackendError, Decoding, GenerationRequest, GenerationResponse};

#[derive(Debug, Clone)]
pub struct HttpConfig {
    pub base_url: String,
    pub api_key: Option<String>,
    pub max_retries: u32,
    /// Initial backoff; doubles per attempt.
    pub backoff: Duration,
    pub timeout: Duration,
}

impl Default for HttpConfig {
    fn default() -> Self {
        HttpConfig {
            base_url: "http://localhost:8000/v1".into(),
            api_key: None,
            max_retries: 4,
            backoff: Duration::from_millis(500),
            timeout: Duration::from_secs(300),
        }
    }
}

pub struct HttpBackend {
    config: HttpConfig,
    client: reqwest::blocking::Client,
    calls: AtomicU64,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: Message,
}

#[derive(Deserialize)]
struct Message {
    content: Option<String>,
}

impl HttpBackend {
    pub fn new(config: HttpConfig) -> Self {
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .expect("http client");
        HttpBackend { config, client, calls: AtomicU64::new(0) }
    }

    fn body(request: &GenerationRequest) -> serde_json::Value {
        let (temperature, top_p) = match request.decoding {
            Decoding::Greedy => (0.0, 1.0),
            Decoding::Sampled { temperature, top_p } => (temperature, top_p),
        };
        json!({
            "model": request.model_id,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": temperature,
            "top_p": top_p,
            "max_tokens": request.max_tokens,
            // Distinct seeds keep repeated samples of one prompt distinct on
            // servers that default to deterministic sampling.
            "seed": request.sample_index,
        })
    }

    fn attempt(&self, request: &GenerationRequest) -> Result<String, AttemptError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        let url = format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'));
        let mut builder = self.client.post(&url).json(&Self::body(request));
        if let Some(key) = &self.config.api_key {
            builder = builder.bearer_auth(key);
        }
        let response = builder.send().map_err(|e| AttemptError::Retryable(e.to_string()))?;
        let status = response.status();
        if status.as_u16() == 429 {
            let retry_after_ms = response
                .headers()
                .get("retry-after")
                .and_then(|v| v.to_str().ok())
                .and_then(|v| v.parse::<u64>().ok())
                .map(|s| s * 1000)
                .unwrap_or(1000);
            return Err(AttemptError::RateLimited { retry_after_ms });
        }
        if status.is_server_error() {
            return Err(AttemptError::Retryable(format!("HTTP {status}")));
        }
        if !status.is_success() {
            return Err(AttemptError::Fatal(format!("HTTP {status}")));
        }
        let parsed: ChatResponse = response
            .json()
            .map_err(|e| AttemptError::Malformed(e.to_string()))?;
        parsed
            .choices
            .first()
            .and_then(|c| c.message.content.clone())
            .ok_or_else(|| AttemptError::Malformed("no choices in response".into()))
    }
}

enum AttemptError {
    Retryable(String),
    RateLimited { retry_after_ms: u64 },
    Malformed(String),
    Fatal(String),
}

impl Backend for HttpBackend {
    fn id(&self) -> &str {
        "http"
    }

    fn generate(&self, request: &GenerationRequest) -> Result<GenerationResponse, BackendError> {
        let started = Instant::now();
        let mut backoff = self.config.backoff;
        let mut last_error = String::new();
        let attempts = 1 + self.config.max_retries;
        for attempt in 1..=attempts {
            match self.attempt(request) {
                Ok(text) => {
                    return Ok(GenerationResponse {
                        text,
                        cached: false,
                        latency_ms: started.elapsed().as_millis() as u64,
                        attempt_count: attempt,
                    })
                }
                Err(AttemptError::Malformed(detail)) => {
                    return Err(BackendError::MalformedResponse(detail))
                }
                Err(AttemptError::Fatal(detail)) => return Err(BackendError::Transport(detail)),
                Err(AttemptError::RateLimited { retry_after_ms }) => {
                    if attempt == attempts {
                        return Err(BackendError::RateLimited { retry_after_ms });
                    }
                    std::thread::sleep(Duration::from_millis(retry_after_ms).max(backoff));
                    last_error = "rate limited".into();
                }
                Err(AttemptError::Retryable(detail)) => {
                    if attempt == attempts {
                        return Err(BackendError::Transport(detail));
                    }
                    std::thread::sleep(backoff);
                    last_error = detail;
                }
            }
            backoff *= 2;
        }
        Err(BackendError::Transport(last_error))
    }

    fn call_count(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }
}
