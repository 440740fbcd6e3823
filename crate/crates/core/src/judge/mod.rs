//! Judge backends and the request pipeline in front of them.
//!
//! A [`JudgeBackend`] turns a [`JudgeRequest`] into raw text. [`Judge`] wraps a
//! backend with response caching, retries, rate limiting and an in-flight
//! bound; everything above this module talks to a `Judge`.

mod backend;
mod cache;
mod parse;
mod remote;
mod throttle;

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use backend::{
    make_anti_oracle_backend, make_noisy_backend, make_oracle_backend, ContextRule, OracleBackend, OracleMode,
    ScriptFile, ScriptedBackend,
};
pub use cache::{cache_key, CacheEntry, ResponseCache};
pub use parse::{parse_score, parse_yesno, parse_yesno_detailed};
pub use remote::{RemoteBackend, RemoteConfig, API_KEY_ENV};
pub use throttle::{InFlight, RateLimiter};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

/// Sampling settings sent with every request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecodingParams {
    pub temperature: f64,
    pub top_p: f64,
    pub min_new_tokens: u32,
    pub max_new_tokens: u32,
    pub repetition_penalty: f64,
    pub num_beams: u32,
    pub sample: bool,
}

impl Default for DecodingParams {
    /// Open-model decoding settings; remote backends reuse them.
    fn default() -> Self {
        Self {
            temperature: 0.1,
            top_p: 0.95,
            min_new_tokens: 10,
            max_new_tokens: 200,
            repetition_penalty: 1.0,
            num_beams: 1,
            sample: true,
        }
    }
}

impl DecodingParams {
    pub fn validate(&self) -> Result<(), JudgeError> {
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return Err(JudgeError::InvalidRequest("temperature must be >= 0".into()));
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(JudgeError::InvalidRequest("top_p must lie in (0, 1]".into()));
        }
        if self.min_new_tokens > self.max_new_tokens {
            return Err(JudgeError::InvalidRequest("min_new_tokens exceeds max_new_tokens".into()));
        }
        Ok(())
    }
}

/// Which step of a strategy a request belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    /// Single-call 1-6 rating.
    Rate,
    /// Chain-of-thought question generation.
    Questions,
    /// Chain-of-thought answer checking.
    Answers,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Rate => "rate",
            Phase::Questions => "questions",
            Phase::Answers => "answers",
        }
    }
}

/// Audit tag: `<subject>/<strategy>/<phase>` where subject is a caption id
/// (or a figure id for question generation).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RequestTag {
    pub subject: String,
    pub strategy: String,
    pub phase: Phase,
}

impl fmt::Display for RequestTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.subject, self.strategy, self.phase.as_str())
    }
}

impl FromStr for RequestTag {
    type Err = JudgeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || JudgeError::InvalidRequest(format!("malformed request tag `{s}`"));
        let mut parts = s.rsplitn(3, '/');
        let phase = match parts.next().ok_or_else(bad)? {
            "rate" => Phase::Rate,
            "questions" => Phase::Questions,
            "answers" => Phase::Answers,
            _ => return Err(bad()),
        };
        let strategy = parts.next().ok_or_else(bad)?.to_string();
        let subject = parts.next().ok_or_else(bad)?.to_string();
        Ok(Self { subject, strategy, phase })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeRequest {
    pub messages: Vec<Message>,
    pub params: DecodingParams,
    pub tag: String,
}

impl JudgeRequest {
    pub fn user(content: impl Into<String>) -> Self {
        Self {
            messages: vec![Message {
                role: Role::User,
                content: content.into(),
            }],
            params: DecodingParams::default(),
            tag: String::new(),
        }
    }

    pub fn with_tag(mut self, tag: impl fmt::Display) -> Self {
        self.tag = tag.to_string();
        self
    }

    pub fn with_params(mut self, params: DecodingParams) -> Self {
        self.params = params;
        self
    }

    /// Content of the final user message.
    pub fn prompt(&self) -> &str {
        self.messages.last().map(|m| m.content.as_str()).unwrap_or("")
    }

    pub fn validate(&self) -> Result<(), JudgeError> {
        match self.messages.last() {
            None => Err(JudgeError::InvalidRequest("request has no messages".into())),
            Some(m) if m.role != Role::User => {
                Err(JudgeError::InvalidRequest("last message must come from the user".into()))
            }
            Some(_) => self.params.validate(),
        }
    }
}

/// Raw backend output. Empty text is valid data.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgeResponse {
    pub raw_text: String,
    pub backend_id: String,
    /// Run-time telemetry below is not persisted with scores, so that score
    /// files stay byte-identical between cold and warm-cache runs.
    #[serde(skip)]
    pub cached: bool,
    #[serde(skip)]
    pub latency_ms: u64,
    #[serde(skip)]
    pub attempts: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParseStatus {
    Parsed,
    Fallback,
}

/// One backend's score for one caption under one strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeScore {
    pub caption_id: String,
    pub strategy_id: String,
    pub backend_id: String,
    /// In [1, 6]. Always 1 when `parse_status` is `Fallback`.
    pub score: f64,
    pub parse_status: ParseStatus,
    pub raw: JudgeResponse,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cot: Option<CotTrace>,
}

/// Both phases of a chain-of-thought evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CotTrace {
    pub questions: Vec<String>,
    pub question_response: JudgeResponse,
    pub verdicts: Vec<bool>,
    /// Share of questions answered "Yes", in [0, 1].
    pub fraction: f64,
}

#[derive(Debug, Error)]
pub enum JudgeError {
    /// Retryable transport failure; only surfaces from backends.
    #[error("transient failure: {0}")]
    Transient(String),
    #[error("gave up after {attempts} attempts: {last}")]
    TransportExhausted { attempts: u32, last: String },
    #[error("backend rejected credentials (HTTP {status})")]
    AuthRejected { status: u16 },
    #[error("backend refused request (HTTP {status}): {body}")]
    BackendRefused { status: u16, body: String },
    #[error("caption `{0}` has no PhD ranking")]
    MissingRanking(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("response cache: {0}")]
    Cache(String),
}

impl JudgeError {
    /// Whether the error came from talking to the backend (as opposed to a
    /// local configuration mistake).
    pub fn is_transport(&self) -> bool {
        matches!(
            self,
            JudgeError::Transient(_)
                | JudgeError::TransportExhausted { .. }
                | JudgeError::AuthRejected { .. }
                | JudgeError::BackendRefused { .. }
        )
    }
}

/// Anything that can answer a judge request with raw text.
pub trait JudgeBackend: Send + Sync {
    fn id(&self) -> &str;

    fn model(&self) -> &str;

    fn complete(&self, request: &JudgeRequest) -> Result<String, JudgeError>;
}

/// Exponential backoff with jitter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay_ms: u64,
    pub max_delay_ms: u64,
    pub jitter: bool,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 5,
            base_delay_ms: 500,
            max_delay_ms: 30_000,
            jitter: true,
        }
    }
}

impl RetryPolicy {
    pub fn delay(&self, attempt: u32) -> Duration {
        let exp = self
            .base_delay_ms
            .saturating_mul(1u64 << attempt.saturating_sub(1).min(20))
            .min(self.max_delay_ms);
        let ms = if self.jitter {
            (exp as f64 * rand::rng().random_range(0.5..=1.0)) as u64
        } else {
            exp
        };
        Duration::from_millis(ms)
    }
}

/// Counters for one [`Judge`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CallStats {
    pub requests: u64,
    pub cache_hits: u64,
    /// Requests that reached the backend (cache misses).
    pub backend_calls: u64,
    /// Backend attempts including retries.
    pub attempts: u64,
}

#[derive(Default)]
struct Counters {
    requests: AtomicU64,
    cache_hits: AtomicU64,
    backend_calls: AtomicU64,
    attempts: AtomicU64,
}

/// A backend plus caching, retry, rate limiting and an in-flight bound.
pub struct Judge {
    backend: Arc<dyn JudgeBackend>,
    params: DecodingParams,
    cache: Option<ResponseCache>,
    retry: RetryPolicy,
    limiter: Option<RateLimiter>,
    in_flight: InFlight,
    counters: Counters,
}

impl Judge {
    pub fn new(backend: Arc<dyn JudgeBackend>) -> Self {
        Self {
            backend,
            params: DecodingParams::default(),
            cache: None,
            retry: RetryPolicy::default(),
            limiter: None,
            in_flight: InFlight::new(8),
            counters: Counters::default(),
        }
    }

    pub fn with_params(mut self, params: DecodingParams) -> Self {
        self.params = params;
        self
    }

    pub fn with_cache(mut self, cache: ResponseCache) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn with_rate_limit(mut self, requests_per_minute: u32) -> Self {
        self.limiter = Some(RateLimiter::per_minute(requests_per_minute));
        self
    }

    pub fn with_max_in_flight(mut self, bound: usize) -> Self {
        self.in_flight = InFlight::new(bound);
        self
    }

    pub fn backend_id(&self) -> &str {
        self.backend.id()
    }

    pub fn model(&self) -> &str {
        self.backend.model()
    }

    pub fn params(&self) -> &DecodingParams {
        &self.params
    }

    pub fn max_in_flight(&self) -> usize {
        self.in_flight.bound()
    }

    pub fn stats(&self) -> CallStats {
        CallStats {
            requests: self.counters.requests.load(Ordering::Relaxed),
            cache_hits: self.counters.cache_hits.load(Ordering::Relaxed),
            backend_calls: self.counters.backend_calls.load(Ordering::Relaxed),
            attempts: self.counters.attempts.load(Ordering::Relaxed),
        }
    }

    /// Sends one request, serving it from cache when possible.
    pub fn submit(&self, request: &JudgeRequest) -> Result<JudgeResponse, JudgeError> {
        request.validate()?;
        self.counters.requests.fetch_add(1, Ordering::Relaxed);
        let backend_id = self.backend.id().to_string();
        let key = cache_key(&backend_id, self.backend.model(), &request.messages, &request.params);

        if let Some(cache) = &self.cache {
            if let Some(raw_text) = cache.get(&key)? {
                self.counters.cache_hits.fetch_add(1, Ordering::Relaxed);
                return Ok(JudgeResponse {
                    raw_text,
                    backend_id,
                    cached: true,
                    latency_ms: 0,
                    attempts: 0,
                });
            }
        }

        self.counters.backend_calls.fetch_add(1, Ordering::Relaxed);
        let _slot = self.in_flight.acquire();
        let started = Instant::now();
        let mut attempt = 0;
        let raw_text = loop {
            attempt += 1;
            if let Some(limiter) = &self.limiter {
                limiter.acquire();
            }
            self.counters.attempts.fetch_add(1, Ordering::Relaxed);
            match self.backend.complete(request) {
                Ok(text) => break text,
                Err(JudgeError::Transient(msg)) => {
                    if attempt >= self.retry.max_attempts {
                        return Err(JudgeError::TransportExhausted {
                            attempts: attempt,
                            last: msg,
                        });
                    }
                    log::debug!("{}: attempt {attempt} failed: {msg}", request.tag);
                    std::thread::sleep(self.retry.delay(attempt));
                }
                Err(other) => return Err(other),
            }
        };

        if let Some(cache) = &self.cache {
            cache.put(&key, self.backend.model(), request, &backend_id, &raw_text)?;
        }
        Ok(JudgeResponse {
            raw_text,
            backend_id,
            cached: false,
            latency_ms: started.elapsed().as_millis() as u64,
            attempts: attempt,
        })
    }
}
