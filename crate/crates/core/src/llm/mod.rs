//! Completion and embedding backends.
//!
//! Every agent talks to a model through a [`Gateway`], which enforces the
//! per-request timeout, retries transient failures with exponential
//! backoff, caps the number of requests in flight and keeps an audit log.
//! Backends themselves only move text: the HTTP chat-completions client in
//! [`http`], and the deterministic stand-ins in [`mock`].

pub mod http;
pub mod mock;

use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::mpsc;
use std::sync::{Arc, Condvar, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Sampling temperature used for every generation call.
pub const DEFAULT_TEMPERATURE: f64 = 0.7;
/// Per-request timeout.
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(600);
pub const DEFAULT_MAX_RETRIES: u32 = 3;
pub const DEFAULT_MAX_IN_FLIGHT: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub system_message: String,
    pub user_message: String,
    pub temperature: f64,
    pub stream: bool,
    #[serde(with = "duration_secs")]
    pub timeout: Duration,
    pub max_retries: u32,
}

impl CompletionRequest {
    pub fn new(system_message: impl Into<String>, user_message: impl Into<String>) -> Self {
        CompletionRequest {
            system_message: system_message.into(),
            user_message: user_message.into(),
            temperature: DEFAULT_TEMPERATURE,
            stream: true,
            timeout: DEFAULT_TIMEOUT,
            max_retries: DEFAULT_MAX_RETRIES,
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn with_max_retries(mut self, n: u32) -> Self {
        self.max_retries = n;
        self
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(LlmError::InvalidRequest(format!("temperature {} outside [0, 2]", self.temperature)));
        }
        if self.timeout.is_zero() {
            return Err(LlmError::InvalidRequest("timeout must be positive".into()));
        }
        Ok(())
    }

    /// Both messages, as matched by scripted backends.
    pub fn prompt_text(&self) -> String {
        format!("{}\n{}", self.system_message, self.user_message)
    }

    /// Short stable digest of the prompt, for logs.
    pub fn hash(&self) -> String {
        short_hash(&self.prompt_text())
    }
}

mod duration_secs {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let secs = f64::deserialize(d)?;
        Duration::try_from_secs_f64(secs).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TokenUsage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub text: String,
    pub usage: Option<TokenUsage>,
}

impl Completion {
    pub fn text(text: impl Into<String>) -> Self {
        Completion { text: text.into(), usage: None }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LlmError {
    #[error("request timed out after {0:?}")]
    Timeout(Duration),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("HTTP {status}: {body}")]
    HttpStatus { status: u16, body: String },
    #[error("rate limited")]
    RateLimited { retry_after: Option<Duration> },
    #[error("backend returned an empty response")]
    EmptyResponse,
    #[error("scripted backend has no responses left")]
    ScriptExhausted,
    #[error("no scripted response matches the prompt")]
    NoMatch,
    #[error("credential environment variable {0} is not set")]
    MissingCredential(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("embedding backend returned {found} vectors for {expected} texts")]
    EmbeddingCount { expected: usize, found: usize },
    #[error("embedding has dimension {found}, expected {expected}")]
    EmbeddingDimension { expected: usize, found: usize },
}

impl LlmError {
    /// Whether the gateway should try again.
    pub fn is_retryable(&self) -> bool {
        match self {
            LlmError::Timeout(_) | LlmError::Transport(_) | LlmError::RateLimited { .. } | LlmError::EmptyResponse => true,
            LlmError::HttpStatus { status, .. } => matches!(status, 408 | 500 | 502 | 503 | 504),
            _ => false,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            LlmError::Timeout(_) => "timeout",
            LlmError::Transport(_) => "transport",
            LlmError::HttpStatus { .. } => "http_status",
            LlmError::RateLimited { .. } => "rate_limited",
            LlmError::EmptyResponse => "empty_response",
            LlmError::ScriptExhausted => "script_exhausted",
            LlmError::NoMatch => "no_match",
            LlmError::MissingCredential(_) => "missing_credential",
            LlmError::InvalidRequest(_) => "invalid_request",
            LlmError::EmbeddingCount { .. } => "embedding_count",
            LlmError::EmbeddingDimension { .. } => "embedding_dimension",
        }
    }
}

/// Something that turns a prompt into text. Implementations must be safe
/// to call from several threads.
pub trait CompletionBackend: Send + Sync {
    fn complete(&self, request: &CompletionRequest) -> Result<Completion, LlmError>;
}

impl<F> CompletionBackend for F
where
    F: Fn(&CompletionRequest) -> Result<Completion, LlmError> + Send + Sync,
{
    fn complete(&self, request: &CompletionRequest) -> Result<Completion, LlmError> {
        self(request)
    }
}

/// Maps a batch of texts to equal-length vectors of a fixed dimension.
pub trait Embedder: Send + Sync {
    fn dimension(&self) -> usize;
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, LlmError>;

    fn embed_one(&self, text: &str) -> Result<Vec<f64>, LlmError> {
        let mut out = self.embed(&[text.to_string()])?;
        out.pop().ok_or(LlmError::EmbeddingCount { expected: 1, found: 0 })
    }
}

/// Delays between attempts: `base * factor^n` for the n-th retry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub base: Duration,
    pub factor: u32,
}

impl Default for RetryPolicy {
    /// 1 s, 4 s, 16 s.
    fn default() -> Self {
        RetryPolicy { base: Duration::from_secs(1), factor: 4 }
    }
}

impl RetryPolicy {
    pub fn immediate() -> Self {
        RetryPolicy { base: Duration::ZERO, factor: 1 }
    }

    pub fn delay(&self, retry: u32) -> Duration {
        self.base.saturating_mul(self.factor.saturating_pow(retry))
    }
}

/// One completed gateway call. Holds digests and timings only, never
/// prompt text or credentials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub request_hash: String,
    pub response_hash: Option<String>,
    pub attempts: u32,
    pub latency_ms: u64,
    pub outcome: String,
    pub usage: Option<TokenUsage>,
}

struct Slots {
    used: Mutex<usize>,
    freed: Condvar,
    max: usize,
}

struct SlotGuard<'a>(&'a Slots);

impl Slots {
    fn acquire(&self) -> SlotGuard<'_> {
        let mut used = self.used.lock().expect("slot lock");
        while *used >= self.max {
            used = self.freed.wait(used).expect("slot lock");
        }
        *used += 1;
        SlotGuard(self)
    }
}

impl Drop for SlotGuard<'_> {
    fn drop(&mut self) {
        *self.0.used.lock().expect("slot lock") -= 1;
        self.0.freed.notify_one();
    }
}

/// Shared entry point to a completion backend.
pub struct Gateway {
    backend: Arc<dyn CompletionBackend>,
    retry: RetryPolicy,
    slots: Slots,
    audit: Mutex<Vec<AuditEntry>>,
}

impl Gateway {
    pub fn new(backend: Arc<dyn CompletionBackend>) -> Self {
        Gateway {
            backend,
            retry: RetryPolicy::default(),
            slots: Slots { used: Mutex::new(0), freed: Condvar::new(), max: DEFAULT_MAX_IN_FLIGHT },
            audit: Mutex::new(Vec::new()),
        }
    }

    pub fn with_retry_policy(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn with_max_in_flight(mut self, max: usize) -> Self {
        self.slots.max = max.max(1);
        self
    }

    /// Sends `request`, retrying transient failures. Total wall time stays
    /// under `(max_retries + 1) * timeout`.
    pub fn complete(&self, request: &CompletionRequest) -> Result<Completion, LlmError> {
        request.validate()?;
        let _slot = self.slots.acquire();
        let started = Instant::now();
        let budget = request.timeout.saturating_mul(request.max_retries + 1);
        let mut attempts = 0;
        let result = loop {
            attempts += 1;
            let remaining = budget.saturating_sub(started.elapsed());
            let attempt_timeout = request.timeout.min(remaining);
            if attempt_timeout.is_zero() {
                break Err(LlmError::Timeout(request.timeout));
            }
            let outcome = self.attempt(request, attempt_timeout).and_then(|c| {
                if c.text.trim().is_empty() {
                    Err(LlmError::EmptyResponse)
                } else {
                    Ok(c)
                }
            });
            match outcome {
                Ok(c) => break Ok(c),
                Err(e) if e.is_retryable() && attempts <= request.max_retries => {
                    let mut delay = self.retry.delay(attempts - 1);
                    if let LlmError::RateLimited { retry_after: Some(after) } = &e {
                        delay = delay.max(*after);
                    }
                    if started.elapsed() + delay >= budget {
                        break Err(e);
                    }
                    thread::sleep(delay);
                }
                Err(e) => break Err(e),
            }
        };
        let entry = AuditEntry {
            request_hash: request.hash(),
            response_hash: result.as_ref().ok().map(|c| short_hash(&c.text)),
            attempts,
            latency_ms: started.elapsed().as_millis() as u64,
            outcome: match &result {
                Ok(_) => "ok".to_string(),
                Err(e) => format!("error:{}", e.kind()),
            },
            usage: result.as_ref().ok().and_then(|c| c.usage),
        };
        self.audit.lock().expect("audit lock").push(entry);
        result
    }

    fn attempt(&self, request: &CompletionRequest, timeout: Duration) -> Result<Completion, LlmError> {
        let (tx, rx) = mpsc::channel();
        let backend = Arc::clone(&self.backend);
        let req = request.clone();
        // The worker is left to finish on its own if it overruns.
        thread::spawn(move || {
            let _ = tx.send(backend.complete(&req));
        });
        match rx.recv_timeout(timeout) {
            Ok(result) => result,
            Err(mpsc::RecvTimeoutError::Timeout) => Err(LlmError::Timeout(timeout)),
            Err(mpsc::RecvTimeoutError::Disconnected) => {
                Err(LlmError::Transport("backend worker panicked".into()))
            }
        }
    }

    pub fn audit_log(&self) -> Vec<AuditEntry> {
        self.audit.lock().expect("audit lock").clone()
    }

    pub fn write_audit_jsonl(&self, path: &Path) -> std::io::Result<()> {
        let mut file = fs::File::create(path)?;
        for entry in self.audit_log() {
            writeln!(file, "{}", serde_json::to_string(&entry).expect("audit entries serialize"))?;
        }
        Ok(())
    }
}

/// First 16 hex digits of the SHA-256 of `text`.
pub fn short_hash(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::mock::{EchoBackend, ScriptedBackend, StallingBackend};
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    fn gateway(backend: impl CompletionBackend + 'static) -> Gateway {
        Gateway::new(Arc::new(backend)).with_retry_policy(RetryPolicy::immediate())
    }

    #[test]
    fn echo_ping() {
        let gw = gateway(EchoBackend);
        let out = gw.complete(&CompletionRequest::new("sys", "ping")).unwrap();
        assert_eq!(out.text, "ping");
    }

    #[test]
    fn stall_times_out() {
        let gw = gateway(StallingBackend::new(Duration::from_millis(500)));
        let req = CompletionRequest::new("s", "u").with_timeout(Duration::from_millis(30)).with_max_retries(1);
        let started = Instant::now();
        assert!(matches!(gw.complete(&req), Err(LlmError::Timeout(_))));
        assert!(started.elapsed() <= Duration::from_millis(30 * 2 + 100));
        assert_eq!(gw.audit_log()[0].attempts, 2);
    }

    #[test]
    fn rate_limit_retried_then_surfaced() {
        let calls = Arc::new(AtomicUsize::new(0));
        let c = Arc::clone(&calls);
        let gw = gateway(move |_: &CompletionRequest| {
            c.fetch_add(1, Ordering::SeqCst);
            Err(LlmError::RateLimited { retry_after: None })
        });
        let req = CompletionRequest::new("s", "u");
        assert!(matches!(gw.complete(&req), Err(LlmError::RateLimited { .. })));
        assert_eq!(calls.load(Ordering::SeqCst), 4);
    }

    #[test]
    fn rate_limit_recovers() {
        let calls = Arc::new(AtomicUsize::new(0));
        let c = Arc::clone(&calls);
        let gw = gateway(move |_: &CompletionRequest| {
            if c.fetch_add(1, Ordering::SeqCst) < 2 {
                Err(LlmError::RateLimited { retry_after: None })
            } else {
                Ok(Completion::text("done"))
            }
        });
        assert_eq!(gw.complete(&CompletionRequest::new("s", "u")).unwrap().text, "done");
        assert_eq!(gw.audit_log()[0].attempts, 3);
    }

    #[test]
    fn empty_response_is_an_error() {
        let gw = gateway(|_: &CompletionRequest| Ok(Completion::text("  \n")));
        assert_eq!(gw.complete(&CompletionRequest::new("s", "u")), Err(LlmError::EmptyResponse));
    }

    #[test]
    fn invalid_requests_rejected() {
        let gw = gateway(EchoBackend);
        let mut req = CompletionRequest::new("s", "u");
        req.temperature = 2.5;
        assert!(matches!(gw.complete(&req), Err(LlmError::InvalidRequest(_))));
        let req = CompletionRequest::new("s", "u").with_timeout(Duration::ZERO);
        assert!(matches!(gw.complete(&req), Err(LlmError::InvalidRequest(_))));
    }

    #[test]
    fn defaults_match_generation_settings() {
        let req = CompletionRequest::new("s", "u");
        assert_eq!(req.temperature, 0.7);
        assert!(req.stream);
        assert_eq!(req.timeout, Duration::from_secs(600));
        assert_eq!(req.max_retries, 3);
        let policy = RetryPolicy::default();
        assert_eq!(
            [policy.delay(0), policy.delay(1), policy.delay(2)],
            [Duration::from_secs(1), Duration::from_secs(4), Duration::from_secs(16)]
        );
    }

    #[test]
    fn scripted_through_gateway_in_order() {
        let script = ScriptedBackend::new(vec![("".into(), "a".into()), ("".into(), "b".into()), ("".into(), "c".into())]);
        let gw = gateway(script);
        let req = CompletionRequest::new("s", "u");
        let got: Vec<String> = (0..3).map(|_| gw.complete(&req).unwrap().text).collect();
        assert_eq!(got, ["a", "b", "c"]);
        assert_eq!(gw.complete(&req), Err(LlmError::ScriptExhausted));
    }

    #[test]
    fn audit_log_has_no_prompt_or_secret() {
        std::env::set_var("PAGESMITH_TEST_SECRET", "sk-very-secret");
        let gw = gateway(EchoBackend);
        gw.complete(&CompletionRequest::new("system sk-very-secret", "hello")).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("audit.jsonl");
        gw.write_audit_jsonl(&path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(!text.contains("sk-very-secret"));
        assert!(!text.contains("hello"));
        assert_eq!(text.lines().count(), 1);
    }

    #[test]
    fn in_flight_cap_is_respected() {
        let current = Arc::new(AtomicUsize::new(0));
        let peak = Arc::new(AtomicUsize::new(0));
        let (c, p) = (Arc::clone(&current), Arc::clone(&peak));
        let gw = Arc::new(
            gateway(move |_: &CompletionRequest| {
                let now = c.fetch_add(1, Ordering::SeqCst) + 1;
                p.fetch_max(now, Ordering::SeqCst);
                thread::sleep(Duration::from_millis(20));
                c.fetch_sub(1, Ordering::SeqCst);
                Ok(Completion::text("ok"))
            })
            .with_max_in_flight(2),
        );
        let handles: Vec<_> = (0..8)
            .map(|_| {
                let gw = Arc::clone(&gw);
                thread::spawn(move || gw.complete(&CompletionRequest::new("s", "u")).unwrap())
            })
            .collect();
        for h in handles {
            h.join().unwrap();
        }
        assert!(peak.load(Ordering::SeqCst) <= 2);
    }
}
