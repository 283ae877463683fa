//! OpenAI-compatible chat-completions and embeddings over HTTP.

use std::io::{BufRead, BufReader, Read};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{Completion, CompletionBackend, CompletionRequest, Embedder, LlmError, TokenUsage};

/// Where to send requests. The credential itself is read from the named
/// environment variable on every call and never stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendConfig {
    /// Base URL, e.g. `https://api.example.com/v1`.
    pub endpoint: String,
    pub model: String,
    pub api_key_env: Option<String>,
}

impl BackendConfig {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        BackendConfig { endpoint: endpoint.into(), model: model.into(), api_key_env: None }
    }

    pub fn with_api_key_env(mut self, var: impl Into<String>) -> Self {
        self.api_key_env = Some(var.into());
        self
    }

    fn url(&self, path: &str) -> String {
        format!("{}/{}", self.endpoint.trim_end_matches('/'), path)
    }

    fn credential(&self) -> Result<Option<String>, LlmError> {
        match &self.api_key_env {
            None => Ok(None),
            Some(var) => std::env::var(var).map(Some).map_err(|_| LlmError::MissingCredential(var.clone())),
        }
    }

    fn post(&self, path: &str, timeout: Duration, body: &Value) -> Result<ureq::Response, LlmError> {
        let mut req = ureq::post(&self.url(path)).timeout(timeout).set("Content-Type", "application/json");
        if let Some(key) = self.credential()? {
            req = req.set("Authorization", &format!("Bearer {key}"));
        }
        req.send_string(&body.to_string()).map_err(map_ureq_error)
    }
}

fn map_ureq_error(err: ureq::Error) -> LlmError {
    match err {
        ureq::Error::Status(429, resp) => {
            let retry_after = resp
                .header("Retry-After")
                .and_then(|v| v.trim().parse::<u64>().ok())
                .map(Duration::from_secs);
            LlmError::RateLimited { retry_after }
        }
        ureq::Error::Status(status, resp) => {
            let body = resp.into_string().unwrap_or_default();
            LlmError::HttpStatus { status, body: body.chars().take(500).collect() }
        }
        ureq::Error::Transport(t) => {
            let msg = t.to_string();
            if msg.contains("timed out") || msg.contains("Timeout") {
                LlmError::Timeout(Duration::ZERO)
            } else {
                LlmError::Transport(msg)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct HttpBackend {
    config: BackendConfig,
}

impl HttpBackend {
    pub fn new(config: BackendConfig) -> Self {
        HttpBackend { config }
    }

    fn body(&self, request: &CompletionRequest) -> Value {
        let mut messages = Vec::new();
        if !request.system_message.is_empty() {
            messages.push(json!({"role": "system", "content": request.system_message}));
        }
        messages.push(json!({"role": "user", "content": request.user_message}));
        let mut body = json!({
            "model": self.config.model,
            "temperature": request.temperature,
            "stream": request.stream,
            "messages": messages,
        });
        if request.stream {
            body["stream_options"] = json!({"include_usage": true});
        }
        body
    }
}

impl CompletionBackend for HttpBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<Completion, LlmError> {
        let resp = self.config.post("chat/completions", request.timeout, &self.body(request))?;
        if request.stream {
            parse_sse_stream(BufReader::new(resp.into_reader()))
        } else {
            let raw = resp.into_string().map_err(|e| LlmError::Transport(e.to_string()))?;
            let value: Value = serde_json::from_str(&raw).map_err(|e| LlmError::Transport(e.to_string()))?;
            parse_completion_body(&value)
        }
    }
}

fn usage_of(value: &Value) -> Option<TokenUsage> {
    let u = value.get("usage")?;
    Some(TokenUsage {
        prompt_tokens: u.get("prompt_tokens")?.as_u64()?,
        completion_tokens: u.get("completion_tokens")?.as_u64()?,
    })
}

fn error_of(value: &Value) -> Option<LlmError> {
    let err = value.get("error")?;
    let msg = err.get("message").and_then(Value::as_str).map(str::to_string).unwrap_or_else(|| err.to_string());
    Some(LlmError::Transport(msg))
}

/// Reads a non-streamed chat-completions body.
pub fn parse_completion_body(value: &Value) -> Result<Completion, LlmError> {
    if let Some(e) = error_of(value) {
        return Err(e);
    }
    let text = value
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .ok_or_else(|| LlmError::Transport("response has no message content".into()))?;
    Ok(Completion { text: text.to_string(), usage: usage_of(value) })
}

/// Concatenates the deltas of a server-sent-event stream. A stream that
/// stops before `[DONE]` or a finish reason is an error, so callers never
/// see a silently truncated reply.
pub fn parse_sse_stream(reader: impl BufRead) -> Result<Completion, LlmError> {
    let mut text = String::new();
    let mut usage = None;
    let mut finished = false;
    for line in reader.lines() {
        let line = line.map_err(|e| LlmError::Transport(format!("stream read failed: {e}")))?;
        let Some(data) = line.strip_prefix("data:") else { continue };
        let data = data.trim();
        if data == "[DONE]" {
            return Ok(Completion { text, usage });
        }
        if data.is_empty() {
            continue;
        }
        let value: Value =
            serde_json::from_str(data).map_err(|e| LlmError::Transport(format!("bad stream chunk: {e}")))?;
        if let Some(e) = error_of(&value) {
            return Err(e);
        }
        if let Some(delta) = value.pointer("/choices/0/delta/content").and_then(Value::as_str) {
            text.push_str(delta);
        }
        if value.pointer("/choices/0/finish_reason").is_some_and(|v| !v.is_null()) {
            finished = true;
        }
        if let Some(u) = usage_of(&value) {
            usage = Some(u);
        }
    }
    if finished {
        Ok(Completion { text, usage })
    } else {
        Err(LlmError::Transport("stream ended before completion".into()))
    }
}

/// Embeddings endpoint client.
#[derive(Debug, Clone)]
pub struct HttpEmbedder {
    config: BackendConfig,
    dimension: usize,
    timeout: Duration,
}

impl HttpEmbedder {
    pub fn new(config: BackendConfig, dimension: usize) -> Self {
        HttpEmbedder { config, dimension, timeout: Duration::from_secs(120) }
    }
}

impl Embedder for HttpEmbedder {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, LlmError> {
        let body = json!({"model": self.config.model, "input": texts});
        let resp = self.config.post("embeddings", self.timeout, &body)?;
        let mut raw = String::new();
        resp.into_reader()
            .read_to_string(&mut raw)
            .map_err(|e| LlmError::Transport(e.to_string()))?;
        let value: Value = serde_json::from_str(&raw).map_err(|e| LlmError::Transport(e.to_string()))?;
        if let Some(e) = error_of(&value) {
            return Err(e);
        }
        let data = value
            .get("data")
            .and_then(Value::as_array)
            .ok_or_else(|| LlmError::Transport("embedding response has no data".into()))?;
        if data.len() != texts.len() {
            return Err(LlmError::EmbeddingCount { expected: texts.len(), found: data.len() });
        }
        let mut out = vec![Vec::new(); texts.len()];
        for (pos, item) in data.iter().enumerate() {
            let index = item.get("index").and_then(Value::as_u64).map(|i| i as usize).unwrap_or(pos);
            let vector: Vec<f64> = item
                .get("embedding")
                .and_then(Value::as_array)
                .map(|a| a.iter().filter_map(Value::as_f64).collect())
                .ok_or_else(|| LlmError::Transport("embedding item has no vector".into()))?;
            if vector.len() != self.dimension {
                return Err(LlmError::EmbeddingDimension { expected: self.dimension, found: vector.len() });
            }
            let slot = out.get_mut(index).ok_or_else(|| LlmError::Transport(format!("bad index {index}")))?;
            *slot = vector;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{Cursor, Write};
    use std::net::TcpListener;
    use std::thread;

    fn chunk(content: &str) -> String {
        format!("data: {}\n\n", json!({"choices": [{"delta": {"content": content}, "finish_reason": null}]}))
    }

    #[test]
    fn sse_concatenates_deltas() {
        let stream = format!("{}{}data: [DONE]\n\n", chunk("Hel"), chunk("lo"));
        let c = parse_sse_stream(Cursor::new(stream)).unwrap();
        assert_eq!(c.text, "Hello");
    }

    #[test]
    fn sse_truncated_stream_is_error() {
        let stream = chunk("partial");
        assert!(matches!(parse_sse_stream(Cursor::new(stream)), Err(LlmError::Transport(_))));
    }

    #[test]
    fn sse_usage_and_finish_reason() {
        let last = json!({"choices": [{"delta": {}, "finish_reason": "stop"}],
                          "usage": {"prompt_tokens": 10, "completion_tokens": 3}});
        let stream = format!("{}data: {last}\n\n", chunk("ok"));
        let c = parse_sse_stream(Cursor::new(stream)).unwrap();
        assert_eq!(c.usage, Some(TokenUsage { prompt_tokens: 10, completion_tokens: 3 }));
    }

    /// Serves one canned HTTP response and returns the request it saw.
    fn serve_once(response: String) -> (String, thread::JoinHandle<String>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let handle = thread::spawn(move || {
            let (mut stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut head = String::new();
            let mut content_length = 0;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    content_length = v.trim().parse().unwrap();
                }
                head.push_str(&line);
                if line == "\r\n" {
                    break;
                }
            }
            let mut body = vec![0; content_length];
            reader.read_exact(&mut body).unwrap();
            stream.write_all(response.as_bytes()).unwrap();
            head + &String::from_utf8(body).unwrap()
        });
        (format!("http://{addr}/v1"), handle)
    }

    #[test]
    fn http_streamed_completion_with_credential() {
        let body = format!("{}{}data: [DONE]\n\n", chunk("pi"), chunk("ng"));
        let resp = format!("HTTP/1.1 200 OK\r\nContent-Type: text/event-stream\r\nContent-Length: {}\r\n\r\n{body}", body.len());
        let (url, handle) = serve_once(resp);
        std::env::set_var("PAGESMITH_HTTP_TEST_KEY", "k-123");
        let backend = HttpBackend::new(BackendConfig::new(url, "m").with_api_key_env("PAGESMITH_HTTP_TEST_KEY"));
        let out = backend.complete(&CompletionRequest::new("sys", "ping")).unwrap();
        assert_eq!(out.text, "ping");
        let seen = handle.join().unwrap();
        assert!(seen.starts_with("POST /v1/chat/completions"));
        assert!(seen.contains("Bearer k-123"));
        assert!(seen.contains("\"temperature\":0.7"));
    }

    #[test]
    fn http_429_maps_to_rate_limited() {
        let resp = "HTTP/1.1 429 Too Many Requests\r\nRetry-After: 2\r\nContent-Length: 0\r\n\r\n".to_string();
        let (url, handle) = serve_once(resp);
        let backend = HttpBackend::new(BackendConfig::new(url, "m"));
        let err = backend.complete(&CompletionRequest::new("s", "u")).unwrap_err();
        assert_eq!(err, LlmError::RateLimited { retry_after: Some(Duration::from_secs(2)) });
        handle.join().unwrap();
    }

    #[test]
    fn missing_credential_is_reported() {
        let backend = HttpBackend::new(
            BackendConfig::new("http://127.0.0.1:9", "m").with_api_key_env("PAGESMITH_DEFINITELY_UNSET"),
        );
        assert_eq!(
            backend.complete(&CompletionRequest::new("s", "u")),
            Err(LlmError::MissingCredential("PAGESMITH_DEFINITELY_UNSET".into()))
        );
    }

    #[test]
    fn http_embeddings() {
        let body = json!({"data": [{"index": 1, "embedding": [0.0, 1.0]}, {"index": 0, "embedding": [1.0, 0.0]}]}).to_string();
        let resp = format!("HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\n\r\n{body}", body.len());
        let (url, handle) = serve_once(resp);
        let e = HttpEmbedder::new(BackendConfig::new(url, "emb"), 2);
        let out = e.embed(&["a".into(), "b".into()]).unwrap();
        assert_eq!(out, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert!(handle.join().unwrap().starts_with("POST /v1/embeddings"));
    }
}
