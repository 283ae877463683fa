//! The gateway in front of any completion backend: retries, timeouts and
//! an audit trail that never stores prompt text.
//!
//! With `PAGESMITH_ENDPOINT` set (and the key in `PAGESMITH_API_KEY`) the
//! example also sends one real request.

use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::Arc;
use std::time::Duration;

use pagesmith::llm::http::{BackendConfig, HttpBackend};
use pagesmith::llm::mock::ScriptedBackend;
use pagesmith::llm::{Completion, CompletionRequest, Gateway, LlmError, RetryPolicy};

fn main() {
    let calls = Arc::new(AtomicU32::new(0));
    let seen = Arc::clone(&calls);
    let flaky = move |_: &CompletionRequest| match seen.fetch_add(1, Ordering::SeqCst) {
        0 => Err(LlmError::HttpStatus { status: 503, body: "busy".into() }),
        1 => Err(LlmError::Timeout(Duration::from_secs(1))),
        _ => Ok(Completion::text("ok after retries")),
    };
    let gw = Gateway::new(Arc::new(flaky)).with_retry_policy(RetryPolicy::immediate());
    let reply = gw.complete(&CompletionRequest::new("system", "hello")).expect("third attempt succeeds");
    println!("flaky backend: {:?} after {} attempts", reply.text, gw.audit_log()[0].attempts);

    let scripted = ScriptedBackend::new(vec![
        ("toolbar".into(), "a toolbar reply".into()),
        (String::new(), "fallback reply".into()),
    ]);
    let gw = Gateway::new(Arc::new(scripted));
    for prompt in ["design the toolbar", "anything else"] {
        println!("scripted: {prompt:?} -> {:?}", gw.complete(&CompletionRequest::new("", prompt)).map(|c| c.text));
    }
    for entry in gw.audit_log() {
        println!("  audit {} -> {:?} {}", entry.request_hash, entry.response_hash, entry.outcome);
    }

    if let Ok(endpoint) = std::env::var("PAGESMITH_ENDPOINT") {
        let model = std::env::var("PAGESMITH_MODEL").unwrap_or_else(|_| "gpt-4o".into());
        let backend = HttpBackend::new(BackendConfig::new(endpoint, model).with_api_key_env("PAGESMITH_API_KEY"));
        let gw = Gateway::new(Arc::new(backend));
        let req = CompletionRequest::new("Answer in one word.", "Name a mobile UI widget.").with_timeout(Duration::from_secs(60));
        println!("live: {:?}", gw.complete(&req).map(|c| c.text));
    }
}
