use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use eoh_core::llm::{Backend, BackendConfig, BackendKind, ChatRequest, HttpBackend, LlmError};
use serde_json::{json, Value};

/// Serves the scripted statuses in order, repeating the last one. Returns the
/// base URL and a counter of requests received.
fn server(script: Vec<(u16, String)>) -> (String, Arc<AtomicUsize>, Arc<std::sync::Mutex<Vec<Value>>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let hits = Arc::new(AtomicUsize::new(0));
    let bodies = Arc::new(std::sync::Mutex::new(Vec::new()));
    let (h, b) = (hits.clone(), bodies.clone());
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { break };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut len = 0usize;
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).unwrap_or(0) == 0 {
                    break;
                }
                if line == "\r\n" {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap_or(0);
                }
            }
            let mut body = vec![0u8; len];
            let _ = reader.read_exact(&mut body);
            b.lock().unwrap().push(serde_json::from_slice(&body).unwrap_or(Value::Null));
            let n = h.fetch_add(1, Ordering::SeqCst);
            let (status, payload) = &script[n.min(script.len() - 1)];
            let resp = format!(
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
                payload.len()
            );
            let _ = stream.write_all(resp.as_bytes());
        }
    });
    (format!("http://{addr}/v1/chat/completions"), hits, bodies)
}

fn ok_body(content: &str) -> String {
    json!({"choices": [{"message": {"role": "assistant", "content": content}}]}).to_string()
}

fn config(url: &str, key_env: &str) -> BackendConfig {
    BackendConfig {
        kind: BackendKind::Http,
        endpoint_url: url.into(),
        model_id: "test-model".into(),
        api_key_env: key_env.into(),
        max_retries: 2,
        backoff_base_s: 0.01,
        request_timeout_s: 5.0,
        ..Default::default()
    }
}

fn req(prompt: &str) -> ChatRequest {
    ChatRequest { prompt: prompt.into(), temperature: 0.7, max_tokens: 64, request_id: "t".into(), seed: 0 }
}

// Each test uses its own variable name so parallel tests never race.
fn with_key(name: &str) -> &str {
    std::env::set_var(name, "secret");
    name
}

#[test]
fn retries_server_error_once() {
    let (url, hits, bodies) = server(vec![(500, "{}".into()), (200, ok_body("hello"))]);
    let b = HttpBackend::new(config(&url, with_key("EOH_TEST_KEY_RETRY"))).unwrap();
    assert_eq!(b.complete(&req("prompt text")).unwrap(), "hello");
    assert_eq!(hits.load(Ordering::SeqCst), 2);
    assert_eq!(b.queries(), 1);
    let body = &bodies.lock().unwrap()[1];
    assert_eq!(body["model"], "test-model");
    assert_eq!(body["messages"][0]["role"], "user");
    assert_eq!(body["messages"][0]["content"], "prompt text");
    assert_eq!(body["temperature"], 0.7);
    assert_eq!(body["max_tokens"], 64);
}

#[test]
fn unauthorized_is_not_retried() {
    let (url, hits, _) = server(vec![(401, "{}".into())]);
    let b = HttpBackend::new(config(&url, with_key("EOH_TEST_KEY_AUTH"))).unwrap();
    let e = b.complete(&req("p")).unwrap_err();
    assert!(matches!(e, LlmError::AuthError(_)));
    assert!(e.is_fatal());
    assert_eq!(hits.load(Ordering::SeqCst), 1);
    assert_eq!(b.queries(), 0);
}

#[test]
fn missing_key_fails_before_any_request() {
    let (url, hits, _) = server(vec![(200, ok_body("x"))]);
    let b = HttpBackend::new(config(&url, "EOH_TEST_KEY_NEVER_SET")).unwrap();
    assert!(matches!(b.complete(&req("p")), Err(LlmError::AuthError(_))));
    assert_eq!(hits.load(Ordering::SeqCst), 0);
}

#[test]
fn rate_limit_exhausts_retries() {
    let (url, hits, _) = server(vec![(429, "{}".into())]);
    let b = HttpBackend::new(config(&url, with_key("EOH_TEST_KEY_429"))).unwrap();
    assert!(matches!(b.complete(&req("p")), Err(LlmError::RateLimited(_))));
    assert_eq!(hits.load(Ordering::SeqCst), 3);
}

#[test]
fn malformed_reply_and_other_status() {
    let (url, _, _) = server(vec![(200, "{\"choices\": []}".into()), (404, "{}".into())]);
    let b = HttpBackend::new(config(&url, with_key("EOH_TEST_KEY_BAD"))).unwrap();
    assert!(matches!(b.complete(&req("p")), Err(LlmError::MalformedResponse(_))));
    assert_eq!(b.complete(&req("p")), Err(LlmError::Status(404)));
}

#[test]
fn cache_serves_repeats_without_counting() {
    let dir = tempfile::tempdir().unwrap();
    let (url, hits, _) = server(vec![(200, ok_body("cached reply"))]);
    let mut cfg = config(&url, with_key("EOH_TEST_KEY_CACHE"));
    cfg.cache_dir = Some(dir.path().to_path_buf());
    let b = HttpBackend::new(cfg.clone()).unwrap();
    assert_eq!(b.complete(&req("same")).unwrap(), "cached reply");
    assert_eq!(b.complete(&req("same")).unwrap(), "cached reply");
    assert_eq!(hits.load(Ordering::SeqCst), 1);
    assert_eq!(b.queries(), 1);
    // A fresh client over the same directory still hits.
    let b2 = HttpBackend::new(cfg).unwrap();
    assert_eq!(b2.complete(&req("same")).unwrap(), "cached reply");
    assert_eq!(b2.queries(), 0);
    assert_eq!(hits.load(Ordering::SeqCst), 1);
}

#[test]
fn http_config_requires_endpoint() {
    let cfg = BackendConfig { kind: BackendKind::Http, ..Default::default() };
    assert!(matches!(HttpBackend::new(cfg), Err(LlmError::Config(_))));
}
