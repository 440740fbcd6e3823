//! The HTTP backend against a local scripted server.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread;

use figjudge::judge::{Judge, JudgeError, JudgeRequest, RemoteBackend, RemoteConfig, RetryPolicy};
use serde_json::Value;

struct Captured {
    authorization: Option<String>,
    body: Value,
}

/// Serves one canned `(status, body)` per connection, in order, and records
/// what each request carried.
fn serve(replies: Vec<(u16, String)>) -> (String, Arc<Mutex<Vec<Captured>>>, thread::JoinHandle<()>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = Arc::clone(&seen);
    let handle = thread::spawn(move || {
        for (status, body) in replies {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream);
            let mut length = 0;
            let mut authorization = None;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                let line = line.trim_end();
                if line.is_empty() {
                    break;
                }
                let (name, value) = line.split_once(':').unwrap_or((line, ""));
                match name.to_ascii_lowercase().as_str() {
                    "content-length" => length = value.trim().parse().unwrap(),
                    "authorization" => authorization = Some(value.trim().to_string()),
                    _ => {}
                }
            }
            let mut buf = vec![0; length];
            reader.read_exact(&mut buf).unwrap();
            log.lock().unwrap().push(Captured {
                authorization,
                body: serde_json::from_slice(&buf).unwrap_or(Value::Null),
            });
            let mut stream = reader.into_inner();
            write!(
                stream,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
            stream.flush().unwrap();
        }
    });
    (url, seen, handle)
}

fn fast_retry() -> RetryPolicy {
    RetryPolicy {
        base_delay_ms: 1,
        max_delay_ms: 5,
        ..RetryPolicy::default()
    }
}

const OK_BODY: &str = r#"{"choices":[{"message":{"role":"assistant","content":"Rating: 5. Clear and specific."}}]}"#;

#[test]
fn retries_transient_statuses_then_succeeds() {
    let (url, seen, handle) = serve(vec![
        (503, "{}".into()),
        (503, "{}".into()),
        (200, OK_BODY.into()),
    ]);
    let backend = RemoteBackend::with_key(RemoteConfig::new(url, "test-model"), Some("sekrit".into()));
    let judge = Judge::new(Arc::new(backend)).with_retry(fast_retry());
    let response = judge.submit(&JudgeRequest::user("Rate this.").with_tag("c1/zs/rate")).unwrap();
    handle.join().unwrap();

    assert_eq!(response.raw_text, "Rating: 5. Clear and specific.");
    assert_eq!(response.attempts, 3);
    assert_eq!(response.backend_id, "remote:test-model");
    let seen = seen.lock().unwrap();
    assert_eq!(seen.len(), 3);
    assert_eq!(seen[0].authorization.as_deref(), Some("Bearer sekrit"));
    assert_eq!(seen[2].body["model"], "test-model");
    assert_eq!(seen[2].body["messages"][0]["content"], "Rate this.");
    assert_eq!(seen[2].body["temperature"], 0.1);
    assert_eq!(seen[2].body["max_tokens"], 200);
}

#[test]
fn auth_rejection_is_not_retried() {
    let (url, seen, handle) = serve(vec![(401, r#"{"error":"bad key"}"#.into())]);
    let judge = Judge::new(Arc::new(RemoteBackend::with_key(RemoteConfig::new(url, "m"), None))).with_retry(fast_retry());
    let err = judge.submit(&JudgeRequest::user("x")).unwrap_err();
    handle.join().unwrap();
    assert!(matches!(err, JudgeError::AuthRejected { status: 401 }), "{err}");
    assert_eq!(seen.lock().unwrap().len(), 1);
    assert!(seen.lock().unwrap()[0].authorization.is_none());
}

#[test]
fn persistent_outage_exhausts_retries() {
    let (url, _, handle) = serve(vec![(500, "{}".into()); 5]);
    let judge = Judge::new(Arc::new(RemoteBackend::with_key(RemoteConfig::new(url, "m"), None))).with_retry(fast_retry());
    let err = judge.submit(&JudgeRequest::user("x")).unwrap_err();
    handle.join().unwrap();
    assert!(matches!(err, JudgeError::TransportExhausted { attempts: 5, .. }), "{err}");
    assert!(err.is_transport());
}

#[test]
fn client_error_is_reported_with_body() {
    let (url, _, handle) = serve(vec![(400, r#"{"error":"context too long"}"#.into())]);
    let judge = Judge::new(Arc::new(RemoteBackend::with_key(RemoteConfig::new(url, "m"), None)));
    let err = judge.submit(&JudgeRequest::user("x")).unwrap_err();
    handle.join().unwrap();
    match err {
        JudgeError::BackendRefused { status, body } => {
            assert_eq!(status, 400);
            assert!(body.contains("context too long"));
        }
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn empty_content_is_data() {
    let (url, _, handle) = serve(vec![(200, r#"{"choices":[{"message":{"content":""}}]}"#.into())]);
    let judge = Judge::new(Arc::new(RemoteBackend::with_key(RemoteConfig::new(url, "m"), None)));
    let response = judge.submit(&JudgeRequest::user("x")).unwrap();
    handle.join().unwrap();
    assert_eq!(response.raw_text, "");
}
