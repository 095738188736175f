//! Scripted chat-completions endpoint for offline runs and tests.

use std::collections::VecDeque;
use std::net::{SocketAddr, TcpListener};
use std::path::Path;
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::oneshot;

use crate::HarnessError;

pub const ROUTE: &str = "/v1/chat/completions";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MockUsage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub total_tokens: u64,
}

impl MockUsage {
    pub fn new(prompt_tokens: u64, completion_tokens: u64) -> Self {
        Self { prompt_tokens, completion_tokens, total_tokens: prompt_tokens + completion_tokens }
    }
}

/// One canned reply.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MockReply {
    pub content: String,
    #[serde(default)]
    pub usage: MockUsage,
    /// Sleep before answering.
    #[serde(default)]
    pub delay_ms: u64,
}

impl MockReply {
    pub fn new(content: impl Into<String>) -> Self {
        Self { content: content.into(), usage: MockUsage::default(), delay_ms: 0 }
    }

    pub fn with_usage(mut self, prompt_tokens: u64, completion_tokens: u64) -> Self {
        self.usage = MockUsage::new(prompt_tokens, completion_tokens);
        self
    }

    pub fn with_delay_ms(mut self, delay_ms: u64) -> Self {
        self.delay_ms = delay_ms;
        self
    }
}

/// Reads a script file: a JSON array of replies.
pub fn load_script(path: impl AsRef<Path>) -> Result<Vec<MockReply>, HarnessError> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| HarnessError::Config(format!("mock script: {e}")))
}

#[derive(Default)]
struct Shared {
    queue: Mutex<VecDeque<MockReply>>,
    requests: Mutex<Vec<Value>>,
}

/// A running mock endpoint. Stops when dropped.
pub struct MockServer {
    addr: SocketAddr,
    shared: Arc<Shared>,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<()>>,
}

impl MockServer {
    /// Serves `script` on `127.0.0.1:port`; port 0 picks a free port.
    pub fn start(script: Vec<MockReply>, port: u16) -> Result<Self, HarnessError> {
        if script.is_empty() {
            return Err(HarnessError::Config("mock script is empty".into()));
        }
        let listener = TcpListener::bind(("127.0.0.1", port))?;
        listener.set_nonblocking(true)?;
        let addr = listener.local_addr()?;
        let shared = Arc::new(Shared { queue: Mutex::new(script.into()), requests: Mutex::default() });
        let (tx, rx) = oneshot::channel();
        let runtime = tokio::runtime::Builder::new_multi_thread().worker_threads(2).enable_all().build()?;
        let state = shared.clone();
        let thread = std::thread::spawn(move || {
            runtime.block_on(async move {
                let listener = tokio::net::TcpListener::from_std(listener).expect("listener registers");
                let app = Router::new().route(ROUTE, post(complete)).with_state(state);
                let _ = axum::serve(listener, app)
                    .with_graceful_shutdown(async {
                        let _ = rx.await;
                    })
                    .await;
            });
        });
        Ok(Self { addr, shared, shutdown: Some(tx), thread: Some(thread) })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    /// Full chat-completions URL.
    pub fn url(&self) -> String {
        format!("http://{}{ROUTE}", self.addr)
    }

    /// Request bodies received so far, in arrival order.
    pub fn requests(&self) -> Vec<Value> {
        self.shared.requests.lock().expect("lock").clone()
    }

    pub fn remaining(&self) -> usize {
        self.shared.queue.lock().expect("lock").len()
    }

    /// Blocks until the process is killed.
    pub fn wait(mut self) {
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

fn error(status: StatusCode, message: &str) -> Response {
    (status, Json(json!({ "error": { "message": message } }))).into_response()
}

async fn complete(State(shared): State<Arc<Shared>>, body: Bytes) -> Response {
    let request: Value = match serde_json::from_slice(&body) {
        Ok(v) => v,
        Err(e) => return error(StatusCode::BAD_REQUEST, &format!("invalid JSON: {e}")),
    };
    if !request.get("messages").is_some_and(Value::is_array) {
        return error(StatusCode::BAD_REQUEST, "request has no messages array");
    }
    let model = request.get("model").and_then(Value::as_str).unwrap_or("mock").to_string();
    let reply = {
        shared.requests.lock().expect("lock").push(request);
        shared.queue.lock().expect("lock").pop_front()
    };
    let Some(reply) = reply else {
        return error(StatusCode::GONE, "mock script exhausted");
    };
    if reply.delay_ms > 0 {
        tokio::time::sleep(Duration::from_millis(reply.delay_ms)).await;
    }
    Json(json!({
        "id": "mock",
        "object": "chat.completion",
        "model": model,
        "choices": [{
            "index": 0,
            "message": { "role": "assistant", "content": reply.content },
            "finish_reason": "stop"
        }],
        "usage": reply.usage,
    }))
    .into_response()
}

#[cfg(test)]
mod tests {
    use super::*;
    use cave_agent::{ChatClient, ChatError, ChatMessage, EndpointConfig, HttpChatClient};

    fn client(server: &MockServer) -> HttpChatClient {
        HttpChatClient::with_api_key(EndpointConfig::new(server.url(), "mock-model"), None).unwrap()
    }

    #[test]
    fn queue_order_then_exhaustion() {
        let script = vec![MockReply::new("a"), MockReply::new("b"), MockReply::new("c").with_usage(12, 34)];
        let server = MockServer::start(script, 0).unwrap();
        let c = client(&server);
        let msgs = [ChatMessage::user("hi")];
        assert_eq!(c.complete(&msgs).unwrap().content, "a");
        assert_eq!(c.complete(&msgs).unwrap().content, "b");
        let third = c.complete(&msgs).unwrap();
        assert_eq!(third.content, "c");
        assert_eq!((third.usage.prompt_tokens, third.usage.completion_tokens, third.usage.total_tokens), (12, 34, 46));
        assert!(matches!(c.complete(&msgs), Err(ChatError::Rejected { status: 410, .. })));
        assert_eq!(server.requests().len(), 4);
        assert_eq!(server.requests()[0]["model"], "mock-model");
    }

    #[test]
    fn delay_is_measured() {
        let server = MockServer::start(vec![MockReply::new("x").with_delay_ms(50)], 0).unwrap();
        let got = client(&server).complete(&[ChatMessage::user("hi")]).unwrap();
        assert!(got.usage.latency_secs >= 0.05);
    }

    #[test]
    fn malformed_request_rejected() {
        let server = MockServer::start(vec![MockReply::new("x")], 0).unwrap();
        let http = reqwest::blocking::Client::new();
        let status = http.post(server.url()).body("not json").send().unwrap().status();
        assert_eq!(status.as_u16(), 400);
        let status = http.post(server.url()).body("{\"model\":\"m\"}").send().unwrap().status();
        assert_eq!(status.as_u16(), 400);
        assert_eq!(server.remaining(), 1);
    }

    #[test]
    fn empty_script_refused() {
        assert!(MockServer::start(Vec::new(), 0).is_err());
    }
}
