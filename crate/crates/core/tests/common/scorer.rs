//! In-process HTTP scorers for exercising the remote client.
#![allow(dead_code)]

use std::sync::Arc;
use std::thread::JoinHandle;

use hinfill::lm::wire::{EmbedResponse, ErrorResponse, FillRequest, FillResponse, ScoreResponse, TokensRequest};
use hinfill::lm::ScorerBackend;
use hinfill::verbalize::MaskedTemplate;

pub type Handler = Box<dyn Fn(&str, &str, &str) -> (u16, String) + Send + Sync>;

pub struct MockServer {
    pub url: String,
    server: Arc<tiny_http::Server>,
    thread: Option<JoinHandle<()>>,
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

/// Serve `handler(method, path, body) -> (status, body)` on a free local port.
pub fn serve(handler: Handler) -> MockServer {
    let server = Arc::new(tiny_http::Server::http("127.0.0.1:0").unwrap());
    let port = server.server_addr().to_ip().unwrap().port();
    let s = server.clone();
    let thread = std::thread::spawn(move || {
        for mut req in s.incoming_requests() {
            let mut body = String::new();
            let _ = req.as_reader().read_to_string(&mut body);
            let (status, out) = handler(req.method().as_str(), req.url(), &body);
            let header = tiny_http::Header::from_bytes("Content-Type", "application/json").unwrap();
            let _ = req.respond(tiny_http::Response::from_string(out).with_status_code(status).with_header(header));
        }
    });
    MockServer {
        url: format!("http://127.0.0.1:{port}"),
        server,
        thread: Some(thread),
    }
}

fn error(status: u16, msg: impl ToString) -> (u16, String) {
    (status, serde_json::to_string(&ErrorResponse { error: msg.to_string() }).unwrap())
}

fn ok<T: serde::Serialize>(v: &T) -> (u16, String) {
    (200, serde_json::to_string(v).unwrap())
}

/// A scorer service backed by any local backend.
pub fn backend_handler<B: ScorerBackend + 'static>(backend: B) -> Handler {
    Box::new(move |method, path, body| match (method, path) {
        ("GET", "/v1/info") => match backend.info() {
            Ok(i) => ok(&i),
            Err(e) => error(500, e),
        },
        ("POST", "/v1/score") => match serde_json::from_str::<TokensRequest>(body) {
            Ok(r) => match backend.score(&r.tokens) {
                Ok(log_prob) => ok(&ScoreResponse { log_prob }),
                Err(e) => error(400, e),
            },
            Err(e) => error(400, e),
        },
        ("POST", "/v1/embed") => match serde_json::from_str::<TokensRequest>(body) {
            Ok(r) => match backend.embed(&r.tokens) {
                Ok(vector) => ok(&EmbedResponse { vector }),
                Err(e) => error(400, e),
            },
            Err(e) => error(400, e),
        },
        ("POST", "/v1/fill") => {
            let r: FillRequest = match serde_json::from_str(body) {
                Ok(r) => r,
                Err(e) => return error(400, e),
            };
            let t = match MaskedTemplate::try_from(r.template) {
                Ok(t) => t,
                Err(e) => return error(400, e),
            };
            match backend.fill(&t, r.mask_position, r.candidates.as_deref(), r.k) {
                Ok(fills) => ok(&FillResponse { fills }),
                Err(e) => error(400, e),
            }
        }
        _ => error(404, format!("no route {method} {path}")),
    })
}

#[derive(Clone, Debug, serde::Deserialize)]
pub struct GoldenCase {
    pub name: String,
    pub method: String,
    pub path: String,
    pub request: serde_json::Value,
    pub status: u16,
    pub response: serde_json::Value,
}

pub fn golden_cases() -> Vec<GoldenCase> {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let mut files: Vec<_> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    files
        .iter()
        .map(|p| serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap())
        .collect()
}

/// Answers exactly the golden requests; anything else gets 418.
pub fn replay_handler(cases: Vec<GoldenCase>) -> Handler {
    Box::new(move |method, path, body| {
        let sent: serde_json::Value = if body.is_empty() {
            serde_json::Value::Null
        } else {
            serde_json::from_str(body).unwrap_or(serde_json::Value::String(body.to_string()))
        };
        for c in &cases {
            if c.method == method && c.path == path && c.request == sent {
                return (c.status, c.response.to_string());
            }
        }
        error(418, format!("no golden case for {method} {path} {body}"))
    })
}
