//! Minimal in-process chat-completion server for tests and offline demos.
//!
//! It accepts `POST /v1/chat/completions`, records each request body and
//! answers with an OpenAI-shaped response. One request per connection.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use serde_json::{json, Value};

use super::{ChatMessage, ScriptTable, ScriptedBackend};

#[derive(Debug, Clone)]
pub struct CapturedRequest {
    pub method: String,
    pub path: String,
    pub authorization: Option<String>,
    pub body: Value,
}

impl CapturedRequest {
    pub fn temperature(&self) -> Option<f64> {
        self.body.get("temperature").and_then(Value::as_f64)
    }

    pub fn messages(&self) -> Vec<ChatMessage> {
        self.body
            .get("messages")
            .cloned()
            .and_then(|m| serde_json::from_value(m).ok())
            .unwrap_or_default()
    }
}

pub struct StubReply {
    pub status: u16,
    pub body: String,
}

impl StubReply {
    pub fn content(content: &str) -> Self {
        StubReply {
            status: 200,
            body: json!({
                "id": "stub",
                "object": "chat.completion",
                "choices": [{
                    "index": 0,
                    "message": {"role": "assistant", "content": content},
                    "finish_reason": "stop"
                }]
            })
            .to_string(),
        }
    }
}

type Responder = dyn Fn(&Value) -> StubReply + Send + Sync;

pub struct StubServer {
    addr: SocketAddr,
    captured: Arc<Mutex<Vec<CapturedRequest>>>,
    stop: Arc<AtomicBool>,
    handle: Option<JoinHandle<()>>,
}

impl StubServer {
    pub fn start(responder: impl Fn(&Value) -> StubReply + Send + Sync + 'static) -> std::io::Result<Self> {
        let listener = TcpListener::bind("127.0.0.1:0")?;
        let addr = listener.local_addr()?;
        let captured = Arc::new(Mutex::new(Vec::new()));
        let stop = Arc::new(AtomicBool::new(false));
        let responder: Arc<Responder> = Arc::new(responder);
        let handle = {
            let captured = Arc::clone(&captured);
            let stop = Arc::clone(&stop);
            std::thread::spawn(move || {
                for stream in listener.incoming() {
                    if stop.load(Ordering::SeqCst) {
                        break;
                    }
                    let Ok(stream) = stream else { continue };
                    if let Err(e) = serve(stream, &captured, responder.as_ref()) {
                        log::debug!("stub connection error: {e}");
                    }
                }
            })
        };
        Ok(StubServer {
            addr,
            captured,
            stop,
            handle: Some(handle),
        })
    }

    /// Always answers with `content`.
    pub fn fixed(content: &str) -> std::io::Result<Self> {
        let content = content.to_string();
        StubServer::start(move |_| StubReply::content(&content))
    }

    /// Answers like a [`ScriptedBackend`] over the posted messages.
    pub fn scripted(table: ScriptTable) -> std::io::Result<Self> {
        let backend = ScriptedBackend::new(table);
        StubServer::start(move |body| {
            let messages: Vec<ChatMessage> = body
                .get("messages")
                .cloned()
                .and_then(|m| serde_json::from_value(m).ok())
                .unwrap_or_default();
            StubReply::content(&backend.respond(&messages))
        })
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn captured(&self) -> Vec<CapturedRequest> {
        self.captured.lock().expect("capture lock").clone()
    }
}

impl Drop for StubServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        let _ = TcpStream::connect(self.addr);
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

fn serve(stream: TcpStream, captured: &Mutex<Vec<CapturedRequest>>, responder: &Responder) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut request_line = String::new();
    if reader.read_line(&mut request_line)? == 0 {
        return Ok(());
    }
    let mut parts = request_line.split_whitespace();
    let method = parts.next().unwrap_or_default().to_string();
    let path = parts.next().unwrap_or_default().to_string();

    let mut content_length = 0usize;
    let mut authorization = None;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line)? == 0 {
            break;
        }
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        if let Some((name, value)) = line.split_once(':') {
            let value = value.trim();
            match name.trim().to_ascii_lowercase().as_str() {
                "content-length" => content_length = value.parse().unwrap_or(0),
                "authorization" => authorization = Some(value.to_string()),
                _ => {}
            }
        }
    }
    let mut body = vec![0u8; content_length];
    reader.read_exact(&mut body)?;
    let body: Value = serde_json::from_slice(&body).unwrap_or(Value::Null);

    let reply = if method == "POST" && path == "/v1/chat/completions" {
        responder(&body)
    } else {
        StubReply {
            status: 404,
            body: json!({"error": "not found"}).to_string(),
        }
    };
    captured.lock().expect("capture lock").push(CapturedRequest {
        method,
        path,
        authorization,
        body,
    });

    let reason = if reply.status < 400 { "OK" } else { "Error" };
    let mut stream = stream;
    write!(
        stream,
        "HTTP/1.1 {} {}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
        reply.status,
        reason,
        reply.body.len(),
        reply.body
    )?;
    stream.flush()
}
