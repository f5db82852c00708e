#![allow(dead_code)]

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde_json::Value;
use synthpoll::embed_index::RoleIndex;
use synthpoll::llm_gateway::{mock_script, BackendConfig, MockBackend, MockFallback};
use synthpoll::survey_runner::{assemble_prompt, Survey};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn fixture_survey() -> Survey {
    Survey::load(&fixture("survey.json")).unwrap()
}

/// respondent -> question -> raw reply text
pub fn scripted_answers() -> BTreeMap<String, BTreeMap<String, String>> {
    let mut reader = csv::Reader::from_path(fixture("scripted_answers.csv")).unwrap();
    let mut out: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
    for record in reader.records() {
        let record = record.unwrap();
        out.entry(record[0].to_string())
            .or_default()
            .insert(record[1].to_string(), record[2].to_string());
    }
    out
}

/// Role ids in ascending order mapped to R1, R2, ...
pub fn role_map(store: &RoleIndex) -> BTreeMap<String, String> {
    store
        .entries()
        .enumerate()
        .map(|(i, e)| (e.role_id.clone(), format!("R{}", i + 1)))
        .collect()
}

/// Mock config whose script answers each (role, question) pair in `store`
/// with the fixture reply of the mapped respondent.
pub fn scripted_poll_config(store: &RoleIndex, survey: &Survey) -> BackendConfig {
    let answers = scripted_answers();
    let map = role_map(store);
    let probe = mock_script([], MockFallback::FixedText("<unscripted>".into()));
    let mut entries = Vec::new();
    for entry in store.entries() {
        let respondent = &map[&entry.role_id];
        for q in &survey.questions {
            let request = assemble_prompt(&entry.text_snapshot, q, &probe).unwrap();
            entries.push((request.prompt_hash(), answers[respondent][&q.id].clone()));
        }
    }
    mock_script(entries, MockFallback::FixedText("<unscripted>".into()))
}

pub fn scripted_poll_backend(store: &RoleIndex, survey: &Survey) -> MockBackend {
    MockBackend::new(scripted_poll_config(store, survey)).unwrap()
}

#[derive(Clone)]
pub enum StubReply {
    Completion(String),
    Status(u16),
    RawBody(String),
    Delayed(Duration, String),
}

#[derive(Debug, Clone)]
pub struct RecordedRequest {
    pub path: String,
    pub headers: BTreeMap<String, String>,
    pub body: Value,
}

/// Minimal HTTP/1.1 server speaking just enough of the chat-completions
/// endpoint for gateway tests. One request per connection.
pub struct StubServer {
    pub base_url: String,
    requests: Arc<Mutex<Vec<RecordedRequest>>>,
}

impl StubServer {
    pub fn start<F>(reply: F) -> Self
    where
        F: Fn(usize, &Value) -> StubReply + Send + Sync + 'static,
    {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let base_url = format!("http://{}", listener.local_addr().unwrap());
        let requests = Arc::new(Mutex::new(Vec::new()));
        let reply = Arc::new(reply);
        let log = requests.clone();
        std::thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(stream) = stream else { continue };
                let (log, reply) = (log.clone(), reply.clone());
                std::thread::spawn(move || handle(stream, &log, reply.as_ref()));
            }
        });
        Self { base_url, requests }
    }

    pub fn completing(text: &str) -> Self {
        let text = text.to_string();
        Self::start(move |_, _| StubReply::Completion(text.clone()))
    }

    pub fn requests(&self) -> Vec<RecordedRequest> {
        self.requests.lock().unwrap().clone()
    }
}

fn handle(
    stream: TcpStream,
    log: &Mutex<Vec<RecordedRequest>>,
    reply: &(dyn Fn(usize, &Value) -> StubReply + Send + Sync),
) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut request_line = String::new();
    if reader.read_line(&mut request_line).is_err() {
        return;
    }
    let path = request_line
        .split_whitespace()
        .nth(1)
        .unwrap_or("")
        .to_string();
    let mut headers = BTreeMap::new();
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line).unwrap_or(0) == 0 || line == "\r\n" {
            break;
        }
        if let Some((k, v)) = line.split_once(':') {
            headers.insert(k.trim().to_ascii_lowercase(), v.trim().to_string());
        }
    }
    let len: usize = headers
        .get("content-length")
        .and_then(|v| v.parse().ok())
        .unwrap_or(0);
    let mut body = vec![0u8; len];
    if reader.read_exact(&mut body).is_err() {
        return;
    }
    let body: Value = serde_json::from_slice(&body).unwrap_or(Value::Null);
    let index = {
        let mut log = log.lock().unwrap();
        log.push(RecordedRequest {
            path,
            headers,
            body: body.clone(),
        });
        log.len() - 1
    };
    let (status, payload) = match reply(index, &body) {
        StubReply::Completion(text) => (200, completion_body(&text)),
        StubReply::Status(code) => (code, r#"{"error":"unavailable"}"#.to_string()),
        StubReply::RawBody(raw) => (200, raw),
        StubReply::Delayed(delay, text) => {
            std::thread::sleep(delay);
            (200, completion_body(&text))
        }
    };
    let mut stream = stream;
    let _ = write!(
        stream,
        "HTTP/1.1 {status} Stub\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
        payload.len()
    );
    let _ = stream.flush();
}

pub fn completion_body(text: &str) -> String {
    serde_json::json!({
        "id": "stub",
        "object": "chat.completion",
        "choices": [{"index": 0, "message": {"role": "assistant", "content": text}, "finish_reason": "stop"}]
    })
    .to_string()
}
