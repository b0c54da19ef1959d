//! Minimal OpenAI-style endpoint on a local port for engine tests.
#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;

use serde_json::{json, Value};

/// Status and raw body for one request; the argument is the request body and
/// the 0-based index of the request.
pub type Handler = dyn Fn(&Value, usize) -> (u16, String) + Send + Sync;

pub struct MockServer {
    pub base_url: String,
    hits: Arc<AtomicUsize>,
}

impl MockServer {
    pub fn start(handler: impl Fn(&Value, usize) -> (u16, String) + Send + Sync + 'static) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let base_url = format!("http://{}/v1", listener.local_addr().unwrap());
        let hits = Arc::new(AtomicUsize::new(0));
        let handler: Arc<Handler> = Arc::new(handler);
        let counter = hits.clone();
        thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(stream) = stream else { break };
                let (handler, counter) = (handler.clone(), counter.clone());
                thread::spawn(move || serve(stream, &*handler, &counter));
            }
        });
        MockServer { base_url, hits }
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }
}

fn serve(stream: TcpStream, handler: &Handler, hits: &AtomicUsize) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut writer = stream;
    let mut line = String::new();
    if reader.read_line(&mut line).unwrap_or(0) == 0 {
        return;
    }
    let mut length = 0usize;
    loop {
        line.clear();
        reader.read_line(&mut line).unwrap();
        let l = line.trim_end();
        if l.is_empty() {
            break;
        }
        if let Some((k, v)) = l.split_once(':') {
            if k.eq_ignore_ascii_case("content-length") {
                length = v.trim().parse().unwrap();
            }
        }
    }
    let mut body = vec![0u8; length];
    reader.read_exact(&mut body).unwrap();
    let request: Value = serde_json::from_slice(&body).unwrap_or(Value::Null);
    let n = hits.fetch_add(1, Ordering::SeqCst);
    let (status, text) = handler(&request, n);
    let reply = format!(
        "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{text}",
        text.len()
    );
    let _ = writer.write_all(reply.as_bytes());
}

/// Wraps a payload the way a chat-completions endpoint does.
pub fn completion(content: &str) -> String {
    json!({"choices": [{"index": 0, "message": {"role": "assistant", "content": content}}]}).to_string()
}

/// Schema id named in the system message.
pub fn schema_of(request: &Value) -> String {
    let system = request["messages"][0]["content"].as_str().unwrap_or_default();
    let start = system.find('`').map(|i| i + 1).unwrap_or(0);
    let end = system[start..].find('`').map(|i| start + i).unwrap_or(start);
    system[start..end].to_string()
}

fn user_prompt(request: &Value) -> &str {
    request["messages"][1]["content"].as_str().unwrap_or_default()
}

/// A schema-valid reply to any engine request. Varies with the prompt so
/// different posts get different records.
pub fn valid_reply(request: &Value) -> String {
    let prompt = user_prompt(request);
    let salt = prompt.bytes().fold(0usize, |h, b| h.wrapping_mul(31).wrapping_add(b as usize));
    let payload = match schema_of(request).as_str() {
        "summary.v1" => {
            let q = ["How do I build an emergency fund?", "Should I pay off my car loan?", "How much should go to my 401k?"];
            if salt % 2 == 0 {
                json!({"core_query": q[salt % 3], "additional_queries": []})
            } else {
                json!({"core_query": q[salt % 3], "additional_queries": [q[(salt + 1) % 3]]})
            }
        }
        "needs.v1" => {
            let labels = [("emergency fund", "saving"), ("car loan", "debt repayment"), ("retirement", "investing")];
            let n = prompt.lines().filter(|l| l.trim_start().starts_with(|c: char| c.is_ascii_digit())).count().max(1);
            let needs: Vec<Value> = (0..n).map(|i| {
                let (p, q) = labels[(salt + i) % 3];
                json!({"purpose": p, "process": q})
            }).collect();
            json!({"needs": needs})
        }
        "hierarchy.v1" => {
            let opts = [("safety_l1", "savings_emergencies"), ("basic", "consumption_immediate"), ("self_actualization", "retirement_wealth_lifestyle")];
            let (a, b) = opts[salt % 3];
            json!({"nhf_level": a, "npf_level": b})
        }
        "behavior.v1" => {
            let stress = ["low", "slight", "moderate", "high"][salt % 4];
            let risk = ["cautious", "calculative", "chance_taking", "unassigned"][salt % 4];
            json!({"stress": stress, "risk": risk})
        }
        "age_income.v1" => json!({"ages": [30], "incomes": [{"amount": 5000, "period": "monthly", "currency": "USD"}]}),
        other => panic!("unexpected schema {other}"),
    };
    completion(&payload.to_string())
}
