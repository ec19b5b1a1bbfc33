//! Test-side oracles. These deliberately avoid the library's own evaluation
//! code: predicates are checked on the JSON form of options, and metrics are
//! recounted straight from turn records.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use serde_json::Value;
use tripgym::domain::{EpisodeLog, Mode};

/// Evaluates one preference predicate (JSON form) against an option's
/// visible fields (JSON form).
pub fn predicate_holds(pred: &Value, fields: &Value) -> bool {
    let get = |name: &str| fields.get(name);
    let eq = |a: &str, b: &str| a.to_lowercase() == b.to_lowercase();
    match pred["kind"].as_str().unwrap() {
        "text_is" => get(pred["field"].as_str().unwrap())
            .and_then(Value::as_str)
            .is_some_and(|v| eq(v, pred["value"].as_str().unwrap())),
        "text_in" => get(pred["field"].as_str().unwrap()).and_then(Value::as_str).is_some_and(|v| {
            pred["values"].as_array().unwrap().iter().any(|w| eq(v, w.as_str().unwrap()))
        }),
        "list_has" => get(pred["field"].as_str().unwrap()).and_then(Value::as_array).is_some_and(|items| {
            items.iter().any(|i| i.as_str().is_some_and(|i| eq(i, pred["item"].as_str().unwrap())))
        }),
        "at_least" => get(pred["field"].as_str().unwrap())
            .and_then(Value::as_i64)
            .is_some_and(|v| v >= pred["min"].as_i64().unwrap()),
        "at_most" => get(pred["field"].as_str().unwrap())
            .and_then(Value::as_i64)
            .is_some_and(|v| v <= pred["max"].as_i64().unwrap()),
        "list_len_at_most" => get(pred["field"].as_str().unwrap())
            .and_then(Value::as_array)
            .is_some_and(|items| items.len() as u64 <= pred["max"].as_u64().unwrap()),
        "service_offered" => get("service_costs")
            .and_then(Value::as_object)
            .is_some_and(|s| s.contains_key(pred["service"].as_str().unwrap())),
        other => panic!("unknown predicate kind {other}"),
    }
}

/// Base cost plus the charges of every service a preference requires.
pub fn total_cost(fields: &Value, preferences: &[Value]) -> i64 {
    let base = fields["base_cost"].as_i64().unwrap();
    let extra: i64 = preferences
        .iter()
        .filter(|p| p["predicate"]["kind"] == "service_offered")
        .filter_map(|p| fields["service_costs"][p["predicate"]["service"].as_str().unwrap()].as_i64())
        .sum();
    base + extra
}

/// Checks one aspect task (JSON form); returns a description of every
/// violation found.
pub fn audit_aspect(task: &Value) -> Vec<String> {
    let prefs = task["preferences"].as_array().unwrap();
    let options = task["options"].as_array().unwrap();
    let mut problems = Vec::new();
    let satisfies = |o: &Value| prefs.iter().all(|p| predicate_holds(&p["predicate"], &o["visible_fields"]));
    let mut correct_costs = Vec::new();
    let mut best_cost = None;
    for o in options {
        let id = o["option_id"].as_str().unwrap();
        match o["label"].as_str().unwrap() {
            "best" | "correct" => {
                if !satisfies(o) {
                    problems.push(format!("{id} is labelled correct but violates a preference"));
                }
                let c = total_cost(&o["visible_fields"], prefs);
                correct_costs.push((id.to_string(), c));
                if o["label"] == "best" {
                    if best_cost.is_some() {
                        problems.push(format!("{id} is a second best option"));
                    }
                    best_cost = Some(c);
                }
            }
            "wrong" if satisfies(o) => {
                problems.push(format!("{id} is labelled wrong but satisfies every preference"));
            }
            _ => {}
        }
    }
    match best_cost {
        None => problems.push("no best option".into()),
        Some(b) => {
            let ties = correct_costs.iter().filter(|(_, c)| *c <= b).count();
            if ties != 1 {
                problems.push(format!("best cost {b} is not the strict minimum of {correct_costs:?}"));
            }
        }
    }
    problems
}

/// Metrics recomputed from raw turn records, without the metrics module.
#[derive(Debug, Default, Clone, Copy)]
pub struct Recount {
    pub aspects: f64,
    pub best: f64,
    pub correct: f64,
    pub score_sum: f64,
    pub episodes: f64,
    pub searches: f64,
    pub aligned: f64,
    pub actions: f64,
    pub type1: f64,
    pub prefs: f64,
    pub active: f64,
    pub passive: f64,
    pub timed: f64,
    pub first_idx: f64,
    pub weighted: f64,
}

impl Recount {
    pub fn add(&mut self, log: &EpisodeLog, mode: Mode) {
        let v = serde_json::to_value(log).unwrap();
        let cfg = &v["config"];
        let scale = cfg["reward_scale"].as_f64().unwrap();
        let penalty = cfg["step_penalty"].as_f64().unwrap();
        // aspect -> [(turn, label, reward)]
        let mut answers: BTreeMap<String, Vec<(u64, String, f64)>> = BTreeMap::new();
        for t in v["turns"].as_array().unwrap() {
            match t["choice"].as_str() {
                Some("search") => {
                    self.searches += 1.0;
                    if t["judgement"]["aligned"] == true {
                        self.aligned += 1.0;
                    }
                }
                Some("action") => {
                    self.actions += 1.0;
                    if t["classification"]["kind"] == 1 {
                        self.type1 += 1.0;
                    }
                }
                Some("answer") if t["answer_eval"]["status"] == "recorded" => {
                    let r = (t["reward"].as_f64().unwrap() / scale + penalty).clamp(0.0, 1.0);
                    answers.entry(t["answer_eval"]["aspect"].as_str().unwrap().to_string()).or_default().push((
                        t["turn_index"].as_u64().unwrap(),
                        t["answer_eval"]["label"].as_str().unwrap().to_string(),
                        r,
                    ));
                }
                _ => {}
            }
            for r in t["revealed"].as_array().unwrap() {
                if r["mode"] == "active" {
                    self.active += 1.0;
                } else {
                    self.passive += 1.0;
                }
            }
        }
        let aspects = v["aspects"].as_array().unwrap();
        let mut score = 0.0;
        for a in aspects {
            let list = answers.get(a.as_str().unwrap()).cloned().unwrap_or_default();
            let s = match mode {
                Mode::SingleChoice => list.first().map(|x| x.2).unwrap_or(0.0),
                Mode::MultiChoice => list.iter().map(|x| x.2).fold(0.0, f64::max),
            };
            score += s;
            if list.iter().any(|x| x.1 == "best") {
                self.best += 1.0;
            }
            if list.iter().any(|x| x.1 == "best" || x.1 == "correct") {
                self.correct += 1.0;
            }
            if let Some(x) = list.iter().find(|x| x.2 > 0.0) {
                self.timed += 1.0;
                self.first_idx += x.0 as f64;
                self.weighted += x.2 / (x.0 as f64 + 1.0);
            }
        }
        self.aspects += aspects.len() as f64;
        self.score_sum += if aspects.is_empty() { 0.0 } else { score / aspects.len() as f64 };
        self.episodes += 1.0;
        self.prefs += v["preference_ids"].as_array().unwrap().len() as f64;
    }

    fn div(a: f64, b: f64) -> f64 {
        if b == 0.0 {
            0.0
        } else {
            a / b
        }
    }

    /// best, correct, score, valid search, valid action, active, passive,
    /// mean first index, weighted score, coverage.
    pub fn values(&self) -> [f64; 10] {
        [
            Self::div(self.best, self.aspects),
            Self::div(self.correct, self.aspects),
            Self::div(self.score_sum, self.episodes),
            Self::div(self.aligned, self.searches),
            Self::div(self.type1, self.actions),
            Self::div(self.active, self.prefs),
            Self::div(self.passive, self.prefs),
            Self::div(self.first_idx, self.timed),
            Self::div(self.weighted, self.aspects),
            Self::div(self.timed, self.aspects),
        ]
    }
}

/// A one-connection-at-a-time HTTP server that records request bodies and
/// answers each with the next canned chat-completions body.
pub struct MockEndpoint {
    pub url: String,
    pub requests: Arc<Mutex<Vec<(String, Value)>>>,
    _handle: JoinHandle<()>,
}

impl MockEndpoint {
    pub fn start(responses: Vec<Value>) -> MockEndpoint {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
        let requests = Arc::new(Mutex::new(Vec::new()));
        let seen = requests.clone();
        let handle = std::thread::spawn(move || {
            let mut queue = responses.into_iter();
            for stream in listener.incoming() {
                let Ok(mut stream) = stream else { return };
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut len = 0usize;
                let mut auth = String::new();
                loop {
                    let mut line = String::new();
                    if reader.read_line(&mut line).unwrap() == 0 || line == "\r\n" {
                        break;
                    }
                    let lower = line.to_ascii_lowercase();
                    if let Some(v) = lower.strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap();
                    }
                    if lower.starts_with("authorization:") {
                        auth = line["authorization:".len()..].trim().to_string();
                    }
                }
                let mut body = vec![0; len];
                reader.read_exact(&mut body).unwrap();
                seen.lock().unwrap().push((auth, serde_json::from_slice(&body).unwrap()));
                let reply = queue.next().unwrap_or_else(|| serde_json::json!({"error": "exhausted"}));
                let text = reply.to_string();
                write!(
                    stream,
                    "HTTP/1.1 200 OK\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{}",
                    text.len(),
                    text
                )
                .unwrap();
            }
        });
        MockEndpoint { url, requests, _handle: handle }
    }
}

/// A chat-completions response whose message content is `content`.
pub fn chat_reply(content: &str) -> Value {
    serde_json::json!({"choices": [{"index": 0, "message": {"role": "assistant", "content": content}}]})
}

/// Reads a golden prompt file.
pub fn golden(name: &str) -> String {
    std::fs::read_to_string(format!("{}/tests/golden/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

/// Replaces `{{slot}}` markers by plain string substitution.
pub fn fill(template: &str, values: &[(&str, &str)]) -> String {
    let mut out = template.to_string();
    for (k, v) in values {
        out = out.replace(&format!("{{{{{k}}}}}"), v);
    }
    out
}
