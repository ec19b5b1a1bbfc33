use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{format_history, Exchange, RevealRequest, RuleBased, SimulatorBackend};
use crate::domain::{Preference, Scenario, SearchJudgement, UtteranceClass, UtteranceKind};
use crate::util::Throttle;
use crate::prompts::{PromptPair, JUDGE_SEARCH, JUDGE_UTTERANCE, RESPOND_NEUTRAL, REVEAL_PREFERENCE, REVEAL_PROACTIVE};

/// Connection settings for a chat-completions-compatible endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RemoteConfig {
    /// Full URL of the chat-completions route.
    pub url: String,
    pub model: String,
    #[serde(skip_serializing)]
    pub api_key: Option<String>,
    pub temperature: f64,
    pub max_tokens: u32,
    pub timeout_secs: f64,
    /// Request budget across all episodes sharing this backend; unset is unlimited.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub requests_per_second: Option<u32>,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        Self {
            url: "http://127.0.0.1:8000/v1/chat/completions".into(),
            model: "gpt-4o".into(),
            api_key: None,
            temperature: 0.0,
            max_tokens: 2048,
            timeout_secs: 15.0,
            requests_per_second: None,
        }
    }
}

impl RemoteConfig {
    /// Overrides fields from `TRIPGYM_SIM_URL`, `TRIPGYM_SIM_MODEL` and
    /// `TRIPGYM_SIM_API_KEY` when set.
    pub fn from_env(mut self) -> Self {
        if let Ok(v) = std::env::var("TRIPGYM_SIM_URL") {
            self.url = v;
        }
        if let Ok(v) = std::env::var("TRIPGYM_SIM_MODEL") {
            self.model = v;
        }
        if let Ok(v) = std::env::var("TRIPGYM_SIM_API_KEY") {
            self.api_key = Some(v);
        }
        self
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RemoteError {
    #[error("BACKEND_UNAVAILABLE: {0}")]
    Unavailable(String),
    #[error("unparseable response: {0}")]
    Parse(String),
}

/// Simulator that renders the judge/response templates and asks a remote
/// model. Transport or parse failures are retried once, then the call
/// degrades: searches become not aligned, classification becomes type 4,
/// and replies fall back to the rule-based renderer.
pub struct RemoteBackend {
    config: RemoteConfig,
    agent: ureq::Agent,
    fallback: RuleBased,
    degraded: AtomicUsize,
    throttle: Option<Throttle>,
}

/// Parses a JSON object from model output, tolerating code fences and
/// surrounding prose.
pub(crate) fn extract_json(text: &str) -> Option<Value> {
    if let Ok(v) = serde_json::from_str::<Value>(text.trim()) {
        return v.is_object().then_some(v);
    }
    let start = text.find('{')?;
    let end = text.rfind('}')?;
    serde_json::from_str::<Value>(&text[start..=end]).ok().filter(Value::is_object)
}

fn flag(v: &Value) -> Option<bool> {
    match v {
        Value::Bool(b) => Some(*b),
        Value::String(s) if s.eq_ignore_ascii_case("true") => Some(true),
        Value::String(s) if s.eq_ignore_ascii_case("false") => Some(false),
        _ => None,
    }
}

impl RemoteBackend {
    pub fn new(config: RemoteConfig, fallback: RuleBased) -> Self {
        let timeout = Duration::from_secs_f64(config.timeout_secs.max(0.001));
        let agent = ureq::Agent::config_builder().timeout_global(Some(timeout)).build().into();
        let throttle = Throttle::per_second(config.requests_per_second);
        Self { config, agent, fallback, degraded: AtomicUsize::new(0), throttle }
    }

    pub fn config(&self) -> &RemoteConfig {
        &self.config
    }

    /// Number of calls that fell back after retrying.
    pub fn degraded_calls(&self) -> usize {
        self.degraded.load(Ordering::Relaxed)
    }

    /// The exact request body sent for a prompt pair.
    pub fn request_body(&self, system: &str, user: &str) -> Value {
        json!({
            "model": self.config.model,
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_tokens,
            "response_format": {"type": "json_object"},
            "messages": [
                {"role": "system", "content": system},
                {"role": "user", "content": user},
            ],
        })
    }

    fn chat_once(&self, system: &str, user: &str) -> Result<Value, RemoteError> {
        if let Some(t) = &self.throttle {
            t.wait();
        }
        let mut req = self.agent.post(&self.config.url);
        if let Some(key) = &self.config.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req
            .send_json(self.request_body(system, user))
            .map_err(|e| RemoteError::Unavailable(e.to_string()))?;
        let body: Value = resp.body_mut().read_json().map_err(|e| RemoteError::Parse(e.to_string()))?;
        let content = body["choices"][0]["message"]["content"]
            .as_str()
            .ok_or_else(|| RemoteError::Parse("missing choices[0].message.content".into()))?;
        extract_json(content).ok_or_else(|| RemoteError::Parse(format!("no JSON object in `{content}`")))
    }

    /// Sends the rendered pair, retrying once; `check` must accept the verdict.
    fn ask<T>(&self, pair: PromptPair, values: &[(&str, &str)], check: impl Fn(&Value) -> Option<T>) -> Option<T> {
        let (system, user) = pair.render(values).expect("simulator templates take these slots");
        for attempt in 0..2 {
            match self.chat_once(&system, &user) {
                Ok(v) => match check(&v) {
                    Some(out) => return Some(out),
                    None => tracing::warn!(prompt = pair.name, attempt, "remote verdict failed validation: {v}"),
                },
                Err(e) => tracing::warn!(prompt = pair.name, attempt, "remote simulator call failed: {e}"),
            }
        }
        self.degraded.fetch_add(1, Ordering::Relaxed);
        None
    }

    fn reply(&self, pair: PromptPair, req: &RevealRequest<'_>) -> Option<String> {
        let preference = format!(
            "Preference: {}\nImplicit elicitation statement: {}",
            req.preference.canonical_statement,
            req.statement()
        );
        let history = format_history(req.history);
        let values = [
            ("preference", preference.as_str()),
            ("conversation_history", history.as_str()),
            ("latest_utterance", req.utterance),
        ];
        self.ask(pair, &values, |v| v["response"].as_str().map(str::to_string).filter(|s| !s.trim().is_empty()))
    }
}

/// Ground truth arguments as a pretty JSON object keyed by aspect.
pub(crate) fn ground_truth_block(scenario: &Scenario) -> String {
    let map: serde_json::Map<String, Value> = scenario
        .aspects
        .iter()
        .map(|a| (a.aspect.as_str().to_string(), json!(a.ground_truth_search_args)))
        .collect();
    serde_json::to_string_pretty(&map).expect("args serialize")
}

pub(crate) fn preferences_block(unrevealed: &[&Preference]) -> String {
    let list: Vec<Value> = unrevealed
        .iter()
        .map(|p| json!({"preference_id": p.preference_id, "aspect": p.aspect, "preference": p.canonical_statement}))
        .collect();
    serde_json::to_string_pretty(&list).expect("preferences serialize")
}

impl SimulatorBackend for RemoteBackend {
    fn name(&self) -> &str {
        "remote"
    }

    fn judge_search(&self, scenario: &Scenario, query: &str) -> SearchJudgement {
        let truth = ground_truth_block(scenario);
        let values = [("agent_request", query), ("ground_truth_arguments", truth.as_str())];
        self.ask(JUDGE_SEARCH, &values, |v| {
            let aligned = flag(&v["alignment_judgement"])?;
            if !aligned {
                return Some(SearchJudgement::not_aligned());
            }
            let aspect = v["alignment_aspect"].as_str()?.parse().ok()?;
            Some(if scenario.aspect(aspect).is_some() {
                SearchJudgement::aligned(aspect)
            } else {
                SearchJudgement::not_aligned()
            })
        })
        .unwrap_or_else(SearchJudgement::not_aligned)
    }

    fn classify_utterance(
        &self,
        scenario: &Scenario,
        history: &[Exchange],
        utterance: &str,
        unrevealed: &[&Preference],
    ) -> UtteranceClass {
        let hist = format_history(history);
        let prefs = preferences_block(unrevealed);
        let values = [
            ("scenario", scenario.description.as_str()),
            ("conversation_history", hist.as_str()),
            ("latest_utterance", utterance),
            ("preferences_list", prefs.as_str()),
        ];
        self.ask(JUDGE_UTTERANCE, &values, |v| {
            let kind = match &v["type"] {
                Value::String(s) => s.trim().parse::<u8>().ok()?,
                Value::Number(n) => u8::try_from(n.as_u64()?).ok()?,
                _ => return None,
            };
            let kind = UtteranceKind::try_from(kind).ok()?;
            if kind != UtteranceKind::HeldPreference {
                return Some(UtteranceClass::of(kind));
            }
            // Type 1 must name a preference that is still unrevealed.
            let id = v["preference_id"].as_str()?.trim();
            unrevealed
                .iter()
                .find(|p| p.preference_id == id)
                .map(|p| UtteranceClass::held(p.preference_id.clone()))
        })
        .unwrap_or_else(|| UtteranceClass::of(UtteranceKind::Other))
    }

    fn render_preference_reveal(&self, req: &RevealRequest<'_>) -> String {
        self.reply(REVEAL_PREFERENCE, req)
            .unwrap_or_else(|| self.fallback.render_preference_reveal(req))
    }

    fn render_proactive_reveal(&self, req: &RevealRequest<'_>) -> String {
        self.reply(REVEAL_PROACTIVE, req)
            .unwrap_or_else(|| self.fallback.render_proactive_reveal(req))
    }

    fn render_neutral(&self, history: &[Exchange], utterance: &str) -> String {
        let hist = format_history(history);
        let values = [("conversation_history", hist.as_str()), ("latest_utterance", utterance)];
        self.ask(RESPOND_NEUTRAL, &values, |v| v["response"].as_str().map(str::to_string).filter(|s| !s.trim().is_empty()))
            .unwrap_or_else(|| self.fallback.render_neutral(history, utterance))
    }
}
