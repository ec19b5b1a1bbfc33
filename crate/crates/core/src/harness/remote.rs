//! Agent adapter for chat-completions endpoints with tool calling.

use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{AdapterError, AdapterFactory, AgentAdapter, AgentContext, TranscriptEntry};
use crate::domain::{RawAgentCall, Scenario};
use crate::prompts::TOOL_NAME;
use crate::util::Throttle;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RemoteAgentConfig {
    pub url: String,
    pub model: String,
    #[serde(skip_serializing)]
    pub api_key: Option<String>,
    pub temperature: f64,
    pub max_tokens: u32,
    pub timeout_secs: f64,
    /// Request budget shared by every episode of one run; unset is unlimited.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub requests_per_second: Option<u32>,
}

impl Default for RemoteAgentConfig {
    fn default() -> Self {
        Self {
            url: "http://127.0.0.1:8000/v1/chat/completions".into(),
            model: "gpt-4o".into(),
            api_key: None,
            temperature: 0.0,
            max_tokens: 2048,
            timeout_secs: 60.0,
            requests_per_second: None,
        }
    }
}

impl RemoteAgentConfig {
    /// Overrides from `TRIPGYM_AGENT_URL`, `TRIPGYM_AGENT_MODEL` and
    /// `TRIPGYM_AGENT_API_KEY` when set.
    pub fn from_env(mut self) -> Self {
        if let Ok(v) = std::env::var("TRIPGYM_AGENT_URL") {
            self.url = v;
        }
        if let Ok(v) = std::env::var("TRIPGYM_AGENT_MODEL") {
            self.model = v;
        }
        if let Ok(v) = std::env::var("TRIPGYM_AGENT_API_KEY") {
            self.api_key = Some(v);
        }
        self
    }
}

/// Builds the request body: system prompt, the transcript as alternating
/// tool calls and tool results, and the tool marked as required.
pub fn agent_request_body(cfg: &RemoteAgentConfig, ctx: &AgentContext<'_>) -> Value {
    let mut messages = vec![json!({"role": "system", "content": ctx.system_prompt})];
    let mut last_call: Option<String> = None;
    for (i, entry) in ctx.transcript.iter().enumerate() {
        match entry {
            TranscriptEntry::User(text) => match last_call.take() {
                Some(id) => messages.push(json!({"role": "tool", "tool_call_id": id, "content": text})),
                None => messages.push(json!({"role": "user", "content": text})),
            },
            TranscriptEntry::Agent(call) => {
                let id = format!("call_{i}");
                let args = serde_json::to_string(call).expect("call serializes");
                messages.push(json!({
                    "role": "assistant",
                    "content": null,
                    "tool_calls": [{"id": id, "type": "function", "function": {"name": TOOL_NAME, "arguments": args}}],
                }));
                last_call = Some(id);
            }
        }
    }
    json!({
        "model": cfg.model,
        "temperature": cfg.temperature,
        "max_tokens": cfg.max_tokens,
        "messages": messages,
        "tools": [ctx.tool_schema],
        "tool_choice": "required",
    })
}

/// Extracts the single tool call from a chat-completions response.
pub fn parse_agent_response(body: &Value) -> Result<RawAgentCall, AdapterError> {
    let calls = body["choices"][0]["message"]["tool_calls"]
        .as_array()
        .filter(|c| !c.is_empty())
        .ok_or_else(|| AdapterError::Refused("response contains no tool call".into()))?;
    let f = &calls[0]["function"];
    if f["name"].as_str() != Some(TOOL_NAME) {
        return Err(AdapterError::Refused(format!("unexpected tool `{}`", f["name"])));
    }
    let args = f["arguments"].as_str().ok_or_else(|| AdapterError::Refused("tool arguments missing".into()))?;
    serde_json::from_str(args).map_err(|e| AdapterError::Refused(format!("tool arguments are not valid JSON: {e}")))
}

pub struct RemoteAgent {
    cfg: RemoteAgentConfig,
    agent: ureq::Agent,
    throttle: Option<Throttle>,
}

impl AgentAdapter for RemoteAgent {
    fn name(&self) -> &str {
        &self.cfg.model
    }

    fn act(&mut self, ctx: &AgentContext<'_>) -> Result<RawAgentCall, AdapterError> {
        if let Some(t) = &self.throttle {
            t.wait();
        }
        let mut req = self.agent.post(&self.cfg.url);
        if let Some(key) = &self.cfg.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp =
            req.send_json(agent_request_body(&self.cfg, ctx)).map_err(|e| AdapterError::Transport(e.to_string()))?;
        let body: Value = resp.body_mut().read_json().map_err(|e| AdapterError::Transport(e.to_string()))?;
        parse_agent_response(&body)
    }
}

#[derive(Debug, Clone)]
pub struct RemoteAgentFactory {
    config: RemoteAgentConfig,
    throttle: Option<Throttle>,
}

impl RemoteAgentFactory {
    pub fn new(config: RemoteAgentConfig) -> Self {
        let throttle = Throttle::per_second(config.requests_per_second);
        Self { config, throttle }
    }

    pub fn config(&self) -> &RemoteAgentConfig {
        &self.config
    }
}

impl AdapterFactory for RemoteAgentFactory {
    fn name(&self) -> String {
        format!("remote:{}", self.config.model)
    }

    fn create(&self, _scenario: &Arc<Scenario>, _seed: u64) -> Box<dyn AgentAdapter> {
        let timeout = Duration::from_secs_f64(self.config.timeout_secs.max(0.001));
        let agent = ureq::Agent::config_builder().timeout_global(Some(timeout)).build().into();
        Box::new(RemoteAgent { cfg: self.config.clone(), agent, throttle: self.throttle.clone() })
    }
}
