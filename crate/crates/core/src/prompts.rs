//! Versioned prompt templates for the remote user simulator and the agent,
//! plus the `{{slot}}` renderer they share.

use std::collections::BTreeSet;

use crate::domain::Mode;

/// Bumped whenever any template text changes.
pub const PROMPT_VERSION: &str = "1";

pub const DEFAULT_ENVIRONMENT_NAME: &str = "TripGym";

/// Appended to every scenario description in the first observation.
pub const BUDGET_SENTENCE: &str = "Also my budget is limited, so as long as my preferences are satisfied, I would also like to choose the cheapest option for each.";

pub const TOOL_NAME: &str = "interact_with_env";

/// A system/user template pair for one simulator capability.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PromptPair {
    pub name: &'static str,
    pub system: &'static str,
    pub user: &'static str,
}

impl PromptPair {
    /// Slot names appearing in the user template, sorted.
    pub fn slots(&self) -> BTreeSet<String> {
        slots_in(self.user)
    }

    /// Renders `(system, user)`; the system prompt has no slots.
    pub fn render(&self, values: &[(&str, &str)]) -> Result<(String, String), PromptError> {
        Ok((self.system.to_string(), render(self.user, values)?))
    }
}

pub const JUDGE_SEARCH: PromptPair = PromptPair {
    name: "judge_search",
    system: include_str!("../assets/prompts/judge_search.system.txt"),
    user: include_str!("../assets/prompts/judge_search.user.txt"),
};

pub const JUDGE_UTTERANCE: PromptPair = PromptPair {
    name: "judge_utterance",
    system: include_str!("../assets/prompts/judge_utterance.system.txt"),
    user: include_str!("../assets/prompts/judge_utterance.user.txt"),
};

pub const REVEAL_PREFERENCE: PromptPair = PromptPair {
    name: "reveal_preference",
    system: include_str!("../assets/prompts/reveal_preference.system.txt"),
    user: include_str!("../assets/prompts/reveal_preference.user.txt"),
};

pub const REVEAL_PROACTIVE: PromptPair = PromptPair {
    name: "reveal_proactive",
    system: include_str!("../assets/prompts/reveal_proactive.system.txt"),
    user: include_str!("../assets/prompts/reveal_proactive.user.txt"),
};

pub const RESPOND_NEUTRAL: PromptPair = PromptPair {
    name: "respond_neutral",
    system: include_str!("../assets/prompts/respond_neutral.system.txt"),
    user: include_str!("../assets/prompts/respond_neutral.user.txt"),
};

pub const SIMULATOR_PROMPTS: [PromptPair; 5] =
    [JUDGE_SEARCH, JUDGE_UTTERANCE, REVEAL_PREFERENCE, REVEAL_PROACTIVE, RESPOND_NEUTRAL];

const AGENT_SINGLE: &str = include_str!("../assets/prompts/agent_single_choice.system.txt");
const AGENT_MULTI: &str = include_str!("../assets/prompts/agent_multi_choice.system.txt");
const INITIAL_USER: &str = include_str!("../assets/prompts/initial_user_message.txt");
const TOOL_SCHEMA: &str = include_str!("../assets/prompts/tool_schema.json");

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PromptError {
    #[error("template slot `{0}` has no value")]
    MissingSlot(String),
    #[error("value given for unknown slot `{0}`")]
    UnknownSlot(String),
}

fn slots_in(template: &str) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    let mut rest = template;
    while let Some(start) = rest.find("{{") {
        let after = &rest[start + 2..];
        match after.find("}}") {
            Some(end) => {
                out.insert(after[..end].to_string());
                rest = &after[end + 2..];
            }
            None => break,
        }
    }
    out
}

/// Single-pass substitution: values are inserted literally, so braces
/// inside a value are never re-expanded.
pub fn render(template: &str, values: &[(&str, &str)]) -> Result<String, PromptError> {
    let slots = slots_in(template);
    if let Some((k, _)) = values.iter().find(|(k, _)| !slots.contains(*k)) {
        return Err(PromptError::UnknownSlot(k.to_string()));
    }
    let mut out = String::with_capacity(template.len() + 256);
    let mut rest = template;
    while let Some(start) = rest.find("{{") {
        let after = &rest[start + 2..];
        let Some(end) = after.find("}}") else { break };
        let name = &after[..end];
        let value = values
            .iter()
            .find(|(k, _)| *k == name)
            .map(|(_, v)| *v)
            .ok_or_else(|| PromptError::MissingSlot(name.to_string()))?;
        out.push_str(&rest[..start]);
        out.push_str(value);
        rest = &after[end + 2..];
    }
    out.push_str(rest);
    Ok(out)
}

/// Agent system prompt for the given mode.
pub fn agent_system_prompt(mode: Mode, environment_name: &str) -> String {
    let template = match mode {
        Mode::SingleChoice => AGENT_SINGLE,
        Mode::MultiChoice => AGENT_MULTI,
    };
    render(template, &[("environment_name", environment_name)]).expect("agent template has one slot")
}

/// First user message: the scenario description followed by the budget rule.
pub fn initial_user_message(description: &str) -> String {
    let text = render(INITIAL_USER, &[("initial_description", description)]).expect("one slot");
    text.trim_end_matches('\n').to_string()
}

/// Function-calling schema for the single agent tool.
pub fn tool_schema() -> serde_json::Value {
    serde_json::from_str(TOOL_SCHEMA).expect("bundled tool schema is valid JSON")
}
