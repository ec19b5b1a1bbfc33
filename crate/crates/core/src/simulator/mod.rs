//! User-simulator backends: search judging, utterance classification and the
//! three kinds of user reply (implicit reveal, proactive reveal, neutral).

mod remote;
mod rule_based;

use serde::{Deserialize, Serialize};

use crate::domain::{Preference, Scenario, SearchJudgement, UtteranceClass};

pub use remote::{RemoteBackend, RemoteConfig, RemoteError};
pub use rule_based::{RuleBased, NEUTRAL_POOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Speaker {
    Agent,
    User,
}

/// One utterance in the conversation the simulator sees.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exchange {
    pub speaker: Speaker,
    pub text: String,
}

impl Exchange {
    pub fn agent(text: impl Into<String>) -> Self {
        Self { speaker: Speaker::Agent, text: text.into() }
    }

    pub fn user(text: impl Into<String>) -> Self {
        Self { speaker: Speaker::User, text: text.into() }
    }
}

/// Renders history as `Agent: ...` / `User: ...` lines.
pub fn format_history(history: &[Exchange]) -> String {
    if history.is_empty() {
        return "(no previous conversation)".to_string();
    }
    history
        .iter()
        .map(|e| match e.speaker {
            Speaker::Agent => format!("Agent: {}", e.text),
            Speaker::User => format!("User: {}", e.text),
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Inputs for rendering a reveal of one preference.
#[derive(Debug, Clone, Copy)]
pub struct RevealRequest<'a> {
    pub preference: &'a Preference,
    pub history: &'a [Exchange],
    pub utterance: &'a str,
    /// Reveals already made for this preference's aspect in the episode.
    pub aspect_reveal_count: usize,
    pub seed: u64,
}

impl RevealRequest<'_> {
    /// The implicit statement a deterministic renderer should use.
    pub fn statement(&self) -> &str {
        let s = &self.preference.implicit_statements;
        &s[self.aspect_reveal_count % s.len()]
    }
}

/// The five simulator capabilities. Implementations must always return
/// (degrading rather than failing) so an episode can never wedge.
pub trait SimulatorBackend: Send + Sync {
    fn name(&self) -> &str;

    fn judge_search(&self, scenario: &Scenario, query: &str) -> SearchJudgement;

    /// `unrevealed` holds every preference not yet revealed, in scenario order.
    fn classify_utterance(
        &self,
        scenario: &Scenario,
        history: &[Exchange],
        utterance: &str,
        unrevealed: &[&Preference],
    ) -> UtteranceClass;

    fn render_preference_reveal(&self, req: &RevealRequest<'_>) -> String;

    fn render_proactive_reveal(&self, req: &RevealRequest<'_>) -> String;

    fn render_neutral(&self, history: &[Exchange], utterance: &str) -> String;
}
