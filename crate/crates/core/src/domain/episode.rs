use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{AspectKind, Composition, EnvConfig, Label, OptionId, Tier};

/// The three interaction types an agent may choose from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Choice {
    Search,
    Action,
    Answer,
}

impl Choice {
    pub fn as_str(self) -> &'static str {
        match self {
            Choice::Search => "search",
            Choice::Action => "action",
            Choice::Answer => "answer",
        }
    }
}

impl fmt::Display for Choice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Choice {
    type Err = MalformedCall;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "search" => Ok(Choice::Search),
            "action" => Ok(Choice::Action),
            "answer" => Ok(Choice::Answer),
            other => Err(MalformedCall(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("choice `{0}` is not one of search, action, answer")]
pub struct MalformedCall(pub String);

/// A validated tool call.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentCall {
    #[serde(default)]
    pub thought: String,
    pub choice: Choice,
    #[serde(default)]
    pub content: String,
}

impl AgentCall {
    pub fn new(choice: Choice, content: impl Into<String>) -> Self {
        Self { thought: String::new(), choice, content: content.into() }
    }

    pub fn search(content: impl Into<String>) -> Self {
        Self::new(Choice::Search, content)
    }

    pub fn action(content: impl Into<String>) -> Self {
        Self::new(Choice::Action, content)
    }

    pub fn answer(content: impl Into<String>) -> Self {
        Self::new(Choice::Answer, content)
    }

    pub fn with_thought(mut self, thought: impl Into<String>) -> Self {
        self.thought = thought.into();
        self
    }
}

/// A tool call exactly as received on the wire; `choice` is not yet checked.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RawAgentCall {
    #[serde(default)]
    pub thought: String,
    #[serde(default)]
    pub choice: String,
    #[serde(default)]
    pub content: String,
}

impl RawAgentCall {
    pub fn parse(&self) -> Result<AgentCall, MalformedCall> {
        Ok(AgentCall {
            thought: self.thought.clone(),
            choice: self.choice.parse()?,
            content: self.content.clone(),
        })
    }
}

impl From<AgentCall> for RawAgentCall {
    fn from(call: AgentCall) -> Self {
        Self { thought: call.thought, choice: call.choice.as_str().to_string(), content: call.content }
    }
}

impl From<&AgentCall> for RawAgentCall {
    fn from(call: &AgentCall) -> Self {
        call.clone().into()
    }
}

/// Verdict on whether a search request matches one aspect's ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchJudgement {
    pub aligned: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aspect: Option<AspectKind>,
}

impl SearchJudgement {
    pub fn not_aligned() -> Self {
        Self { aligned: false, aspect: None }
    }

    pub fn aligned(aspect: AspectKind) -> Self {
        Self { aligned: true, aspect: Some(aspect) }
    }
}

/// Utterance types: 1 asks concretely about a held preference, 2 asks
/// concretely about one the user does not hold, 3 is a vague preference
/// question, 4 is ordinary conversation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum UtteranceKind {
    HeldPreference,
    UnheldPreference,
    Vague,
    Other,
}

impl From<UtteranceKind> for u8 {
    fn from(k: UtteranceKind) -> u8 {
        match k {
            UtteranceKind::HeldPreference => 1,
            UtteranceKind::UnheldPreference => 2,
            UtteranceKind::Vague => 3,
            UtteranceKind::Other => 4,
        }
    }
}

impl TryFrom<u8> for UtteranceKind {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        match v {
            1 => Ok(UtteranceKind::HeldPreference),
            2 => Ok(UtteranceKind::UnheldPreference),
            3 => Ok(UtteranceKind::Vague),
            4 => Ok(UtteranceKind::Other),
            _ => Err(format!("utterance type must be 1-4, got {v}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UtteranceClass {
    pub kind: UtteranceKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preference_id: Option<String>,
}

impl UtteranceClass {
    pub fn held(preference_id: impl Into<String>) -> Self {
        Self { kind: UtteranceKind::HeldPreference, preference_id: Some(preference_id.into()) }
    }

    pub fn of(kind: UtteranceKind) -> Self {
        Self { kind, preference_id: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchOutcome {
    Listing,
    AlreadySearched,
    NoMatch,
    SystemError,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RevealMode {
    Active,
    Passive,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reveal {
    pub preference_id: String,
    pub mode: RevealMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerStatus {
    /// The recommendation was recorded and rewarded.
    Recorded,
    /// Single-choice: the aspect already has a recommendation.
    RejectedRepeat,
    /// More than one option ID in a single answer.
    RejectedMultiple,
    /// No option ID could be parsed.
    NoOptionId,
    /// The ID does not exist in this scenario.
    UnknownOption,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerEval {
    pub status: AnswerStatus,
    /// Every ID token parsed from the content, in order.
    pub parsed_ids: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub option_id: Option<OptionId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aspect: Option<AspectKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardKind {
    SearchCorrect,
    PreferenceCorrect,
    ChoiceBest,
    ChoiceCorrect,
    WrongChoicePenalty,
    StepPenalty,
}

/// One unscaled, signed reward term. The turn reward is
/// `reward_scale * sum(values)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardComponent {
    pub kind: RewardKind,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnRecord {
    pub turn_index: u32,
    pub call: RawAgentCall,
    /// Parsed choice; absent for malformed (protocol-error) turns.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub choice: Option<Choice>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub judgement: Option<SearchJudgement>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search_outcome: Option<SearchOutcome>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classification: Option<UtteranceClass>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer_eval: Option<AnswerEval>,
    #[serde(default)]
    pub revealed: Vec<Reveal>,
    pub observation: String,
    pub reward: f64,
    #[serde(default)]
    pub components: Vec<RewardComponent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protocol_error: Option<String>,
}

impl TurnRecord {
    /// Folds from +0.0; an empty float `sum()` would give -0.0.
    pub fn component_sum(&self) -> f64 {
        self.components.iter().fold(0.0, |acc, c| acc + c.value)
    }

    pub fn is_protocol_error(&self) -> bool {
        self.choice.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalReason {
    AllAnswered,
    MaxSteps,
    ProtocolError,
}

impl fmt::Display for TerminalReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TerminalReason::AllAnswered => "all_answered",
            TerminalReason::MaxSteps => "max_steps",
            TerminalReason::ProtocolError => "protocol_error",
        })
    }
}

/// Append-only record of one episode. Carries enough scenario metadata
/// (aspects, preference ids, tier) for metrics to be computed from the log
/// alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub scenario_id: String,
    pub tier: Tier,
    pub composition: Composition,
    pub aspects: Vec<AspectKind>,
    pub preference_ids: Vec<String>,
    pub config: EnvConfig,
    pub turns: Vec<TurnRecord>,
    #[serde(default)]
    pub terminal_reason: Option<TerminalReason>,
}

/// One line of the line-delimited log encoding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum LogRecord {
    Header {
        scenario_id: String,
        tier: Tier,
        composition: Composition,
        aspects: Vec<AspectKind>,
        preference_ids: Vec<String>,
        config: EnvConfig,
    },
    Turn(TurnRecord),
    End { terminal_reason: TerminalReason },
}

/// Result of reading a line-delimited log that may be incomplete.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedLog {
    pub log: EpisodeLog,
    /// Set when the log has no end record or a trailing line failed to parse.
    pub truncated: Option<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum LogError {
    #[error("log is empty")]
    Empty,
    #[error("first record must be a header")]
    MissingHeader,
    #[error("line {line}: {source}")]
    Parse { line: usize, source: serde_json::Error },
    #[error("line {line}: unexpected record after end of episode")]
    AfterEnd { line: usize },
}

impl EpisodeLog {
    pub fn header(&self) -> LogRecord {
        LogRecord::Header {
            scenario_id: self.scenario_id.clone(),
            tier: self.tier,
            composition: self.composition.clone(),
            aspects: self.aspects.clone(),
            preference_ids: self.preference_ids.clone(),
            config: self.config.clone(),
        }
    }

    /// Encodes the log as one JSON object per line: header, turns, end.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let mut push = |rec: &LogRecord| {
            out.push_str(&serde_json::to_string(rec).expect("log records serialize"));
            out.push('\n');
        };
        push(&self.header());
        for t in &self.turns {
            push(&LogRecord::Turn(t.clone()));
        }
        if let Some(reason) = self.terminal_reason {
            push(&LogRecord::End { terminal_reason: reason });
        }
        out
    }

    /// Strict parse: fails on any malformed line.
    pub fn from_jsonl(text: &str) -> Result<EpisodeLog, LogError> {
        let parsed = Self::parse_jsonl(text, false)?;
        Ok(parsed.log)
    }

    /// Lenient parse: a malformed final line or a missing end record is
    /// reported as truncation instead of an error.
    pub fn from_jsonl_lenient(text: &str) -> Result<ParsedLog, LogError> {
        Self::parse_jsonl(text, true)
    }

    fn parse_jsonl(text: &str, lenient: bool) -> Result<ParsedLog, LogError> {
        let lines: Vec<(usize, &str)> = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty())
            .collect();
        let Some(&(first_no, first)) = lines.first() else {
            return Err(LogError::Empty);
        };
        let header: LogRecord = serde_json::from_str(first)
            .map_err(|source| LogError::Parse { line: first_no, source })?;
        let LogRecord::Header { scenario_id, tier, composition, aspects, preference_ids, config } =
            header
        else {
            return Err(LogError::MissingHeader);
        };
        let mut log = EpisodeLog {
            scenario_id,
            tier,
            composition,
            aspects,
            preference_ids,
            config,
            turns: Vec::new(),
            terminal_reason: None,
        };
        let mut truncated = None;
        let last = lines.len() - 1;
        for (pos, &(line_no, line)) in lines.iter().enumerate().skip(1) {
            if log.terminal_reason.is_some() {
                return Err(LogError::AfterEnd { line: line_no });
            }
            match serde_json::from_str::<LogRecord>(line) {
                Ok(LogRecord::Turn(t)) => log.turns.push(t),
                Ok(LogRecord::End { terminal_reason }) => log.terminal_reason = Some(terminal_reason),
                Ok(LogRecord::Header { .. }) => return Err(LogError::MissingHeader),
                Err(source) if lenient && pos == last => {
                    truncated = Some(format!("line {line_no} is incomplete: {source}"));
                }
                Err(source) => return Err(LogError::Parse { line: line_no, source }),
            }
        }
        if truncated.is_none() && log.terminal_reason.is_none() {
            truncated = Some("log has no end record".to_string());
        }
        Ok(ParsedLog { log, truncated })
    }

    /// Sum of all turn rewards.
    pub fn total_reward(&self) -> f64 {
        self.turns.iter().fold(0.0, |acc, t| acc + t.reward)
    }
}
