//! The episode state machine: reset/step, action routing, reward
//! accounting, search-failure injection, passive elicitation and
//! termination.

pub mod messages;

use std::collections::BTreeMap;
use std::sync::{Arc, LazyLock};

use indexmap::IndexMap;
use rand::seq::{IndexedRandom, SliceRandom};
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::domain::{
    validate_scenario, AnswerEval, AnswerStatus, AspectKind, AspectTask, Choice, ConfigError, EnvConfig,
    EpisodeLog, FieldValue, Label, Mode, OffTopicPolicy, OptionId, Preference, RawAgentCall, Reveal,
    RevealMode, RewardComponent, RewardKind, Scenario, SearchOutcome, TerminalReason, TurnRecord,
    UtteranceClass, UtteranceKind, ROUTE_FIELD,
};
use crate::prompts::initial_user_message;
use crate::simulator::{Exchange, RevealRequest, SimulatorBackend};
use crate::util::{label, rng_for};

static OPTION_TOKEN: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b[A-Z][0-9]+\b").expect("valid regex"));

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("EPISODE_DONE: the episode has already terminated")]
    EpisodeDone,
    #[error("INVALID_SCENARIO: {}", .0.join("; "))]
    InvalidScenario(Vec<String>),
    #[error("INVALID_CONFIG: {0}")]
    InvalidConfig(#[from] ConfigError),
    #[error("INVALID_LOG: {0}")]
    InvalidLog(String),
}

impl EngineError {
    pub fn code(&self) -> &'static str {
        match self {
            EngineError::EpisodeDone => "EPISODE_DONE",
            EngineError::InvalidScenario(_) => "INVALID_SCENARIO",
            EngineError::InvalidConfig(_) => "INVALID_CONFIG",
            EngineError::InvalidLog(_) => "INVALID_LOG",
        }
    }
}

/// The environment's response to one agent call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub observation: String,
    pub reward: f64,
    pub done: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terminal_reason: Option<TerminalReason>,
    pub info: TurnRecord,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RevealEntry {
    pub mode: RevealMode,
    pub turn: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnsweredOption {
    pub option_id: OptionId,
    pub label: Label,
    pub turn: u32,
}

/// Mutable per-episode bookkeeping.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EpisodeState {
    pub turn: u32,
    /// Aspects whose listing was delivered, with the turn it happened on.
    pub searched: BTreeMap<AspectKind, u32>,
    pub search_attempts: u32,
    pub revealed: IndexMap<String, RevealEntry>,
    pub off_topic_counter: u32,
    pub answered: BTreeMap<AspectKind, Vec<AnsweredOption>>,
    pub done: bool,
    pub terminal_reason: Option<TerminalReason>,
    pub total_reward: f64,
}

/// One running episode. Steps are strictly sequential (`&mut self`); the
/// value can move between threads between steps.
#[derive(Clone)]
pub struct Episode {
    scenario: Arc<Scenario>,
    config: EnvConfig,
    sim: Arc<dyn SimulatorBackend>,
    state: EpisodeState,
    log: EpisodeLog,
    dialogue: Vec<Exchange>,
    initial_observation: String,
}

impl std::fmt::Debug for Episode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Episode")
            .field("scenario_id", &self.scenario.scenario_id)
            .field("simulator", &self.sim.name())
            .field("state", &self.state)
            .finish()
    }
}

/// Human-readable rendering of one visible field value.
pub fn render_value(name: &str, value: &FieldValue) -> String {
    match value {
        FieldValue::Int(v) => v.to_string(),
        FieldValue::Text(s) => s.clone(),
        FieldValue::List(items) if name == ROUTE_FIELD => items.join(" -> "),
        FieldValue::List(items) if items.is_empty() => "none".into(),
        FieldValue::List(items) => items.join(", "),
        FieldValue::Services(s) if s.is_empty() => "none".into(),
        FieldValue::Services(s) => s.iter().map(|(k, v)| format!("{k} ${v}")).collect::<Vec<_>>().join(", "),
    }
}

/// Listing shown for an aligned search: labels and reasons are never
/// included, and the order is a per-(seed, aspect) shuffle.
pub fn render_listing(task: &AspectTask, seed: u64) -> String {
    let mut order: Vec<usize> = (0..task.options.len()).collect();
    order.shuffle(&mut rng_for(seed, &[label("listing"), task.aspect as u64]));
    let mut out = format!(
        "Found {} {} options. Each line gives the option ID followed by its details; costs are in USD for the whole booking.",
        task.options.len(),
        task.aspect.noun()
    );
    for i in order {
        let o = &task.options[i];
        let fields: Vec<String> = o
            .visible_fields
            .iter()
            .map(|(k, v)| format!("{}: {}", k.replace('_', " "), render_value(k, v)))
            .collect();
        out.push_str(&format!("\n{} | {}", o.option_id, fields.join(" | ")));
    }
    out
}

/// Option-ID tokens (uppercase letter followed by digits), deduplicated in
/// order of appearance.
pub fn parse_option_ids(content: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for m in OPTION_TOKEN.find_iter(content) {
        if !out.iter().any(|x| x == m.as_str()) {
            out.push(m.as_str().to_string());
        }
    }
    out
}

impl Episode {
    /// Starts an episode. The scenario must pass structural validation.
    pub fn reset(
        scenario: Arc<Scenario>,
        config: EnvConfig,
        sim: Arc<dyn SimulatorBackend>,
    ) -> Result<Episode, EngineError> {
        config.validate()?;
        let report = validate_scenario(&scenario);
        if !report.is_valid() {
            let lines = report.violations.iter().map(ToString::to_string).collect();
            return Err(EngineError::InvalidScenario(lines));
        }
        let log = EpisodeLog {
            scenario_id: scenario.scenario_id.clone(),
            tier: scenario.tier,
            composition: scenario.composition.clone(),
            aspects: scenario.aspect_kinds(),
            preference_ids: scenario.preferences().map(|p| p.preference_id.clone()).collect(),
            config: config.clone(),
            turns: Vec::new(),
            terminal_reason: None,
        };
        let initial_observation = initial_user_message(&scenario.description);
        Ok(Episode {
            scenario,
            config,
            sim,
            state: EpisodeState::default(),
            log,
            dialogue: Vec::new(),
            initial_observation,
        })
    }

    /// Rebuilds an episode from previously recorded turns without calling
    /// the simulator again.
    pub fn restore(
        scenario: Arc<Scenario>,
        config: EnvConfig,
        sim: Arc<dyn SimulatorBackend>,
        turns: Vec<TurnRecord>,
        terminal_reason: Option<TerminalReason>,
    ) -> Result<Episode, EngineError> {
        let mut ep = Episode::reset(scenario, config, sim)?;
        for (i, t) in turns.into_iter().enumerate() {
            if t.turn_index as usize != i {
                return Err(EngineError::InvalidLog(format!("turn {i} has index {}", t.turn_index)));
            }
            if ep.state.done {
                return Err(EngineError::InvalidLog(format!("turn {i} follows termination")));
            }
            ep.absorb(t);
        }
        if let Some(reason) = terminal_reason {
            ep.finish(reason);
        }
        Ok(ep)
    }

    pub fn initial_observation(&self) -> &str {
        &self.initial_observation
    }

    pub fn scenario(&self) -> &Arc<Scenario> {
        &self.scenario
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn state(&self) -> &EpisodeState {
        &self.state
    }

    pub fn log(&self) -> &EpisodeLog {
        &self.log
    }

    pub fn into_log(self) -> EpisodeLog {
        self.log
    }

    pub fn dialogue(&self) -> &[Exchange] {
        &self.dialogue
    }

    pub fn is_done(&self) -> bool {
        self.state.done
    }

    /// Ends the episode early (adapter failure, idle expiry). No-op if
    /// already finished.
    pub fn finish(&mut self, reason: TerminalReason) {
        if !self.state.done {
            self.state.done = true;
            self.state.terminal_reason = Some(reason);
            self.log.terminal_reason = Some(reason);
        }
    }

    fn unrevealed(&self) -> Vec<&Preference> {
        self.scenario
            .preferences()
            .filter(|p| !self.state.revealed.contains_key(&p.preference_id))
            .collect()
    }

    fn aspect_reveals(&self, aspect: AspectKind) -> usize {
        self.state
            .revealed
            .keys()
            .filter(|id| self.scenario.preference(id).is_some_and(|p| p.aspect == aspect))
            .count()
    }

    /// Applies one agent call.
    pub fn step(&mut self, call: impl Into<RawAgentCall>) -> Result<StepOutcome, EngineError> {
        if self.state.done {
            return Err(EngineError::EpisodeDone);
        }
        let raw: RawAgentCall = call.into();
        let mut rec = TurnRecord {
            turn_index: self.state.turn,
            call: raw.clone(),
            choice: None,
            judgement: None,
            search_outcome: None,
            classification: None,
            answer_eval: None,
            revealed: Vec::new(),
            observation: String::new(),
            reward: 0.0,
            components: Vec::new(),
            protocol_error: None,
        };
        match raw.parse() {
            Err(e) => {
                rec.protocol_error = Some(e.to_string());
                rec.observation = messages::malformed_call(&e.to_string());
            }
            Ok(call) => {
                rec.choice = Some(call.choice);
                match call.choice {
                    Choice::Search => self.handle_search(&call.content, &mut rec),
                    Choice::Action => self.handle_action(&call.content, &mut rec),
                    Choice::Answer => self.handle_answer(&call.content, &mut rec),
                }
            }
        }
        if self.config.step_penalty != 0.0 {
            rec.components.push(RewardComponent { kind: RewardKind::StepPenalty, value: -self.config.step_penalty });
        }
        self.apply_passive_elicitation(&mut rec);
        rec.reward = self.config.reward_scale * rec.component_sum();

        self.absorb(rec.clone());
        Ok(StepOutcome {
            observation: rec.observation.clone(),
            reward: rec.reward,
            done: self.state.done,
            terminal_reason: self.state.terminal_reason,
            info: rec,
        })
    }

    fn handle_search(&self, query: &str, rec: &mut TurnRecord) {
        let attempt = self.state.search_attempts + 1;
        let interval = self.config.search_failure_interval;
        if interval > 0 && attempt.is_multiple_of(interval) {
            rec.search_outcome = Some(SearchOutcome::SystemError);
            rec.observation = messages::SEARCH_SYSTEM_ERROR.to_string();
            return;
        }
        let judgement = self.sim.judge_search(&self.scenario, query);
        rec.judgement = Some(judgement);
        let task = judgement.aspect.filter(|_| judgement.aligned).and_then(|a| self.scenario.aspect(a));
        match task {
            Some(task) if self.state.searched.contains_key(&task.aspect) => {
                rec.search_outcome = Some(SearchOutcome::AlreadySearched);
                rec.observation = messages::already_searched(task.aspect);
            }
            Some(task) => {
                rec.search_outcome = Some(SearchOutcome::Listing);
                rec.observation = format!(
                    "{}\n\n{}",
                    messages::SEARCH_ALIGNED,
                    render_listing(task, self.config.rng_seed)
                );
                rec.components.push(RewardComponent {
                    kind: RewardKind::SearchCorrect,
                    value: self.config.search_correct_reward,
                });
            }
            None => {
                rec.search_outcome = Some(SearchOutcome::NoMatch);
                rec.observation = messages::SEARCH_NO_MATCH.to_string();
            }
        }
    }

    fn handle_action(&self, utterance: &str, rec: &mut TurnRecord) {
        let unrevealed = self.unrevealed();
        let mut class = self.sim.classify_utterance(&self.scenario, &self.dialogue, utterance, &unrevealed);
        // Never trust a type-1 verdict naming a revealed or unknown preference.
        let target = class
            .preference_id
            .as_deref()
            .and_then(|id| unrevealed.iter().copied().find(|p| p.preference_id == id));
        if class.kind == UtteranceKind::HeldPreference && target.is_none() {
            class = UtteranceClass::of(UtteranceKind::UnheldPreference);
        }
        if class.kind != UtteranceKind::HeldPreference {
            class.preference_id = None;
        }
        rec.observation = match (class.kind, target) {
            (UtteranceKind::HeldPreference, Some(p)) => {
                let req = RevealRequest {
                    preference: p,
                    history: &self.dialogue,
                    utterance,
                    aspect_reveal_count: self.aspect_reveals(p.aspect),
                    seed: self.config.rng_seed,
                };
                rec.revealed.push(Reveal { preference_id: p.preference_id.clone(), mode: RevealMode::Active });
                rec.components.push(RewardComponent {
                    kind: RewardKind::PreferenceCorrect,
                    value: self.config.preference_correct_reward,
                });
                self.sim.render_preference_reveal(&req)
            }
            (UtteranceKind::UnheldPreference, _) => messages::TYPE2_REPLY.to_string(),
            (UtteranceKind::Vague, _) => messages::TYPE3_REPLY.to_string(),
            _ => self.sim.render_neutral(&self.dialogue, utterance),
        };
        rec.classification = Some(class);
    }

    fn handle_answer(&self, content: &str, rec: &mut TurnRecord) {
        let mode = self.config.mode;
        let ids = parse_option_ids(content);
        let mut eval =
            AnswerEval { status: AnswerStatus::NoOptionId, parsed_ids: ids.clone(), option_id: None, aspect: None, label: None };
        rec.observation = match ids.as_slice() {
            [] => messages::ANSWER_NO_ID.to_string(),
            [one] => {
                let found = one.parse::<OptionId>().ok().and_then(|id| self.scenario.option(id));
                match found {
                    None => {
                        eval.status = AnswerStatus::UnknownOption;
                        messages::unknown_option(one)
                    }
                    Some(opt) => {
                        eval.option_id = Some(opt.option_id);
                        eval.aspect = Some(opt.aspect);
                        if mode == Mode::SingleChoice && self.state.answered.contains_key(&opt.aspect) {
                            eval.status = AnswerStatus::RejectedRepeat;
                            messages::repeat_answer(opt.aspect.id_prefix())
                        } else {
                            eval.status = AnswerStatus::Recorded;
                            eval.label = Some(opt.label);
                            match opt.label {
                                Label::Best => {
                                    rec.components.push(RewardComponent {
                                        kind: RewardKind::ChoiceBest,
                                        value: self.config.choice_best_reward,
                                    });
                                    messages::answer_best(mode).to_string()
                                }
                                Label::Correct => {
                                    rec.components.push(RewardComponent {
                                        kind: RewardKind::ChoiceCorrect,
                                        value: self.config.choice_correct_reward,
                                    });
                                    messages::answer_correct(mode).to_string()
                                }
                                Label::Wrong | Label::Noise => {
                                    if self.config.wrong_choice_penalty != 0.0 {
                                        rec.components.push(RewardComponent {
                                            kind: RewardKind::WrongChoicePenalty,
                                            value: -self.config.wrong_choice_penalty,
                                        });
                                    }
                                    messages::ANSWER_WRONG.to_string()
                                }
                            }
                        }
                    }
                }
            }
            many => {
                eval.status = AnswerStatus::RejectedMultiple;
                messages::multiple_ids(mode, many.len())
            }
        };
        rec.answer_eval = Some(eval);
    }

    /// Counter value after `rec` (before any passive reveal resets it).
    fn advanced_counter(&self, rec: &TurnRecord) -> u32 {
        let interval = self.config.elicitation_interval;
        if interval == 0 {
            return 0;
        }
        let elicited = rec.revealed.iter().any(|r| r.mode == RevealMode::Active);
        if elicited {
            return 0;
        }
        let counts = match self.config.off_topic_policy {
            OffTopicPolicy::CountAllTurns => true,
            OffTopicPolicy::ActionTurnsOnly => rec.choice == Some(Choice::Action),
        };
        if counts {
            (self.state.off_topic_counter + 1).min(interval)
        } else {
            self.state.off_topic_counter
        }
    }

    fn apply_passive_elicitation(&self, rec: &mut TurnRecord) {
        let interval = self.config.elicitation_interval;
        if interval == 0 || self.advanced_counter(rec) < interval {
            return;
        }
        let just_revealed: Vec<&str> = rec.revealed.iter().map(|r| r.preference_id.as_str()).collect();
        let pending: Vec<&Preference> =
            self.unrevealed().into_iter().filter(|p| !just_revealed.contains(&p.preference_id.as_str())).collect();
        let mut rng = rng_for(self.config.rng_seed, &[label("passive"), rec.turn_index as u64]);
        let Some(p) = pending.choose(&mut rng).copied() else {
            return;
        };
        let req = RevealRequest {
            preference: p,
            history: &self.dialogue,
            utterance: &rec.call.content,
            aspect_reveal_count: self.aspect_reveals(p.aspect),
            seed: self.config.rng_seed,
        };
        let text = self.sim.render_proactive_reveal(&req);
        rec.observation = if rec.observation.is_empty() { text } else { format!("{}\n\n{text}", rec.observation) };
        rec.revealed.push(Reveal { preference_id: p.preference_id.clone(), mode: RevealMode::Passive });
    }

    /// Folds a finished turn record into the state, log and dialogue.
    fn absorb(&mut self, rec: TurnRecord) {
        let counter = self.advanced_counter(&rec);
        let s = &mut self.state;
        s.off_topic_counter = if rec.revealed.iter().any(|r| r.mode == RevealMode::Passive) { 0 } else { counter };
        if rec.choice == Some(Choice::Search) {
            s.search_attempts += 1;
        }
        if rec.search_outcome == Some(SearchOutcome::Listing) {
            if let Some(a) = rec.judgement.and_then(|j| j.aspect) {
                s.searched.entry(a).or_insert(rec.turn_index);
            }
        }
        for r in &rec.revealed {
            s.revealed.entry(r.preference_id.clone()).or_insert(RevealEntry { mode: r.mode, turn: rec.turn_index });
        }
        if let Some(eval) = &rec.answer_eval {
            if let (AnswerStatus::Recorded, Some(id), Some(label)) = (eval.status, eval.option_id, eval.label) {
                s.answered.entry(id.aspect).or_default().push(AnsweredOption { option_id: id, label, turn: rec.turn_index });
            }
        }
        s.total_reward += rec.reward;
        s.turn = rec.turn_index + 1;

        self.dialogue.push(Exchange::agent(rec.call.content.clone()));
        let user_text = if rec.search_outcome == Some(SearchOutcome::Listing) {
            let noun = rec.judgement.and_then(|j| j.aspect).map(|a| a.noun()).unwrap_or("travel");
            match rec.observation.rsplit_once("\n\n") {
                Some((_, tail)) if rec.revealed.iter().any(|r| r.mode == RevealMode::Passive) => {
                    format!("[search results for {noun}]\n\n{tail}")
                }
                _ => format!("[search results for {noun}]"),
            }
        } else {
            rec.observation.clone()
        };
        self.dialogue.push(Exchange::user(user_text));
        self.log.turns.push(rec);

        let all_answered = self.scenario.aspects.iter().all(|a| self.state.answered.contains_key(&a.aspect));
        if self.config.mode == Mode::SingleChoice && all_answered {
            self.finish(TerminalReason::AllAnswered);
        } else if self.state.turn >= self.config.max_steps {
            self.finish(TerminalReason::MaxSteps);
        }
    }
}
