//! Deterministic in-repo agents used as fixtures and baselines.

use std::collections::VecDeque;
use std::sync::Arc;

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{AdapterError, AdapterFactory, AgentAdapter, AgentContext, TranscriptEntry};
use crate::domain::{effective_total_cost, is_plausible, matches_search_args, AgentCall, AspectKind, AspectTask, OptionRecord, RawAgentCall, Scenario};
use crate::engine::messages;
use crate::util::{label, rng_for, MonthDay};

pub const CHATTER_LINE: &str = "Thanks, I'm still thinking about the overall plan.";

/// A search request naming exactly one aspect with all of its ground-truth
/// arguments, phrased the way a travel agent would.
pub fn search_query(task: &AspectTask) -> String {
    let arg = |k: &str| task.ground_truth_search_args.get(k).map(String::as_str).unwrap_or("");
    let day = |k: &str| MonthDay::parse_iso(arg(k)).map(MonthDay::spoken).unwrap_or_else(|| arg(k).to_string());
    match task.aspect {
        AspectKind::Flight => format!(
            "Search flights from {} to {} on {}.",
            arg("origin"),
            arg("destination"),
            day("date")
        ),
        AspectKind::Hotel | AspectKind::Apartment => format!(
            "Search {} options in {} from {} to {}.",
            task.aspect.noun(),
            arg("city"),
            day("check_in"),
            day("check_out")
        ),
        AspectKind::RentalCar => format!(
            "Search rental car options in {} from {} to {}.",
            arg("city"),
            day("pickup_date"),
            day("return_date")
        ),
        AspectKind::Restaurant => format!("Search restaurant options in {} on {}.", arg("city"), day("date")),
    }
}

/// The cheapest plausible option that matches the request and satisfies
/// every preference, found by checking each predicate directly.
pub fn cheapest_satisfying(task: &AspectTask) -> Option<&OptionRecord> {
    task.options
        .iter()
        .filter(|o| {
            task.preferences.iter().all(|p| p.predicate.holds(&o.visible_fields))
                && matches_search_args(&o.visible_fields, &task.ground_truth_search_args)
                && is_plausible(&o.visible_fields, &task.plausible_ranges)
        })
        .min_by_key(|o| (effective_total_cost(&o.visible_fields, &task.preferences), o.option_id))
}

fn last_user<'a>(ctx: &AgentContext<'a>) -> &'a str {
    ctx.transcript
        .iter()
        .rev()
        .find_map(|e| match e {
            TranscriptEntry::User(t) => Some(t.as_str()),
            TranscriptEntry::Agent(_) => None,
        })
        .unwrap_or("")
}

#[derive(Debug, Clone, PartialEq)]
enum Move {
    Search(AspectKind, String),
    Call(AgentCall),
}

/// Plays a fixed queue of moves, re-issuing a search whenever the previous
/// one hit an injected system error. Falls back to chatter when exhausted.
struct Queue {
    name: String,
    moves: VecDeque<Move>,
    pending_search: Option<Move>,
}

impl AgentAdapter for Queue {
    fn name(&self) -> &str {
        &self.name
    }

    fn act(&mut self, ctx: &AgentContext<'_>) -> Result<RawAgentCall, AdapterError> {
        if let Some(prev) = self.pending_search.take() {
            if last_user(ctx).starts_with(messages::SEARCH_SYSTEM_ERROR) {
                self.moves.push_front(prev);
            }
        }
        let next = self.moves.pop_front();
        Ok(match next {
            Some(Move::Search(aspect, query)) => {
                self.pending_search = Some(Move::Search(aspect, query.clone()));
                AgentCall::search(query).with_thought(format!("Look up {} options.", aspect.noun())).into()
            }
            Some(Move::Call(call)) => call.into(),
            None => AgentCall::action(CHATTER_LINE).into(),
        })
    }
}

/// Question that hits one trigger set of a preference for an aspect.
pub fn trigger_question(aspect: AspectKind, trigger: &[String]) -> String {
    format!("For the {}, could you tell me about {}?", aspect.noun(), trigger.join(" "))
}

/// Asks every preference, searches with the exact arguments, then answers the
/// cheapest option satisfying all predicates. One aspect at a time.
#[derive(Debug, Clone, Copy, Default)]
pub struct OracleFactory;

impl AdapterFactory for OracleFactory {
    fn name(&self) -> String {
        "oracle".into()
    }

    fn create(&self, scenario: &Arc<Scenario>, _seed: u64) -> Box<dyn AgentAdapter> {
        let mut moves = VecDeque::new();
        for task in &scenario.aspects {
            moves.push_back(Move::Search(task.aspect, search_query(task)));
            for p in &task.preferences {
                if let Some(t) = p.trigger_topics.first() {
                    moves.push_back(Move::Call(AgentCall::action(trigger_question(task.aspect, t))));
                }
            }
            if let Some(o) = cheapest_satisfying(task) {
                moves.push_back(Move::Call(AgentCall::answer(format!("I recommend option {}.", o.option_id))));
            }
        }
        Box::new(Queue { name: self.name(), moves, pending_search: None })
    }
}

/// Searches every aspect correctly and answers the cheapest listed option
/// without asking about preferences.
#[derive(Debug, Clone, Copy, Default)]
pub struct GreedyFactory;

impl AdapterFactory for GreedyFactory {
    fn name(&self) -> String {
        "greedy".into()
    }

    fn create(&self, scenario: &Arc<Scenario>, _seed: u64) -> Box<dyn AgentAdapter> {
        let mut moves = VecDeque::new();
        for task in &scenario.aspects {
            moves.push_back(Move::Search(task.aspect, search_query(task)));
            let cheapest = task.options.iter().min_by_key(|o| (o.base_cost().unwrap_or(i64::MAX), o.option_id));
            if let Some(o) = cheapest {
                moves.push_back(Move::Call(AgentCall::answer(format!("Let's book {}.", o.option_id))));
            }
        }
        Box::new(Queue { name: self.name(), moves, pending_search: None })
    }
}

/// Only ever chats without asking anything.
#[derive(Debug, Clone, Copy, Default)]
pub struct ChatterFactory;

impl AdapterFactory for ChatterFactory {
    fn name(&self) -> String {
        "chatter".into()
    }

    fn create(&self, _scenario: &Arc<Scenario>, _seed: u64) -> Box<dyn AgentAdapter> {
        Box::new(Queue { name: self.name(), moves: VecDeque::new(), pending_search: None })
    }
}

/// Guesses an ID for every aspect before searching anything, then chats.
#[derive(Debug, Clone, Copy, Default)]
pub struct AnswerFirstFactory;

impl AdapterFactory for AnswerFirstFactory {
    fn name(&self) -> String {
        "answer_first".into()
    }

    fn create(&self, scenario: &Arc<Scenario>, _seed: u64) -> Box<dyn AgentAdapter> {
        let moves = scenario
            .aspects
            .iter()
            .map(|t| Move::Call(AgentCall::answer(format!("I'll go with {}1.", t.aspect.id_prefix()))))
            .collect();
        Box::new(Queue { name: self.name(), moves, pending_search: None })
    }
}

/// Uniformly random moves: correct or garbled searches, trigger, vague or
/// chatty questions, and answers with random option IDs.
#[derive(Debug, Clone, Copy, Default)]
pub struct RandomFactory;

struct RandomAgent {
    scenario: Arc<Scenario>,
    rng: ChaCha8Rng,
}

impl AgentAdapter for RandomAgent {
    fn name(&self) -> &str {
        "random"
    }

    fn act(&mut self, _ctx: &AgentContext<'_>) -> Result<RawAgentCall, AdapterError> {
        let task = self.scenario.aspects.choose(&mut self.rng).expect("scenario has aspects");
        let call = match self.rng.random_range(0..3) {
            0 if self.rng.random_bool(0.5) => AgentCall::search(search_query(task)),
            0 => AgentCall::search(format!("Search {} options.", task.aspect.noun())),
            1 => {
                let pref = task.preferences.choose(&mut self.rng).expect("aspect has preferences");
                match self.rng.random_range(0..3) {
                    0 => AgentCall::action(trigger_question(task.aspect, &pref.trigger_topics[0])),
                    1 => AgentCall::action(format!("Do you have any preferences for the {}?", task.aspect.noun())),
                    _ => AgentCall::action(CHATTER_LINE),
                }
            }
            _ => {
                let o = task.options.choose(&mut self.rng).expect("aspect has options");
                AgentCall::answer(format!("How about {}?", o.option_id))
            }
        };
        Ok(call.into())
    }
}

impl AdapterFactory for RandomFactory {
    fn name(&self) -> String {
        "random".into()
    }

    fn create(&self, scenario: &Arc<Scenario>, seed: u64) -> Box<dyn AgentAdapter> {
        Box::new(RandomAgent { scenario: scenario.clone(), rng: rng_for(seed, &[label("random-agent")]) })
    }
}

/// Builds a scripted factory by name.
pub fn scripted(name: &str) -> Option<Arc<dyn AdapterFactory>> {
    Some(match name {
        "oracle" => Arc::new(OracleFactory),
        "greedy" => Arc::new(GreedyFactory),
        "random" => Arc::new(RandomFactory),
        "chatter" | "silent" => Arc::new(ChatterFactory),
        "answer_first" | "answer-first" => Arc::new(AnswerFirstFactory),
        _ => return None,
    })
}

pub const SCRIPTED_NAMES: &[&str] = &["oracle", "greedy", "random", "chatter", "answer_first"];
