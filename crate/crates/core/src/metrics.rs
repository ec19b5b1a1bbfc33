//! Score and auxiliary metrics computed from episode logs alone.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::domain::{
    AnswerStatus, AspectKind, Choice, EpisodeLog, Label, Mode, RevealMode, RewardKind, Tier, TurnRecord,
    UtteranceKind,
};

/// A recorded recommendation with its normalized answer reward in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnswerPoint {
    pub turn_index: u32,
    pub aspect: AspectKind,
    pub label: Label,
    pub reward: f64,
}

/// Unscaled answer reward of one turn (choice reward minus any wrong-choice
/// penalty), clamped to [0, 1].
pub fn answer_reward(turn: &TurnRecord) -> f64 {
    let raw: f64 = turn
        .components
        .iter()
        .filter(|c| {
            matches!(c.kind, RewardKind::ChoiceBest | RewardKind::ChoiceCorrect | RewardKind::WrongChoicePenalty)
        })
        .fold(0.0, |acc, c| acc + c.value);
    raw.clamp(0.0, 1.0)
}

/// Every recorded answer in turn order.
pub fn answers(log: &EpisodeLog) -> Vec<AnswerPoint> {
    log.turns
        .iter()
        .filter_map(|t| {
            let e = t.answer_eval.as_ref()?;
            if e.status != AnswerStatus::Recorded {
                return None;
            }
            Some(AnswerPoint { turn_index: t.turn_index, aspect: e.aspect?, label: e.label?, reward: answer_reward(t) })
        })
        .collect()
}

/// Per-aspect answer score: the first recorded reward (single choice) or the
/// maximum (multi choice); unanswered aspects score 0.
pub fn aspect_scores(log: &EpisodeLog, mode: Mode) -> Vec<(AspectKind, f64)> {
    let points = answers(log);
    log.aspects
        .iter()
        .map(|&a| {
            let mut rewards = points.iter().filter(|p| p.aspect == a).map(|p| p.reward);
            let s = match mode {
                Mode::SingleChoice => rewards.next().unwrap_or(0.0),
                Mode::MultiChoice => rewards.fold(0.0, f64::max),
            };
            (a, s)
        })
        .collect()
}

/// Mean per-aspect score.
pub fn score_episode(log: &EpisodeLog, mode: Mode) -> f64 {
    let scores = aspect_scores(log, mode);
    if scores.is_empty() {
        return 0.0;
    }
    scores.iter().map(|(_, s)| s).sum::<f64>() / scores.len() as f64
}

/// Raw counts for one episode; every report rate is a ratio of sums of these.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeCounts {
    pub scenario_id: String,
    pub tier: Tier,
    pub composition: String,
    #[serde(default)]
    pub sample: u32,
    pub score: f64,
    pub aspects: u64,
    pub best_hits: u64,
    pub correct_hits: u64,
    pub search_attempts: u64,
    pub aligned_searches: u64,
    pub action_turns: u64,
    pub type1_actions: u64,
    pub preferences: u64,
    pub active_reveals: u64,
    pub passive_reveals: u64,
    /// Aspects with a valid (reward > 0) answer.
    pub timed_aspects: u64,
    pub first_index_sum: u64,
    pub weighted_sum: f64,
    pub turns: u64,
    pub protocol_errors: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terminal_reason: Option<String>,
}

/// How the weighted timing score weighs a discovery at turn `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimingWeight {
    /// `w(i) * reward`.
    #[default]
    Reward,
    /// `w(i)` alone.
    Indicator,
}

pub fn timing_weight(turn_index: u32) -> f64 {
    1.0 / (turn_index as f64 + 1.0)
}

impl EpisodeCounts {
    pub fn from_log(log: &EpisodeLog, timing: TimingWeight) -> Self {
        let mode = log.config.mode;
        let points = answers(log);
        let mut best_hits = 0;
        let mut correct_hits = 0;
        let mut timed_aspects = 0;
        let mut first_index_sum = 0;
        let mut weighted_sum = 0.0;
        for &a in &log.aspects {
            let mine: Vec<&AnswerPoint> = points.iter().filter(|p| p.aspect == a).collect();
            if mine.iter().any(|p| p.label == Label::Best) {
                best_hits += 1;
            }
            if mine.iter().any(|p| p.label.is_correct()) {
                correct_hits += 1;
            }
            if let Some(p) = mine.iter().find(|p| p.reward > 0.0) {
                timed_aspects += 1;
                first_index_sum += p.turn_index as u64;
                weighted_sum += match timing {
                    TimingWeight::Reward => timing_weight(p.turn_index) * p.reward,
                    TimingWeight::Indicator => timing_weight(p.turn_index),
                };
            }
        }
        let mut c = EpisodeCounts {
            scenario_id: log.scenario_id.clone(),
            tier: log.tier,
            composition: log.composition.to_string(),
            sample: 0,
            score: score_episode(log, mode),
            aspects: log.aspects.len() as u64,
            best_hits,
            correct_hits,
            search_attempts: 0,
            aligned_searches: 0,
            action_turns: 0,
            type1_actions: 0,
            preferences: log.preference_ids.len() as u64,
            active_reveals: 0,
            passive_reveals: 0,
            timed_aspects,
            first_index_sum,
            weighted_sum,
            turns: log.turns.len() as u64,
            protocol_errors: 0,
            terminal_reason: log.terminal_reason.map(|r| r.to_string()),
        };
        for t in &log.turns {
            match t.choice {
                Some(Choice::Search) => {
                    c.search_attempts += 1;
                    if t.judgement.is_some_and(|j| j.aligned) {
                        c.aligned_searches += 1;
                    }
                }
                Some(Choice::Action) => {
                    c.action_turns += 1;
                    if t.classification.as_ref().is_some_and(|k| k.kind == UtteranceKind::HeldPreference) {
                        c.type1_actions += 1;
                    }
                }
                Some(Choice::Answer) => {}
                None => c.protocol_errors += 1,
            }
            for r in &t.revealed {
                match r.mode {
                    RevealMode::Active => c.active_reveals += 1,
                    RevealMode::Passive => c.passive_reveals += 1,
                }
            }
        }
        c
    }
}

/// Data-quality notes for rates whose denominator was zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ZeroDenominators {
    pub aspects: bool,
    pub search_attempts: bool,
    pub action_turns: bool,
    pub preferences: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub mean_first_index: f64,
    pub mean_weighted_score: f64,
    pub coverage: f64,
}

/// One report row: micro-averaged rates over a set of episodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub group: String,
    pub episodes: u64,
    pub scenarios: u64,
    pub best_exist_rate: f64,
    pub correct_exist_rate: f64,
    /// Mean episode score.
    pub score: f64,
    /// Mean over scenarios of the best score among that scenario's samples.
    pub max_over_k_score: f64,
    pub valid_search_rate: f64,
    pub valid_action_rate: f64,
    pub active_elicited: f64,
    pub passive_elicited: f64,
    pub timing: Timing,
    pub mean_turns: f64,
    pub protocol_errors: u64,
    pub zero_denominators: ZeroDenominators,
}

fn ratio(num: f64, den: f64, flag: &mut bool) -> f64 {
    if den == 0.0 {
        *flag = true;
        0.0
    } else {
        num / den
    }
}

impl MetricsRow {
    pub fn from_counts(group: impl Into<String>, eps: &[&EpisodeCounts]) -> Self {
        let sum = |f: fn(&EpisodeCounts) -> u64| eps.iter().map(|e| f(e)).sum::<u64>() as f64;
        let mut z = ZeroDenominators::default();
        let aspects = sum(|e| e.aspects);
        let timed = sum(|e| e.timed_aspects);
        let mut by_scenario: BTreeMap<&str, f64> = BTreeMap::new();
        for e in eps {
            let best = by_scenario.entry(&e.scenario_id).or_insert(f64::NEG_INFINITY);
            *best = best.max(e.score);
        }
        let n = eps.len() as f64;
        let mut empty = false;
        let mean_score = ratio(eps.iter().map(|e| e.score).sum(), n, &mut empty);
        let max_k = ratio(by_scenario.values().sum(), by_scenario.len() as f64, &mut empty);
        let mut no_timed = false;
        MetricsRow {
            group: group.into(),
            episodes: eps.len() as u64,
            scenarios: by_scenario.len() as u64,
            best_exist_rate: ratio(sum(|e| e.best_hits), aspects, &mut z.aspects),
            correct_exist_rate: ratio(sum(|e| e.correct_hits), aspects, &mut z.aspects),
            score: mean_score,
            max_over_k_score: max_k,
            valid_search_rate: ratio(sum(|e| e.aligned_searches), sum(|e| e.search_attempts), &mut z.search_attempts),
            valid_action_rate: ratio(sum(|e| e.type1_actions), sum(|e| e.action_turns), &mut z.action_turns),
            active_elicited: ratio(sum(|e| e.active_reveals), sum(|e| e.preferences), &mut z.preferences),
            passive_elicited: ratio(sum(|e| e.passive_reveals), sum(|e| e.preferences), &mut z.preferences),
            timing: Timing {
                mean_first_index: ratio(sum(|e| e.first_index_sum), timed, &mut no_timed),
                mean_weighted_score: ratio(eps.iter().map(|e| e.weighted_sum).sum(), aspects, &mut z.aspects),
                coverage: ratio(timed, aspects, &mut z.aspects),
            },
            mean_turns: ratio(sum(|e| e.turns), n, &mut empty),
            protocol_errors: sum(|e| e.protocol_errors) as u64,
            zero_denominators: z,
        }
    }

    /// Headline columns in report order; elicitation is split active/passive.
    pub fn headline(&self) -> [f64; 7] {
        [
            self.best_exist_rate,
            self.correct_exist_rate,
            self.score,
            self.valid_search_rate,
            self.valid_action_rate,
            self.active_elicited,
            self.passive_elicited,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupBy {
    #[default]
    Tier,
    Composition,
    None,
}

impl std::str::FromStr for GroupBy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tier" => Ok(GroupBy::Tier),
            "composition" => Ok(GroupBy::Composition),
            "none" => Ok(GroupBy::None),
            other => Err(format!("unknown grouping `{other}` (expected tier, composition or none)")),
        }
    }
}

/// Overall row plus one row per group (tiers ordered easy < medium < hard,
/// compositions by preference count then lexically).
pub fn aggregate(episodes: &[EpisodeCounts], group_by: GroupBy) -> (MetricsRow, Vec<MetricsRow>) {
    let all: Vec<&EpisodeCounts> = episodes.iter().collect();
    let overall = MetricsRow::from_counts("all", &all);
    let groups = match group_by {
        GroupBy::None => Vec::new(),
        GroupBy::Tier => {
            let mut m: BTreeMap<Tier, Vec<&EpisodeCounts>> = BTreeMap::new();
            for e in episodes {
                m.entry(e.tier).or_default().push(e);
            }
            m.into_iter().map(|(t, v)| MetricsRow::from_counts(t.to_string(), &v)).collect()
        }
        GroupBy::Composition => {
            let mut m: BTreeMap<(usize, String), Vec<&EpisodeCounts>> = BTreeMap::new();
            for e in episodes {
                m.entry((e.composition.len(), e.composition.clone())).or_default().push(e);
            }
            m.into_iter().map(|((_, c), v)| MetricsRow::from_counts(format!("Travel-{c}"), &v)).collect()
        }
    };
    (overall, groups)
}
