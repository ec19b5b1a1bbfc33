use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::LazyLock;

use regex::Regex;

use super::{Exchange, RevealRequest, SimulatorBackend};
use crate::catalog::PreferenceCatalog;
use crate::domain::{AspectKind, Preference, Scenario, SearchJudgement, UtteranceClass, UtteranceKind};
use crate::util::{contains_phrase, find_phrase, month_from_name, normalize_text, MonthDay};

/// Replies used for ordinary conversation, rotated deterministically.
pub const NEUTRAL_POOL: [&str; 6] = [
    "I don't have a preference on that.",
    "Everything is fine.",
    "Sounds good to me.",
    "Okay, go ahead.",
    "Sure, that works for me.",
    "Alright, thanks.",
];

/// Words that mark an utterance as asking about preferences in general.
const PREFERENCE_WORDS: [&str; 17] = [
    "prefer",
    "prefers",
    "preference",
    "preferences",
    "preferred",
    "like",
    "want",
    "need",
    "needs",
    "requirement",
    "requirements",
    "important",
    "particular",
    "specific",
    "care about",
    "looking for",
    "wish",
];

static MONTH_DAY: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\b([a-z]{3,9})\.?\s+(\d{1,2})(?:st|nd|rd|th)?\b").expect("valid regex")
});
static DAY_MONTH: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\b(\d{1,2})(?:st|nd|rd|th)?\s+(?:of\s+)?([a-z]{3,9})\b").expect("valid regex")
});
static ISO_DATE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\b(\d{4})-(\d{1,2})-(\d{1,2})\b").expect("valid regex"));
static SLASH_DATE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\b(\d{1,2})/(\d{1,2})(?:/\d{2,4})?\b").expect("valid regex"));

/// Every calendar date mentioned in `text` (US month-first for slashes).
pub(crate) fn extract_dates(text: &str) -> BTreeSet<MonthDay> {
    let mut out = BTreeSet::new();
    let num = |s: &str| s.parse::<u8>().ok();
    for c in MONTH_DAY.captures_iter(text) {
        if let (Some(m), Some(d)) = (month_from_name(&c[1]), num(&c[2])) {
            out.extend(MonthDay::new(m, d));
        }
    }
    for c in DAY_MONTH.captures_iter(text) {
        if let (Some(d), Some(m)) = (num(&c[1]), month_from_name(&c[2])) {
            out.extend(MonthDay::new(m, d));
        }
    }
    for c in ISO_DATE.captures_iter(text) {
        if let (Some(m), Some(d)) = (num(&c[2]), num(&c[3])) {
            out.extend(MonthDay::new(m, d));
        }
    }
    for c in SLASH_DATE.captures_iter(text) {
        if let (Some(m), Some(d)) = (num(&c[1]), num(&c[2])) {
            out.extend(MonthDay::new(m, d));
        }
    }
    out
}

fn mentioned_aspects(normalized: &str) -> Vec<(AspectKind, usize)> {
    AspectKind::ALL
        .into_iter()
        .filter_map(|a| {
            a.keywords().iter().filter_map(|k| find_phrase(normalized, k)).max().map(|pos| (a, pos))
        })
        .collect()
}

#[derive(Debug, Clone)]
struct CityNames {
    name: String,
    phrases: Vec<String>,
}

/// Deterministic keyword-and-pattern simulator driven by the catalog's
/// attribute lexicon and city alias table.
#[derive(Debug, Clone)]
pub struct RuleBased {
    cities: Vec<CityNames>,
    lexicon: BTreeMap<AspectKind, Vec<String>>,
    order: HashMap<String, usize>,
}

impl RuleBased {
    pub fn new(catalog: &PreferenceCatalog) -> Self {
        let cities = catalog
            .cities
            .iter()
            .map(|c| CityNames {
                name: c.name.clone(),
                phrases: std::iter::once(&c.name).chain(&c.aliases).map(|p| normalize_text(p)).collect(),
            })
            .collect();
        let lexicon = catalog
            .aspects
            .iter()
            .map(|(k, a)| (*k, a.attribute_lexicon.clone()))
            .collect();
        let order = catalog
            .aspects
            .values()
            .flat_map(|a| a.preferences.iter())
            .enumerate()
            .map(|(i, p)| (p.preference_id.clone(), i))
            .collect();
        Self { cities, lexicon, order }
    }

    pub fn builtin() -> Self {
        Self::new(&PreferenceCatalog::builtin())
    }

    /// `(byte offset, canonical city name)` for every city mention.
    fn city_mentions(&self, normalized: &str) -> Vec<(usize, &str)> {
        let mut out = Vec::new();
        for c in &self.cities {
            for p in &c.phrases {
                if p.trim().is_empty() {
                    continue;
                }
                out.extend(normalized.match_indices(p.as_str()).map(|(i, _)| (i, c.name.as_str())));
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    fn canonical_city<'a>(&'a self, value: &'a str) -> &'a str {
        self.cities
            .iter()
            .find(|c| c.name.eq_ignore_ascii_case(value))
            .map(|c| c.name.as_str())
            .unwrap_or(value)
    }

    fn is_concrete(&self, normalized: &str, scope: &[AspectKind], scenario: &Scenario) -> bool {
        let lexicon_hit = scope
            .iter()
            .filter_map(|a| self.lexicon.get(a))
            .flatten()
            .any(|w| contains_phrase(normalized, w));
        let trigger_hit = scenario
            .preferences()
            .filter(|p| scope.contains(&p.aspect))
            .flat_map(|p| p.trigger_topics.iter().flatten())
            .any(|w| contains_phrase(normalized, w));
        lexicon_hit || trigger_hit
    }
}

fn role_marker(normalized: &str, pos: usize) -> Option<&'static str> {
    match normalized[..pos].split_whitespace().last() {
        Some("from") => Some("from"),
        Some("to") => Some("to"),
        _ => None,
    }
}

fn triggers_match(p: &Preference, normalized: &str) -> bool {
    p.trigger_topics
        .iter()
        .any(|set| !set.is_empty() && set.iter().all(|kw| contains_phrase(normalized, kw)))
}

impl SimulatorBackend for RuleBased {
    fn name(&self) -> &str {
        "rule_based"
    }

    fn judge_search(&self, scenario: &Scenario, query: &str) -> SearchJudgement {
        let n = normalize_text(query);
        let mentioned = mentioned_aspects(&n);
        let [(aspect, _)] = mentioned.as_slice() else {
            return SearchJudgement::not_aligned();
        };
        let Some(task) = scenario.aspect(*aspect) else {
            return SearchJudgement::not_aligned();
        };

        let mut want_dates = BTreeSet::new();
        let mut want_cities = BTreeSet::new();
        for value in task.ground_truth_search_args.values() {
            match MonthDay::parse_iso(value) {
                Some(d) => {
                    want_dates.insert(d);
                }
                None => {
                    want_cities.insert(self.canonical_city(value));
                }
            }
        }
        if extract_dates(query) != want_dates {
            return SearchJudgement::not_aligned();
        }
        let cities = self.city_mentions(&n);
        let seen: BTreeSet<&str> = cities.iter().map(|(_, c)| *c).collect();
        if seen != want_cities {
            return SearchJudgement::not_aligned();
        }

        if *aspect == AspectKind::Flight {
            let args = &task.ground_truth_search_args;
            let (Some(origin), Some(dest)) = (args.get("origin"), args.get("destination")) else {
                return SearchJudgement::not_aligned();
            };
            let (origin, dest) = (self.canonical_city(origin), self.canonical_city(dest));
            let first = |city: &str| cities.iter().find(|(_, c)| *c == city).map(|(p, _)| *p);
            let misplaced = cities.iter().any(|&(pos, c)| {
                let marker = role_marker(&n, pos);
                (c == origin && marker == Some("to")) || (c == dest && marker == Some("from"))
            });
            let marked = cities.iter().any(|&(pos, _)| role_marker(&n, pos).is_some());
            let ordered = marked || first(origin) < first(dest);
            if misplaced || !ordered {
                return SearchJudgement::not_aligned();
            }
        }
        SearchJudgement::aligned(*aspect)
    }

    fn classify_utterance(
        &self,
        scenario: &Scenario,
        history: &[Exchange],
        utterance: &str,
        unrevealed: &[&Preference],
    ) -> UtteranceClass {
        let n = normalize_text(utterance);
        let mentioned = mentioned_aspects(&n);
        let scope: Vec<AspectKind> = if mentioned.is_empty() {
            AspectKind::ALL.to_vec()
        } else {
            mentioned.iter().map(|(a, _)| *a).collect()
        };

        let recency = |aspect: AspectKind| -> (usize, usize) {
            if let Some((_, pos)) = mentioned.iter().find(|(a, _)| *a == aspect) {
                return (history.len() + 1, *pos);
            }
            history
                .iter()
                .enumerate()
                .rev()
                .find_map(|(i, e)| {
                    let h = normalize_text(&e.text);
                    aspect.keywords().iter().filter_map(|k| find_phrase(&h, k)).max().map(|pos| (i + 1, pos))
                })
                .unwrap_or((0, 0))
        };

        let best = unrevealed
            .iter()
            .enumerate()
            .filter(|(_, p)| scope.contains(&p.aspect) && triggers_match(p, &n))
            .min_by_key(|(i, p)| {
                let (turn, pos) = recency(p.aspect);
                let rank = self.order.get(&p.preference_id).copied().unwrap_or(usize::MAX);
                (std::cmp::Reverse((turn, pos)), rank, *i)
            });
        if let Some((_, p)) = best {
            return UtteranceClass::held(p.preference_id.clone());
        }
        if self.is_concrete(&n, &scope, scenario) {
            return UtteranceClass::of(UtteranceKind::UnheldPreference);
        }
        if PREFERENCE_WORDS.iter().any(|w| contains_phrase(&n, w)) {
            return UtteranceClass::of(UtteranceKind::Vague);
        }
        UtteranceClass::of(UtteranceKind::Other)
    }

    fn render_preference_reveal(&self, req: &RevealRequest<'_>) -> String {
        req.statement().to_string()
    }

    fn render_proactive_reveal(&self, req: &RevealRequest<'_>) -> String {
        let statement = req.statement();
        let aspect = req.preference.aspect;
        let n = normalize_text(statement);
        if aspect.keywords().iter().any(|k| contains_phrase(&n, k)) {
            statement.to_string()
        } else {
            format!("By the way, about the {}: {statement}", aspect.noun())
        }
    }

    fn render_neutral(&self, history: &[Exchange], _utterance: &str) -> String {
        let agent_turns = history.iter().filter(|e| e.speaker == super::Speaker::Agent).count();
        NEUTRAL_POOL[agent_turns % NEUTRAL_POOL.len()].to_string()
    }
}
