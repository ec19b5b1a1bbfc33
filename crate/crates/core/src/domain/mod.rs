//! Core data model: aspects, preferences, options, scenarios, configuration
//! and the per-turn records an episode produces.

mod config;
mod episode;
mod predicate;
mod validate;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

pub use config::{ConfigError, EnvConfig, Mode, OffTopicPolicy};
pub use episode::{
    AgentCall, AnswerEval, AnswerStatus, Choice, EpisodeLog, LogError, LogRecord, MalformedCall,
    ParsedLog, RawAgentCall,
    Reveal, RevealMode, RewardComponent, RewardKind, SearchOutcome, SearchJudgement, TerminalReason,
    TurnRecord, UtteranceClass, UtteranceKind,
};
pub use predicate::{is_plausible, matches_search_args, Predicate};
pub use validate::{
    validate_scenario, validate_scenario_with, OptionCounts, ValidationReport, Violation,
    ViolationCode,
};

/// One travel-planning dimension. Each kind owns a distinct option-ID prefix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AspectKind {
    Flight,
    Hotel,
    Apartment,
    RentalCar,
    Restaurant,
}

impl AspectKind {
    pub const ALL: [AspectKind; 5] = [
        AspectKind::Flight,
        AspectKind::Hotel,
        AspectKind::Apartment,
        AspectKind::RentalCar,
        AspectKind::Restaurant,
    ];

    pub fn id_prefix(self) -> char {
        match self {
            AspectKind::Flight => 'F',
            AspectKind::Hotel => 'H',
            AspectKind::Apartment => 'A',
            AspectKind::RentalCar => 'C',
            AspectKind::Restaurant => 'R',
        }
    }

    pub fn from_prefix(prefix: char) -> Option<AspectKind> {
        AspectKind::ALL.into_iter().find(|a| a.id_prefix() == prefix)
    }

    /// Wire name, as used in JSON and in judge verdicts.
    pub fn as_str(self) -> &'static str {
        match self {
            AspectKind::Flight => "flight",
            AspectKind::Hotel => "hotel",
            AspectKind::Apartment => "apartment",
            AspectKind::RentalCar => "rental_car",
            AspectKind::Restaurant => "restaurant",
        }
    }

    /// Human noun used in user-facing text.
    pub fn noun(self) -> &'static str {
        match self {
            AspectKind::Flight => "flight",
            AspectKind::Hotel => "hotel",
            AspectKind::Apartment => "apartment",
            AspectKind::RentalCar => "rental car",
            AspectKind::Restaurant => "restaurant",
        }
    }

    /// Words that name the aspect itself (not any attribute of it).
    pub fn keywords(self) -> &'static [&'static str] {
        match self {
            AspectKind::Flight => &["flight", "flights", "fly", "flying", "airfare", "plane"],
            AspectKind::Hotel => &["hotel", "hotels", "motel"],
            AspectKind::Apartment => &["apartment", "apartments", "airbnb", "condo"],
            AspectKind::RentalCar => &[
                "rental car",
                "car rental",
                "car",
                "cars",
                "vehicle",
                "rent a car",
            ],
            AspectKind::Restaurant => &["restaurant", "restaurants", "dining", "dinner"],
        }
    }
}

impl fmt::Display for AspectKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AspectKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace([' ', '-'], "_");
        match norm.as_str() {
            "flight" => Ok(AspectKind::Flight),
            "hotel" => Ok(AspectKind::Hotel),
            "apartment" => Ok(AspectKind::Apartment),
            "rental_car" | "car_rental" | "car" => Ok(AspectKind::RentalCar),
            "restaurant" => Ok(AspectKind::Restaurant),
            _ => Err(format!("unknown aspect `{s}`")),
        }
    }
}

/// `F15`, `H3`, ...: aspect prefix letter followed by a positive integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OptionId {
    pub aspect: AspectKind,
    pub number: u32,
}

impl OptionId {
    pub fn new(aspect: AspectKind, number: u32) -> Self {
        Self { aspect, number }
    }
}

impl fmt::Display for OptionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.aspect.id_prefix(), self.number)
    }
}

impl FromStr for OptionId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut chars = s.chars();
        let prefix = chars.next().ok_or_else(|| "empty option id".to_string())?;
        let aspect = AspectKind::from_prefix(prefix)
            .ok_or_else(|| format!("unknown option prefix `{prefix}`"))?;
        let digits = chars.as_str();
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) || digits.starts_with('0')
        {
            return Err(format!("malformed option id `{s}`"));
        }
        let number = digits
            .parse::<u32>()
            .map_err(|_| format!("malformed option id `{s}`"))?;
        Ok(OptionId { aspect, number })
    }
}

impl Serialize for OptionId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for OptionId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Hidden label of an option. Never shown to agents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Best,
    Correct,
    Wrong,
    Noise,
}

impl Label {
    /// Best and correct options both satisfy every preference.
    pub fn is_correct(self) -> bool {
        matches!(self, Label::Best | Label::Correct)
    }
}

/// A visible option field value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FieldValue {
    Int(i64),
    Text(String),
    List(Vec<String>),
    Services(IndexMap<String, i64>),
}

impl FieldValue {
    pub fn as_int(&self) -> Option<i64> {
        match self {
            FieldValue::Int(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            FieldValue::Text(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[String]> {
        match self {
            FieldValue::List(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_services(&self) -> Option<&IndexMap<String, i64>> {
        match self {
            FieldValue::Services(v) => Some(v),
            _ => None,
        }
    }
}

/// Name of the field that carries an option's base price.
pub const BASE_COST_FIELD: &str = "base_cost";
/// Name of the field that carries optional paid services.
pub const SERVICES_FIELD: &str = "service_costs";
/// Name of the route field for flights (`[origin, layovers.., destination]`).
pub const ROUTE_FIELD: &str = "path";

pub type VisibleFields = IndexMap<String, FieldValue>;

/// A hidden user constraint on one aspect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preference {
    pub preference_id: String,
    pub aspect: AspectKind,
    pub category: String,
    pub canonical_statement: String,
    pub implicit_statements: Vec<String>,
    /// Each inner set is a conjunction of keywords/phrases; any matching set
    /// means the utterance is about this preference.
    pub trigger_topics: Vec<Vec<String>>,
    pub predicate: Predicate,
}

impl Preference {
    /// Service charge this preference forces onto an option, if any.
    pub fn required_service(&self) -> Option<&str> {
        match &self.predicate {
            Predicate::ServiceOffered { service } => Some(service),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptionRecord {
    pub option_id: OptionId,
    pub aspect: AspectKind,
    pub visible_fields: VisibleFields,
    pub label: Label,
    pub label_reason: String,
    pub effective_total_cost: i64,
}

impl OptionRecord {
    pub fn base_cost(&self) -> Option<i64> {
        self.visible_fields.get(BASE_COST_FIELD).and_then(FieldValue::as_int)
    }
}

/// Base cost plus every service charge the preferences require. Services the
/// option does not offer add nothing (the option then violates a preference).
pub fn effective_total_cost(fields: &VisibleFields, preferences: &[Preference]) -> i64 {
    let base = fields
        .get(BASE_COST_FIELD)
        .and_then(FieldValue::as_int)
        .unwrap_or(0);
    let services = fields.get(SERVICES_FIELD).and_then(FieldValue::as_services);
    let extras: i64 = preferences
        .iter()
        .filter_map(Preference::required_service)
        .filter_map(|svc| services.and_then(|s| s.get(svc)).copied())
        .sum();
    base + extras
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AspectTask {
    pub aspect: AspectKind,
    pub ground_truth_search_args: IndexMap<String, String>,
    pub preferences: Vec<Preference>,
    pub options: Vec<OptionRecord>,
    /// Inclusive plausibility bounds for numeric fields.
    #[serde(default)]
    pub plausible_ranges: BTreeMap<String, [i64; 2]>,
}

impl AspectTask {
    pub fn option(&self, id: OptionId) -> Option<&OptionRecord> {
        self.options.iter().find(|o| o.option_id == id)
    }

    pub fn best(&self) -> Option<&OptionRecord> {
        self.options.iter().find(|o| o.label == Label::Best)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    Easy,
    Medium,
    Hard,
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tier::Easy => "easy",
            Tier::Medium => "medium",
            Tier::Hard => "hard",
        })
    }
}

/// Per-aspect preference counts, e.g. `223`. Stored sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Composition(Vec<u8>);

impl Composition {
    pub fn new(mut counts: Vec<u8>) -> Self {
        counts.sort_unstable();
        Self(counts)
    }

    pub fn counts(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> usize {
        self.0.iter().map(|&c| c as usize).sum()
    }
}

impl fmt::Display for Composition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.0 {
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl FromStr for Composition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let s = s.strip_prefix("Travel-").unwrap_or(s);
        if s.is_empty() {
            return Err("empty composition".into());
        }
        let counts = s
            .chars()
            .map(|c| {
                c.to_digit(10)
                    .map(|d| d as u8)
                    .ok_or_else(|| format!("composition `{s}` must be digits"))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Composition::new(counts))
    }
}

impl Serialize for Composition {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Composition {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Ok(Composition::new(Vec::<u8>::deserialize(d)?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub scenario_id: String,
    pub description: String,
    pub tier: Tier,
    pub composition: Composition,
    pub aspects: Vec<AspectTask>,
}

impl Scenario {
    pub fn aspect(&self, kind: AspectKind) -> Option<&AspectTask> {
        self.aspects.iter().find(|a| a.aspect == kind)
    }

    pub fn aspect_kinds(&self) -> Vec<AspectKind> {
        self.aspects.iter().map(|a| a.aspect).collect()
    }

    pub fn preferences(&self) -> impl Iterator<Item = &Preference> {
        self.aspects.iter().flat_map(|a| a.preferences.iter())
    }

    pub fn preference(&self, id: &str) -> Option<&Preference> {
        self.preferences().find(|p| p.preference_id == id)
    }

    pub fn option(&self, id: OptionId) -> Option<&OptionRecord> {
        self.aspect(id.aspect).and_then(|a| a.option(id))
    }

    /// SHA-256 over the canonical JSON encoding.
    pub fn digest(&self) -> String {
        crate::util::sha256_json(self)
    }
}
