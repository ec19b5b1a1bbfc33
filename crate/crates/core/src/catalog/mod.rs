//! Preference catalog storage, difficulty tiers and synthetic scenario
//! generation by random preference combination.

mod generate;

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::domain::{AspectKind, Composition, Predicate, Preference, Tier, ROUTE_FIELD, SERVICES_FIELD, BASE_COST_FIELD};
use crate::util::normalize_text;

pub use generate::{
    generate_dataset, sample_scenario, sample_scenario_with, synthesize_options, Dataset,
    DatasetManifest, PlanEntry, TripPlan,
};

const BUILTIN_CATALOG: &str = include_str!("../../assets/catalog.json");

#[derive(Debug, thiserror::Error)]
pub enum CatalogError {
    #[error("MALFORMED_CATALOG: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("INVARIANT_VIOLATION: {}", .0.join("; "))]
    InvariantViolation(Vec<String>),
    #[error("UNSUPPORTED_COMPOSITION: {0}")]
    UnsupportedComposition(String),
    #[error("CATALOG_TOO_SMALL: {0}")]
    TooSmall(String),
    #[error("EMPTY_PLAN: dataset plan has no entries")]
    EmptyPlan,
}

impl CatalogError {
    /// Machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            CatalogError::Malformed(_) => "MALFORMED_CATALOG",
            CatalogError::InvariantViolation(_) => "INVARIANT_VIOLATION",
            CatalogError::UnsupportedComposition(_) => "UNSUPPORTED_COMPOSITION",
            CatalogError::TooSmall(_) => "CATALOG_TOO_SMALL",
            CatalogError::EmptyPlan => "EMPTY_PLAN",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct City {
    pub name: String,
    #[serde(default)]
    pub aliases: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServiceTemplate {
    pub name: String,
    pub min: i64,
    pub max: i64,
    pub step: i64,
}

/// How values for one visible field are drawn.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldKind {
    /// Flight path from the searched origin to destination, optionally via
    /// one layover city drawn from the trip's city list.
    Route,
    /// Copies a ground-truth search argument verbatim.
    SearchArg { arg: String },
    Text { pool: Vec<String> },
    /// Grid `min, min+step, ..., max`; `plausible` bounds what a real option
    /// may show, `implausible` is the out-of-band value noise options use.
    Int {
        min: i64,
        max: i64,
        step: i64,
        plausible: [i64; 2],
        #[serde(default)]
        implausible: Option<i64>,
    },
    List { pool: Vec<String>, min_len: usize, max_len: usize },
    Services { pool: Vec<ServiceTemplate> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldTemplate {
    pub name: String,
    /// Display label used when listing options.
    pub label: String,
    #[serde(flatten)]
    pub kind: FieldKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AspectCatalog {
    pub fields: Vec<FieldTemplate>,
    /// Attribute-level terms; an utterance mentioning one is concrete.
    pub attribute_lexicon: Vec<String>,
    pub preferences: Vec<Preference>,
}

impl AspectCatalog {
    pub fn field(&self, name: &str) -> Option<&FieldTemplate> {
        self.fields.iter().find(|f| f.name == name)
    }

    pub fn categories(&self) -> BTreeSet<&str> {
        self.preferences.iter().map(|p| p.category.as_str()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogMetadata {
    pub aspects: usize,
    pub categories: usize,
    pub total_preferences: usize,
    pub elicitation_ways: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceCatalog {
    pub version: u32,
    pub cities: Vec<City>,
    pub aspects: BTreeMap<AspectKind, AspectCatalog>,
}

/// Ground-truth search arguments each aspect's options must carry.
pub fn search_arg_names(aspect: AspectKind) -> &'static [&'static str] {
    match aspect {
        AspectKind::Flight => &["origin", "destination", "date"],
        AspectKind::Hotel | AspectKind::Apartment => &["city", "check_in", "check_out"],
        AspectKind::RentalCar => &["city", "pickup_date", "return_date"],
        AspectKind::Restaurant => &["city", "date"],
    }
}

/// Difficulty tier of a preference composition: the largest per-aspect
/// count decides (2 easy, 3 medium, 4 hard). This reproduces the published
/// menu (22/2222 easy; 33/233/333 medium; 44/334/444 hard).
pub fn tier_of(composition: &Composition) -> Result<Tier, CatalogError> {
    let counts = composition.counts();
    if !(2..=4).contains(&counts.len()) || counts.iter().any(|c| !(2..=4).contains(c)) {
        return Err(CatalogError::UnsupportedComposition(format!(
            "composition `{composition}` needs 2-4 aspects with 2-4 preferences each"
        )));
    }
    Ok(match counts.iter().max() {
        Some(2) => Tier::Easy,
        Some(3) => Tier::Medium,
        _ => Tier::Hard,
    })
}

/// Reads a catalog document and checks every invariant.
pub fn load_catalog(source: &[u8]) -> Result<PreferenceCatalog, CatalogError> {
    let catalog: PreferenceCatalog = serde_json::from_slice(source)?;
    let problems = catalog.check();
    if problems.is_empty() {
        Ok(catalog)
    } else {
        Err(CatalogError::InvariantViolation(problems))
    }
}

impl PreferenceCatalog {
    /// The catalog shipped with the crate.
    pub fn builtin() -> PreferenceCatalog {
        load_catalog(BUILTIN_CATALOG.as_bytes()).expect("built-in catalog is valid")
    }

    pub fn aspect(&self, kind: AspectKind) -> Option<&AspectCatalog> {
        self.aspects.get(&kind)
    }

    pub fn metadata(&self) -> CatalogMetadata {
        let prefs = || self.aspects.values().flat_map(|a| a.preferences.iter());
        CatalogMetadata {
            aspects: self.aspects.len(),
            categories: self.aspects.values().map(|a| a.categories().len()).sum(),
            total_preferences: prefs().count(),
            elicitation_ways: prefs().map(|p| p.implicit_statements.len()).sum(),
        }
    }

    pub fn digest(&self) -> String {
        crate::util::sha256_json(self)
    }

    /// Position of a preference in catalog order (aspect order, then
    /// listing order).
    pub fn order_of(&self, preference_id: &str) -> Option<usize> {
        self.aspects
            .values()
            .flat_map(|a| a.preferences.iter())
            .position(|p| p.preference_id == preference_id)
    }

    pub fn city_names(&self) -> Vec<&str> {
        self.cities.iter().map(|c| c.name.as_str()).collect()
    }

    /// Every invariant violation, as human-readable lines.
    pub fn check(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.cities.len() < 3 {
            out.push("need at least 3 cities".to_string());
        }
        for kind in AspectKind::ALL {
            if !self.aspects.contains_key(&kind) {
                out.push(format!("aspect {kind} missing"));
            }
        }
        let mut ids = HashSet::new();
        for (&kind, a) in &self.aspects {
            check_aspect(kind, a, &mut ids, &mut out);
        }
        out
    }
}

fn check_aspect(kind: AspectKind, a: &AspectCatalog, ids: &mut HashSet<String>, out: &mut Vec<String>) {
    if a.preferences.len() < 4 {
        out.push(format!("{kind}: needs at least 4 preferences, has {}", a.preferences.len()));
    }
    if a.categories().len() < 4 {
        out.push(format!("{kind}: needs at least 4 preference categories"));
    }
    for arg in search_arg_names(kind) {
        let covered = match *arg {
            "origin" | "destination" => a.fields.iter().any(|f| matches!(f.kind, FieldKind::Route)),
            _ => a
                .fields
                .iter()
                .any(|f| matches!(&f.kind, FieldKind::SearchArg { arg: x } if x == arg) && f.name == *arg),
        };
        if !covered {
            out.push(format!("{kind}: no field carries search argument `{arg}`"));
        }
    }
    match a.field(BASE_COST_FIELD).map(|f| &f.kind) {
        Some(FieldKind::Int { .. }) => {}
        _ => out.push(format!("{kind}: `{BASE_COST_FIELD}` must be an int field")),
    }
    if !a.fields.iter().any(|f| matches!(f.kind, FieldKind::Int { implausible: Some(_), .. })) {
        out.push(format!("{kind}: no int field declares an implausible value"));
    }
    for f in &a.fields {
        match &f.kind {
            FieldKind::Int { min, max, step, plausible, implausible } => {
                if *step <= 0 || min > max || (max - min) % step != 0 || plausible[0] > *min || plausible[1] < *max {
                    out.push(format!("{kind}.{}: bad int grid or plausible range", f.name));
                }
                if let Some(v) = implausible {
                    if (plausible[0]..=plausible[1]).contains(v) {
                        out.push(format!("{kind}.{}: implausible value lies inside plausible range", f.name));
                    }
                }
            }
            FieldKind::Text { pool } if pool.len() < 2 => {
                out.push(format!("{kind}.{}: text pool needs 2+ values", f.name))
            }
            FieldKind::List { pool, min_len, max_len } if min_len > max_len || *max_len > pool.len() => {
                out.push(format!("{kind}.{}: bad list lengths", f.name))
            }
            FieldKind::Route if f.name != ROUTE_FIELD => {
                out.push(format!("{kind}: route field must be named `{ROUTE_FIELD}`"))
            }
            FieldKind::Services { .. } if f.name != SERVICES_FIELD => {
                out.push(format!("{kind}: services field must be named `{SERVICES_FIELD}`"))
            }
            _ => {}
        }
    }
    let lexicon: Vec<String> = a.attribute_lexicon.iter().map(|w| normalize_text(w)).collect();
    let mut scalar_fields: BTreeMap<&str, &str> = BTreeMap::new();
    for p in &a.preferences {
        let loc = format!("{kind}/{}", p.preference_id);
        if !ids.insert(p.preference_id.clone()) {
            out.push(format!("{loc}: duplicate preference_id"));
        }
        if p.aspect != kind {
            out.push(format!("{loc}: listed under {kind} but declares {}", p.aspect));
        }
        if p.implicit_statements.len() < 2 {
            out.push(format!("{loc}: needs at least 2 implicit statements"));
        }
        let canonical = p.canonical_statement.to_lowercase();
        if p.implicit_statements.iter().any(|s| s.to_lowercase().contains(&canonical)) {
            out.push(format!("{loc}: an implicit statement contains the canonical statement"));
        }
        if p.trigger_topics.is_empty() || p.trigger_topics.iter().any(Vec::is_empty) {
            out.push(format!("{loc}: trigger topics must be non-empty"));
        }
        for kw in p.trigger_topics.iter().flatten() {
            if !lexicon.contains(&normalize_text(kw)) {
                out.push(format!("{loc}: trigger `{kw}` is not in the attribute lexicon"));
            }
        }
        check_predicate(kind, a, p, &loc, out);
        let field = p.predicate.field();
        let scalar = matches!(
            a.field(field).map(|f| &f.kind),
            Some(FieldKind::Text { .. } | FieldKind::Int { .. } | FieldKind::Route)
        );
        if scalar {
            if let Some(other) = scalar_fields.insert(field, p.category.as_str()) {
                if other != p.category {
                    out.push(format!("{loc}: field `{field}` is shared with category `{other}`"));
                }
            }
        }
    }
}

/// A predicate must be both satisfiable and violable inside the template.
fn check_predicate(kind: AspectKind, a: &AspectCatalog, p: &Preference, loc: &str, out: &mut Vec<String>) {
    let Some(field) = a.field(p.predicate.field()) else {
        out.push(format!("{loc}: predicate field `{}` missing from {kind} template", p.predicate.field()));
        return;
    };
    let ok = match (&p.predicate, &field.kind) {
        (Predicate::TextIs { value, .. }, FieldKind::Text { pool }) => {
            pool.iter().any(|v| v.eq_ignore_ascii_case(value))
                && pool.iter().any(|v| !v.eq_ignore_ascii_case(value))
        }
        (Predicate::TextIn { values, .. }, FieldKind::Text { pool }) => {
            let inside = |v: &String| values.iter().any(|x| x.eq_ignore_ascii_case(v));
            pool.iter().any(inside) && !pool.iter().all(inside)
        }
        (Predicate::ListHas { item, .. }, FieldKind::List { pool, .. }) => {
            pool.iter().any(|v| v.eq_ignore_ascii_case(item))
        }
        (Predicate::AtLeast { min: bound, .. }, FieldKind::Int { min, max, .. }) => {
            bound > min && bound <= max
        }
        (Predicate::AtMost { max: bound, .. }, FieldKind::Int { min, max, .. }) => {
            bound >= min && bound < max
        }
        (Predicate::ListLenAtMost { max, .. }, FieldKind::Route) => *max == 2,
        (Predicate::ServiceOffered { service }, FieldKind::Services { pool }) => {
            pool.iter().any(|s| &s.name == service)
        }
        _ => false,
    };
    if !ok {
        out.push(format!("{loc}: predicate cannot be both satisfied and violated by the template"));
    }
}
