use std::collections::BTreeMap;

use indexmap::IndexMap;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{search_arg_names, tier_of, AspectCatalog, CatalogError, FieldKind, FieldTemplate, PreferenceCatalog};
use crate::domain::{
    effective_total_cost, AspectKind, AspectTask, Composition, FieldValue, Label, OptionCounts, OptionId,
    OptionRecord, Predicate, Preference, Scenario, Tier, VisibleFields, BASE_COST_FIELD, ROUTE_FIELD,
    SERVICES_FIELD,
};
use crate::util::{derive_seed, label, rng_for, MonthDay};

/// Coarse trip facts every aspect's search arguments derive from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TripPlan {
    pub origin: String,
    pub destination: String,
    pub start: MonthDay,
    pub end: MonthDay,
    pub restaurant_date: MonthDay,
}

impl TripPlan {
    fn sample(cities: &[&str], rng: &mut ChaCha8Rng) -> TripPlan {
        let picked: Vec<&&str> = cities.choose_multiple(rng, 2).collect();
        let month = rng.random_range(1..=12u8);
        let day = rng.random_range(1..=20u8);
        let nights = rng.random_range(3..=7u8);
        let start = MonthDay::new(month, day).expect("day 1-20 exists in every month");
        let end = start.plus_days(nights).expect("day <= 27 exists in every month");
        let restaurant_date = start
            .plus_days(rng.random_range(1..nights))
            .expect("inside the trip");
        TripPlan {
            origin: picked[0].to_string(),
            destination: picked[1].to_string(),
            start,
            end,
            restaurant_date,
        }
    }

    pub fn search_args(&self, aspect: AspectKind) -> IndexMap<String, String> {
        let mut args = IndexMap::new();
        for &name in search_arg_names(aspect) {
            let value = match (aspect, name) {
                (_, "origin") => self.origin.clone(),
                (_, "destination") | (_, "city") => self.destination.clone(),
                (AspectKind::Flight, "date") => self.start.iso(),
                (AspectKind::Restaurant, "date") => self.restaurant_date.iso(),
                (_, "check_in") | (_, "pickup_date") => self.start.iso(),
                (_, "check_out") | (_, "return_date") => self.end.iso(),
                _ => unreachable!("search argument {name} for {aspect}"),
            };
            args.insert(name.to_string(), value);
        }
        args
    }

    /// Trip summary naming only cities, dates and the aspects involved.
    pub fn describe(&self, aspects: &[AspectKind]) -> String {
        let (start, end) = (self.start.spoken(), self.end.spoken());
        let nouns: Vec<String> = aspects.iter().map(|a| format!("a {}", a.noun())).collect();
        let list = match nouns.as_slice() {
            [] => String::new(),
            [one] => one.clone(),
            [init @ .., last] => format!("{} and {last}", init.join(", ")),
        };
        let mut text = format!(
            "I'm planning a trip from {} to {} from {start} to {end}, and I need help booking {list}.",
            self.origin, self.destination
        );
        for aspect in aspects {
            let dest = &self.destination;
            let line = match aspect {
                AspectKind::Flight => format!(" I'll fly from {} to {dest} on {start}.", self.origin),
                AspectKind::Hotel => format!(" I'll need a hotel in {dest} from {start} to {end}."),
                AspectKind::Apartment => {
                    format!(" I'd like to rent an apartment in {dest} from {start} to {end}.")
                }
                AspectKind::RentalCar => {
                    format!(" I'll need a rental car in {dest} from {start} to {end}.")
                }
                AspectKind::Restaurant => format!(
                    " I'd also like to book a restaurant in {dest} on {}.",
                    self.restaurant_date.spoken()
                ),
            };
            text.push_str(&line);
        }
        text
    }
}

/// Samples a scenario with the default option counts (10 wrong, 5 noise).
pub fn sample_scenario(
    catalog: &PreferenceCatalog,
    composition: &Composition,
    seed: u64,
) -> Result<Scenario, CatalogError> {
    sample_scenario_with(catalog, composition, OptionCounts::default(), seed)
}

pub fn sample_scenario_with(
    catalog: &PreferenceCatalog,
    composition: &Composition,
    counts: OptionCounts,
    seed: u64,
) -> Result<Scenario, CatalogError> {
    let tier = tier_of(composition)?;
    let mut rng = rng_for(seed, &[label("scenario")]);

    let mut kinds = AspectKind::ALL.to_vec();
    kinds.shuffle(&mut rng);
    kinds.truncate(composition.len());
    kinds.sort();
    let mut pref_counts = composition.counts().to_vec();
    pref_counts.shuffle(&mut rng);

    let cities = catalog.city_names();
    if cities.len() < 3 {
        return Err(CatalogError::TooSmall("need at least 3 cities".into()));
    }
    let trip = TripPlan::sample(&cities, &mut rng);

    let mut aspects = Vec::with_capacity(kinds.len());
    for (&kind, &count) in kinds.iter().zip(&pref_counts) {
        let cat = catalog
            .aspect(kind)
            .ok_or_else(|| CatalogError::TooSmall(format!("catalog has no {kind} aspect")))?;
        let preferences = choose_preferences(cat, count as usize, &mut rng)
            .ok_or_else(|| {
                CatalogError::TooSmall(format!(
                    "{kind} has {} categories, composition needs {count}",
                    cat.categories().len()
                ))
            })?;
        let mut task = AspectTask {
            aspect: kind,
            ground_truth_search_args: trip.search_args(kind),
            preferences,
            options: Vec::new(),
            plausible_ranges: plausible_ranges(cat),
        };
        task.options =
            synthesize_options(catalog, &task, counts, derive_seed(seed, &[label("options"), kind as u64]));
        aspects.push(task);
    }

    Ok(Scenario {
        scenario_id: format!("travel-{composition}-s{seed}"),
        description: trip.describe(&kinds),
        tier,
        composition: composition.clone(),
        aspects,
    })
}

/// One preference from each of `count` distinct categories, in catalog order.
fn choose_preferences(cat: &AspectCatalog, count: usize, rng: &mut ChaCha8Rng) -> Option<Vec<Preference>> {
    let categories: Vec<&str> = cat.categories().into_iter().collect();
    if categories.len() < count {
        return None;
    }
    let chosen: Vec<&str> = categories.choose_multiple(rng, count).copied().collect();
    let mut picked: Vec<usize> = chosen
        .iter()
        .map(|c| {
            let members: Vec<usize> = cat
                .preferences
                .iter()
                .enumerate()
                .filter(|(_, p)| p.category == *c)
                .map(|(i, _)| i)
                .collect();
            *members.choose(rng).expect("category has members")
        })
        .collect();
    picked.sort_unstable();
    Some(picked.into_iter().map(|i| cat.preferences[i].clone()).collect())
}

fn plausible_ranges(cat: &AspectCatalog) -> BTreeMap<String, [i64; 2]> {
    cat.fields
        .iter()
        .filter_map(|f| match f.kind {
            FieldKind::Int { plausible, .. } => Some((f.name.clone(), plausible)),
            _ => None,
        })
        .collect()
}

/// Builds the option set for one aspect: one best and two suboptimal correct
/// options, `counts.wrong` wrong and `counts.noise` noise options, shuffled
/// and numbered `1..=N` in presentation order. Existing options on `task`
/// are ignored.
pub fn synthesize_options(
    catalog: &PreferenceCatalog,
    task: &AspectTask,
    counts: OptionCounts,
    seed: u64,
) -> Vec<OptionRecord> {
    let cat = catalog.aspect(task.aspect).expect("catalog covers every aspect");
    let mut factory = OptionFactory {
        cat,
        task,
        cities: catalog.city_names(),
        rng: rng_for(seed, &[label("synthesize")]),
    };

    let mut drafts: Vec<(VisibleFields, Label, String)> = Vec::with_capacity(counts.total());
    let correct = factory.correct_triple();
    drafts.extend(correct);
    for _ in 0..counts.wrong {
        drafts.push(factory.wrong());
    }
    for _ in 0..counts.noise {
        drafts.push(factory.noise());
    }
    drafts.shuffle(&mut factory.rng);

    drafts
        .into_iter()
        .enumerate()
        .map(|(i, (fields, label, reason))| OptionRecord {
            option_id: OptionId::new(task.aspect, i as u32 + 1),
            aspect: task.aspect,
            effective_total_cost: effective_total_cost(&fields, &task.preferences),
            visible_fields: fields,
            label,
            label_reason: reason,
        })
        .collect()
}

struct OptionFactory<'a> {
    cat: &'a AspectCatalog,
    task: &'a AspectTask,
    cities: Vec<&'a str>,
    rng: ChaCha8Rng,
}

fn grid(min: i64, max: i64, step: i64) -> impl Iterator<Item = i64> + Clone {
    (0..=(max - min) / step).map(move |k| min + k * step)
}

impl OptionFactory<'_> {
    fn arg(&self, name: &str) -> &str {
        self.task
            .ground_truth_search_args
            .get(name)
            .map(String::as_str)
            .unwrap_or_default()
    }

    fn layover(&mut self) -> String {
        let (o, d) = (self.arg("origin").to_string(), self.arg("destination").to_string());
        let candidates: Vec<&str> = self.cities.iter().copied().filter(|c| *c != o && *c != d).collect();
        candidates.choose(&mut self.rng).expect("three or more cities").to_string()
    }

    fn pick_grid(&mut self, values: impl Iterator<Item = i64> + Clone) -> Option<i64> {
        let v: Vec<i64> = values.collect();
        v.choose(&mut self.rng).copied()
    }

    fn random_value(&mut self, field: &FieldTemplate) -> FieldValue {
        match &field.kind {
            FieldKind::Route => {
                let mut path = vec![self.arg("origin").to_string()];
                if self.rng.random_bool(0.5) {
                    path.push(self.layover());
                }
                path.push(self.arg("destination").to_string());
                FieldValue::List(path)
            }
            FieldKind::SearchArg { arg } => FieldValue::Text(self.arg(arg).to_string()),
            FieldKind::Text { pool } => FieldValue::Text(pool.choose(&mut self.rng).expect("pool").clone()),
            FieldKind::Int { min, max, step, .. } => {
                FieldValue::Int(self.pick_grid(grid(*min, *max, *step)).expect("grid"))
            }
            FieldKind::List { pool, min_len, max_len } => {
                let n = self.rng.random_range(*min_len..=*max_len);
                let mut idx: Vec<usize> = (0..pool.len()).collect::<Vec<_>>().choose_multiple(&mut self.rng, n).copied().collect();
                idx.sort_unstable();
                FieldValue::List(idx.into_iter().map(|i| pool[i].clone()).collect())
            }
            FieldKind::Services { pool } => {
                let mut services = IndexMap::new();
                for s in pool {
                    if self.rng.random_bool(0.5) {
                        let cost = self.pick_grid(grid(s.min, s.max, s.step)).expect("grid");
                        services.insert(s.name.clone(), cost);
                    }
                }
                FieldValue::Services(services)
            }
        }
    }

    fn random_fields(&mut self) -> VisibleFields {
        let cat = self.cat;
        cat.fields.iter().map(|f| (f.name.clone(), self.random_value(f))).collect()
    }

    fn template(&self, name: &str) -> &FieldKind {
        &self.cat.field(name).expect("predicate fields are checked at load").kind
    }

    fn satisfy(&mut self, pred: &Predicate, fields: &mut VisibleFields) {
        let kind = self.template(pred.field()).clone();
        let value = match (pred, &kind) {
            (Predicate::TextIs { value, .. }, FieldKind::Text { pool }) => {
                let v = pool.iter().find(|p| p.eq_ignore_ascii_case(value)).unwrap_or(value);
                FieldValue::Text(v.clone())
            }
            (Predicate::TextIn { values, .. }, FieldKind::Text { pool }) => {
                let inside: Vec<&String> =
                    pool.iter().filter(|p| values.iter().any(|v| v.eq_ignore_ascii_case(p))).collect();
                FieldValue::Text(inside.choose(&mut self.rng).expect("checked at load").to_string())
            }
            (Predicate::ListHas { item, .. }, FieldKind::List { pool, .. }) => {
                let current = fields.get(pred.field()).and_then(FieldValue::as_list).unwrap_or_default();
                let list = pool
                    .iter()
                    .filter(|p| p.eq_ignore_ascii_case(item) || current.contains(p))
                    .cloned()
                    .collect();
                FieldValue::List(list)
            }
            (Predicate::AtLeast { field, min: bound }, FieldKind::Int { min, max, step, .. }) => {
                let current = fields.get(field).and_then(FieldValue::as_int).unwrap_or(i64::MIN);
                if current >= *bound {
                    return;
                }
                FieldValue::Int(self.pick_grid(grid(*min, *max, *step).filter(|v| v >= bound)).expect("checked at load"))
            }
            (Predicate::AtMost { field, max: bound }, FieldKind::Int { min, max, step, .. }) => {
                let current = fields.get(field).and_then(FieldValue::as_int).unwrap_or(i64::MAX);
                if current <= *bound {
                    return;
                }
                FieldValue::Int(self.pick_grid(grid(*min, *max, *step).filter(|v| v <= bound)).expect("checked at load"))
            }
            (Predicate::ListLenAtMost { .. }, FieldKind::Route) => FieldValue::List(vec![
                self.arg("origin").to_string(),
                self.arg("destination").to_string(),
            ]),
            (Predicate::ServiceOffered { service }, FieldKind::Services { pool }) => {
                let current = fields.get(SERVICES_FIELD).and_then(FieldValue::as_services).cloned().unwrap_or_default();
                if current.contains_key(service) {
                    return;
                }
                let mut out = IndexMap::new();
                for s in pool {
                    if let Some(c) = current.get(&s.name) {
                        out.insert(s.name.clone(), *c);
                    } else if &s.name == service {
                        let cost = self.pick_grid(grid(s.min, s.max, s.step)).expect("grid");
                        out.insert(s.name.clone(), cost);
                    }
                }
                FieldValue::Services(out)
            }
            _ => unreachable!("predicate/template pairing is checked at load"),
        };
        fields.insert(pred.field().to_string(), value);
    }

    fn violate(&mut self, pred: &Predicate, fields: &mut VisibleFields) {
        let kind = self.template(pred.field()).clone();
        let value = match (pred, &kind) {
            (Predicate::TextIs { value, .. }, FieldKind::Text { pool }) => {
                let outside: Vec<&String> = pool.iter().filter(|p| !p.eq_ignore_ascii_case(value)).collect();
                FieldValue::Text(outside.choose(&mut self.rng).expect("checked at load").to_string())
            }
            (Predicate::TextIn { values, .. }, FieldKind::Text { pool }) => {
                let outside: Vec<&String> =
                    pool.iter().filter(|p| !values.iter().any(|v| v.eq_ignore_ascii_case(p))).collect();
                FieldValue::Text(outside.choose(&mut self.rng).expect("checked at load").to_string())
            }
            (Predicate::ListHas { item, .. }, FieldKind::List { .. }) => {
                let current = fields.get(pred.field()).and_then(FieldValue::as_list).unwrap_or_default();
                FieldValue::List(current.iter().filter(|p| !p.eq_ignore_ascii_case(item)).cloned().collect())
            }
            (Predicate::AtLeast { min: bound, .. }, FieldKind::Int { min, max, step, .. }) => {
                FieldValue::Int(self.pick_grid(grid(*min, *max, *step).filter(|v| v < bound)).expect("checked at load"))
            }
            (Predicate::AtMost { max: bound, .. }, FieldKind::Int { min, max, step, .. }) => {
                FieldValue::Int(self.pick_grid(grid(*min, *max, *step).filter(|v| v > bound)).expect("checked at load"))
            }
            (Predicate::ListLenAtMost { .. }, FieldKind::Route) => {
                let layover = self.layover();
                FieldValue::List(vec![self.arg("origin").to_string(), layover, self.arg("destination").to_string()])
            }
            (Predicate::ServiceOffered { service }, FieldKind::Services { .. }) => {
                let mut current =
                    fields.get(SERVICES_FIELD).and_then(FieldValue::as_services).cloned().unwrap_or_default();
                current.shift_remove(service);
                FieldValue::Services(current)
            }
            _ => unreachable!("predicate/template pairing is checked at load"),
        };
        fields.insert(pred.field().to_string(), value);
    }

    fn satisfying(&mut self) -> VisibleFields {
        let mut fields = self.random_fields();
        for p in &self.task.preferences {
            self.satisfy(&p.predicate, &mut fields);
        }
        fields
    }

    fn base_grid(&self) -> (i64, i64, i64) {
        match self.template(BASE_COST_FIELD) {
            FieldKind::Int { min, max, step, .. } => (*min, *max, *step),
            _ => unreachable!("base cost is an int field"),
        }
    }

    /// Three all-satisfying options where the first is strictly cheapest by
    /// effective total cost.
    fn correct_triple(&mut self) -> Vec<(VisibleFields, Label, String)> {
        let prefs = &self.task.preferences;
        let mut opts: Vec<VisibleFields> = (0..3).map(|_| self.satisfying()).collect();
        let (bmin, _, step) = self.base_grid();
        let cost = |f: &VisibleFields| effective_total_cost(f, prefs);
        let base = |f: &VisibleFields| f.get(BASE_COST_FIELD).and_then(FieldValue::as_int).expect("base cost");

        let rival = cost(&opts[1]).min(cost(&opts[2]));
        let extras = cost(&opts[0]) - base(&opts[0]);
        let ceiling = rival - extras - step;
        let new_base = if ceiling >= bmin {
            let top = bmin + (ceiling - bmin) / step * step;
            let top = top.min(base(&opts[0]).max(bmin));
            self.pick_grid(grid(bmin, top, step)).expect("non-empty grid")
        } else {
            let bump = (bmin - ceiling + step - 1) / step * step;
            for o in &mut opts[1..] {
                let b = base(o) + bump;
                o.insert(BASE_COST_FIELD.to_string(), FieldValue::Int(b));
            }
            bmin
        };
        opts[0].insert(BASE_COST_FIELD.to_string(), FieldValue::Int(new_base));

        let best_cost = cost(&opts[0]);
        opts.into_iter()
            .enumerate()
            .map(|(i, f)| {
                let c = cost(&f);
                if i == 0 {
                    let reason = format!(
                        "Satisfies every preference and has the lowest total cost (${c}) once required charges are included."
                    );
                    (f, Label::Best, reason)
                } else {
                    let reason = format!(
                        "Satisfies every preference, but its total cost (${c}) exceeds the cheapest satisfying option (${best_cost})."
                    );
                    (f, Label::Correct, reason)
                }
            })
            .collect()
    }

    fn wrong(&mut self) -> (VisibleFields, Label, String) {
        let mut fields = self.satisfying();
        let prefs = &self.task.preferences;
        let n = if prefs.len() > 1 && self.rng.random_bool(0.3) { 2 } else { 1 };
        let mut targets: Vec<usize> = (0..prefs.len()).collect::<Vec<_>>().choose_multiple(&mut self.rng, n).copied().collect();
        targets.sort_unstable();
        for &i in &targets {
            self.violate(&prefs[i].predicate, &mut fields);
        }
        let violated: Vec<&str> = targets.iter().map(|&i| prefs[i].canonical_statement.as_str()).collect();
        let reason = format!("Violates the user's preference: {}", violated.join(" "));
        (fields, Label::Wrong, reason)
    }

    fn noise(&mut self) -> (VisibleFields, Label, String) {
        let mut fields = if self.rng.random_bool(0.5) { self.satisfying() } else { self.random_fields() };
        let implausible: Vec<(String, String, i64)> = self
            .cat
            .fields
            .iter()
            .filter_map(|f| match f.kind {
                FieldKind::Int { implausible: Some(v), .. } => Some((f.name.clone(), f.label.clone(), v)),
                _ => None,
            })
            .collect();
        let reason = if self.rng.random_bool(0.5) || implausible.is_empty() {
            self.mismatch_search(&mut fields)
        } else {
            let (name, label, v) = implausible.choose(&mut self.rng).expect("non-empty").clone();
            fields.insert(name, FieldValue::Int(v));
            format!("Unrealistic option: {label} of {v} is implausible.")
        };
        (fields, Label::Noise, reason)
    }

    fn mismatch_search(&mut self, fields: &mut VisibleFields) -> String {
        let args: Vec<(String, String)> = self
            .task
            .ground_truth_search_args
            .iter()
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        let (key, truth) = args.choose(&mut self.rng).expect("aspects have search args").clone();
        let replacement = if let Some(date) = MonthDay::parse_iso(&truth) {
            let shift = self.rng.random_range(1..=3u8);
            let moved = if date.day > shift { MonthDay::new(date.month, date.day - shift) } else { date.plus_days(shift) };
            moved.expect("shifted date exists").iso()
        } else {
            let others: Vec<&str> = self
                .cities
                .iter()
                .copied()
                .filter(|c| !args.iter().any(|(_, v)| v == c))
                .collect();
            others.choose(&mut self.rng).expect("three or more cities").to_string()
        };
        match key.as_str() {
            "origin" | "destination" => {
                let path = vec![
                    if key == "origin" { replacement.clone() } else { self.arg("origin").to_string() },
                    if key == "destination" { replacement.clone() } else { self.arg("destination").to_string() },
                ];
                fields.insert(ROUTE_FIELD.to_string(), FieldValue::List(path));
            }
            _ => {
                fields.insert(key.clone(), FieldValue::Text(replacement.clone()));
            }
        }
        format!("Unrelated to the request: {key} is {replacement} instead of {truth}.")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub composition: Composition,
    pub count: usize,
}

impl PlanEntry {
    /// Parses `22:10,33:10` style plans.
    pub fn parse_plan(text: &str) -> Result<Vec<PlanEntry>, CatalogError> {
        let bad = |m: String| CatalogError::UnsupportedComposition(m);
        text.split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|item| {
                let (comp, count) = item
                    .split_once(':')
                    .ok_or_else(|| bad(format!("plan entry `{item}` must look like 223:10")))?;
                let composition: Composition = comp.parse().map_err(bad)?;
                tier_of(&composition)?;
                let count = count
                    .trim()
                    .parse()
                    .map_err(|_| bad(format!("plan entry `{item}` has a bad count")))?;
                Ok(PlanEntry { composition, count })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub scenario_id: String,
    pub tier: Tier,
    pub composition: Composition,
    pub digest: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub seed: u64,
    pub plan: Vec<PlanEntry>,
    pub option_counts: OptionCounts,
    pub catalog_digest: String,
    pub scenario_count: usize,
    pub tier_counts: BTreeMap<Tier, usize>,
    pub scenarios: Vec<ManifestEntry>,
    /// SHA-256 over the ordered scenario digests.
    pub content_digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub manifest: DatasetManifest,
    pub scenarios: Vec<Scenario>,
}

impl Dataset {
    /// Builds a manifest for an arbitrary scenario list (e.g. imported files).
    pub fn from_scenarios(scenarios: Vec<Scenario>, seed: u64, plan: Vec<PlanEntry>, option_counts: OptionCounts, catalog_digest: String) -> Dataset {
        let entries: Vec<ManifestEntry> = scenarios
            .iter()
            .map(|s| ManifestEntry {
                scenario_id: s.scenario_id.clone(),
                tier: s.tier,
                composition: s.composition.clone(),
                digest: s.digest(),
            })
            .collect();
        let mut tier_counts = BTreeMap::new();
        for e in &entries {
            *tier_counts.entry(e.tier).or_insert(0) += 1;
        }
        let joined: Vec<&str> = entries.iter().map(|e| e.digest.as_str()).collect();
        let content_digest = crate::util::sha256_hex(joined.join("\n").as_bytes());
        Dataset {
            manifest: DatasetManifest {
                seed,
                plan,
                option_counts,
                catalog_digest,
                scenario_count: entries.len(),
                tier_counts,
                scenarios: entries,
                content_digest,
            },
            scenarios,
        }
    }

    pub fn digest(&self) -> &str {
        &self.manifest.content_digest
    }
}

/// Deterministic dataset: scenario `i` uses a seed derived from `(seed, i)`
/// and is named `travel-<composition>-<i>`.
pub fn generate_dataset(
    catalog: &PreferenceCatalog,
    plan: &[PlanEntry],
    counts: OptionCounts,
    seed: u64,
) -> Result<Dataset, CatalogError> {
    if plan.is_empty() {
        return Err(CatalogError::EmptyPlan);
    }
    let jobs: Vec<(usize, &Composition)> = plan
        .iter()
        .flat_map(|e| std::iter::repeat_n(&e.composition, e.count))
        .enumerate()
        .collect();
    let scenarios = jobs
        .par_iter()
        .map(|&(i, comp)| {
            let mut s = sample_scenario_with(catalog, comp, counts, derive_seed(seed, &[label("dataset"), i as u64]))?;
            s.scenario_id = format!("travel-{comp}-{i:05}");
            Ok(s)
        })
        .collect::<Result<Vec<_>, CatalogError>>()?;
    Ok(Dataset::from_scenarios(scenarios, seed, plan.to_vec(), counts, catalog.digest()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{validate_scenario_with, ViolationCode};

    fn catalog() -> PreferenceCatalog {
        PreferenceCatalog::builtin()
    }

    #[test]
    fn sampling_is_deterministic() {
        let c = catalog();
        let comp: Composition = "22".parse().unwrap();
        let a = serde_json::to_string(&sample_scenario(&c, &comp, 1).unwrap()).unwrap();
        let b = serde_json::to_string(&sample_scenario(&c, &comp, 1).unwrap()).unwrap();
        assert_eq!(a, b);
        let other = serde_json::to_string(&sample_scenario(&c, &comp, 2).unwrap()).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn composition_contract() {
        let s = sample_scenario(&catalog(), &"223".parse().unwrap(), 7).unwrap();
        assert_eq!(s.aspects.len(), 3);
        let mut counts: Vec<usize> = s.aspects.iter().map(|a| a.preferences.len()).collect();
        counts.sort_unstable();
        assert_eq!(counts, vec![2, 2, 3]);
        assert_eq!(s.tier, Tier::Medium);
    }

    #[test]
    fn default_counts_give_eighteen_options_one_best() {
        let c = catalog();
        let s = sample_scenario(&c, &"22".parse().unwrap(), 3).unwrap();
        for a in &s.aspects {
            assert_eq!(a.options.len(), 18);
            assert_eq!(a.options.iter().filter(|o| o.label == Label::Best).count(), 1);
            assert_eq!(a.options.iter().filter(|o| o.label.is_correct()).count(), 3);
        }
    }

    #[test]
    fn degenerate_counts_give_three_correct() {
        let c = catalog();
        let s = sample_scenario_with(&c, &"22".parse().unwrap(), OptionCounts::new(0, 0), 3).unwrap();
        for a in &s.aspects {
            assert_eq!(a.options.len(), 3);
            assert!(a.options.iter().all(|o| o.label.is_correct()));
            assert_eq!(a.options.iter().filter(|o| o.label == Label::Best).count(), 1);
        }
    }

    #[test]
    fn well_formed_travel_22_validates_clean() {
        let s = sample_scenario(&catalog(), &"22".parse().unwrap(), 1).unwrap();
        let report = validate_scenario_with(&s, OptionCounts::default());
        assert!(report.is_valid(), "{:#?}", report.violations);
    }

    #[test]
    fn duplicate_best_is_reported() {
        let mut s = sample_scenario(&catalog(), &"22".parse().unwrap(), 1).unwrap();
        let a = &mut s.aspects[0];
        let other = a.options.iter().position(|o| o.label == Label::Correct).unwrap();
        a.options[other].label = Label::Best;
        let codes = validate_scenario_with(&s, OptionCounts::default()).codes();
        assert!(codes.contains(&ViolationCode::DuplicateBest), "{codes:?}");
    }

    #[test]
    fn non_strict_best_is_reported() {
        let mut s = sample_scenario(&catalog(), &"22".parse().unwrap(), 1).unwrap();
        let a = &mut s.aspects[0];
        let best = a.options.iter().position(|o| o.label == Label::Best).unwrap();
        let other = a.options.iter().position(|o| o.label == Label::Correct).unwrap();
        let target = a.options[other].effective_total_cost;
        let extras = a.options[best].effective_total_cost - a.options[best].base_cost().unwrap();
        a.options[best].visible_fields.insert(BASE_COST_FIELD.into(), FieldValue::Int(target - extras));
        a.options[best].effective_total_cost = target;
        let codes = validate_scenario_with(&s, OptionCounts::default()).codes();
        assert!(codes.contains(&ViolationCode::NonStrictBest), "{codes:?}");
        assert!(!codes.contains(&ViolationCode::CostMismatch), "{codes:?}");
    }

    #[test]
    fn description_mentions_trip_but_no_preferences() {
        let s = sample_scenario(&catalog(), &"2222".parse().unwrap(), 11).unwrap();
        let d = s.description.to_lowercase();
        for p in s.preferences() {
            for st in p.implicit_statements.iter().chain(std::iter::once(&p.canonical_statement)) {
                assert!(!d.contains(&st.to_lowercase()));
            }
        }
        for a in &s.aspects {
            assert!(d.contains(a.aspect.noun()), "{d}");
        }
    }

    #[test]
    fn plans_parse_and_reject_bad_compositions() {
        let plan = PlanEntry::parse_plan("22:10,33:10,44:10").unwrap();
        assert_eq!(plan.len(), 3);
        assert_eq!(plan.iter().map(|p| p.count).sum::<usize>(), 30);
        let err = PlanEntry::parse_plan("55:3").unwrap_err();
        assert_eq!(err.code(), "UNSUPPORTED_COMPOSITION");
    }

    #[test]
    fn dataset_counts_and_digest_are_stable() {
        let c = catalog();
        let plan = PlanEntry::parse_plan("22:10").unwrap();
        let a = generate_dataset(&c, &plan, OptionCounts::default(), 5).unwrap();
        let b = generate_dataset(&c, &plan, OptionCounts::default(), 5).unwrap();
        assert_eq!(a.scenarios.len(), 10);
        assert!(a.scenarios.iter().all(|s| s.tier == Tier::Easy));
        assert_eq!(a.manifest.content_digest, b.manifest.content_digest);
        assert_eq!(a.manifest.tier_counts.get(&Tier::Easy), Some(&10));
        assert!(matches!(generate_dataset(&c, &[], OptionCounts::default(), 5), Err(CatalogError::EmptyPlan)));
    }
}

#[cfg(test)]
mod sweep_tests {
    use super::*;
    use crate::domain::validate_scenario_with;

    #[test]
    fn every_menu_composition_validates_across_seeds() {
        let c = PreferenceCatalog::builtin();
        for comp in ["22", "2222", "33", "233", "333", "44", "334", "444"] {
            let comp: Composition = comp.parse().unwrap();
            for seed in 0..40 {
                for counts in [OptionCounts::default(), OptionCounts::new(0, 0), OptionCounts::new(20, 10)] {
                    let s = sample_scenario_with(&c, &comp, counts, seed).unwrap();
                    let report = validate_scenario_with(&s, counts);
                    assert!(report.is_valid(), "{comp} seed {seed}: {:#?}", report.violations);
                }
            }
        }
    }
}
