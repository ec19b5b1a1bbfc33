use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{
    effective_total_cost, is_plausible, matches_search_args, AspectTask, Label, Scenario,
};
use crate::catalog::tier_of;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ViolationCode {
    AspectCount,
    DuplicateAspect,
    CompositionMismatch,
    UnsupportedComposition,
    TierMismatch,
    DescriptionLeak,
    DuplicatePreferenceId,
    PreferenceAspectMismatch,
    EmptyImplicitStatements,
    CanonicalInImplicit,
    EmptyTriggerTopics,
    IdPrefixMismatch,
    DuplicateOptionId,
    OptionAspectMismatch,
    MissingLabelReason,
    MissingBest,
    DuplicateBest,
    NonStrictBest,
    CostMismatch,
    CorrectViolatesPreference,
    WrongSatisfiesAll,
    OptionOffSearch,
    NoiseNotNoisy,
    LabelCount,
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("code serializes");
        f.write_str(s.as_str().unwrap_or_default())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    /// Where the violation sits, e.g. `hotel/H4`.
    pub location: String,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}: {}", self.code, self.location, self.detail)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub scenario_id: String,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn codes(&self) -> BTreeSet<ViolationCode> {
        self.violations.iter().map(|v| v.code).collect()
    }

    fn push(&mut self, code: ViolationCode, location: impl Into<String>, detail: impl Into<String>) {
        self.violations.push(Violation { code, location: location.into(), detail: detail.into() });
    }
}

/// Configured wrong/noise option counts per aspect. Correct options are
/// always one best plus two suboptimal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OptionCounts {
    pub wrong: usize,
    pub noise: usize,
}

impl OptionCounts {
    pub const CORRECT_TOTAL: usize = 3;

    pub fn new(wrong: usize, noise: usize) -> Self {
        Self { wrong, noise }
    }

    pub fn total(&self) -> usize {
        Self::CORRECT_TOTAL + self.wrong + self.noise
    }

    /// Short tag such as `w10n5`.
    pub fn tag(&self) -> String {
        format!("w{}n{}", self.wrong, self.noise)
    }
}

impl Default for OptionCounts {
    fn default() -> Self {
        Self { wrong: 10, noise: 5 }
    }
}

/// Structural and semantic checks on a scenario; label counts are not
/// checked against a configuration.
pub fn validate_scenario(s: &Scenario) -> ValidationReport {
    check(s, None)
}

/// As [`validate_scenario`], additionally requiring per-aspect label counts
/// of exactly 1 best, 2 correct, `wrong` wrong and `noise` noise.
pub fn validate_scenario_with(s: &Scenario, counts: OptionCounts) -> ValidationReport {
    check(s, Some(counts))
}

fn check(s: &Scenario, counts: Option<OptionCounts>) -> ValidationReport {
    use ViolationCode as V;
    let mut r = ValidationReport { scenario_id: s.scenario_id.clone(), violations: Vec::new() };

    if !(2..=4).contains(&s.aspects.len()) {
        r.push(V::AspectCount, "scenario", format!("{} aspects, expected 2-4", s.aspects.len()));
    }
    let mut kinds = HashSet::new();
    for a in &s.aspects {
        if !kinds.insert(a.aspect) {
            r.push(V::DuplicateAspect, a.aspect.as_str(), "aspect appears twice");
        }
    }

    let mut actual: Vec<u8> = s.aspects.iter().map(|a| a.preferences.len() as u8).collect();
    actual.sort_unstable();
    if actual != s.composition.counts() {
        r.push(
            V::CompositionMismatch,
            "scenario",
            format!("composition {} but aspects carry {:?}", s.composition, actual),
        );
    }
    match tier_of(&s.composition) {
        Ok(t) if t != s.tier => {
            r.push(V::TierMismatch, "scenario", format!("tier {} but composition implies {t}", s.tier))
        }
        Ok(_) => {}
        Err(e) => r.push(V::UnsupportedComposition, "scenario", e.to_string()),
    }

    let description = s.description.to_lowercase();
    let mut pref_ids = HashSet::new();
    for a in &s.aspects {
        for p in &a.preferences {
            let loc = format!("{}/{}", a.aspect, p.preference_id);
            if !pref_ids.insert(p.preference_id.as_str()) {
                r.push(V::DuplicatePreferenceId, &loc, "preference id repeated");
            }
            if p.aspect != a.aspect {
                r.push(V::PreferenceAspectMismatch, &loc, format!("preference is for {}", p.aspect));
            }
            if p.implicit_statements.is_empty() {
                r.push(V::EmptyImplicitStatements, &loc, "no implicit statements");
            }
            let canonical = p.canonical_statement.to_lowercase();
            if p.implicit_statements.iter().any(|st| st.to_lowercase().contains(&canonical)) {
                r.push(V::CanonicalInImplicit, &loc, "implicit statement quotes the canonical statement");
            }
            if p.trigger_topics.is_empty() || p.trigger_topics.iter().any(|t| t.is_empty()) {
                r.push(V::EmptyTriggerTopics, &loc, "trigger topics missing or empty");
            }
            let leaked = std::iter::once(&p.canonical_statement)
                .chain(p.implicit_statements.iter())
                .any(|st| !st.trim().is_empty() && description.contains(&st.to_lowercase()));
            if leaked {
                r.push(V::DescriptionLeak, &loc, "description contains a preference statement");
            }
        }
        check_options(a, counts, &mut r);
    }
    r
}

fn check_options(a: &AspectTask, counts: Option<OptionCounts>, r: &mut ValidationReport) {
    use ViolationCode as V;
    let mut ids = HashSet::new();
    let mut tally = [0usize; 4];
    for o in &a.options {
        let loc = format!("{}/{}", a.aspect, o.option_id);
        if o.option_id.aspect != a.aspect {
            r.push(V::IdPrefixMismatch, &loc, format!("prefix does not match {}", a.aspect));
        }
        if o.aspect != a.aspect {
            r.push(V::OptionAspectMismatch, &loc, format!("option is for {}", o.aspect));
        }
        if !ids.insert(o.option_id.number) {
            r.push(V::DuplicateOptionId, &loc, "option number repeated");
        }
        if o.label_reason.trim().is_empty() {
            r.push(V::MissingLabelReason, &loc, "label reason empty");
        }
        let recomputed = effective_total_cost(&o.visible_fields, &a.preferences);
        if recomputed != o.effective_total_cost {
            r.push(
                V::CostMismatch,
                &loc,
                format!("stored {} but fields imply {recomputed}", o.effective_total_cost),
            );
        }
        let on_search = matches_search_args(&o.visible_fields, &a.ground_truth_search_args)
            && is_plausible(&o.visible_fields, &a.plausible_ranges);
        let satisfied = a.preferences.iter().filter(|p| p.predicate.holds(&o.visible_fields)).count();
        let all = satisfied == a.preferences.len();
        match o.label {
            Label::Best | Label::Correct => {
                if !all {
                    r.push(V::CorrectViolatesPreference, &loc, "correct option violates a preference");
                }
                if !on_search {
                    r.push(V::OptionOffSearch, &loc, "correct option misses the search or is implausible");
                }
            }
            Label::Wrong => {
                if all {
                    r.push(V::WrongSatisfiesAll, &loc, "wrong option satisfies every preference");
                }
                if !on_search {
                    r.push(V::OptionOffSearch, &loc, "wrong option misses the search or is implausible");
                }
            }
            Label::Noise => {
                if on_search {
                    r.push(V::NoiseNotNoisy, &loc, "noise option matches the search and is plausible");
                }
            }
        }
        tally[o.label as usize] += 1;
    }

    let loc = a.aspect.as_str();
    match tally[Label::Best as usize] {
        0 => r.push(V::MissingBest, loc, "no best option"),
        1 => {
            let best = a.best().expect("one best");
            let rival = a
                .options
                .iter()
                .filter(|o| o.label == Label::Correct)
                .map(|o| o.effective_total_cost)
                .min();
            if let Some(rival) = rival {
                if best.effective_total_cost >= rival {
                    r.push(
                        V::NonStrictBest,
                        format!("{loc}/{}", best.option_id),
                        format!("best costs {} but a correct option costs {rival}", best.effective_total_cost),
                    );
                }
            }
        }
        n => r.push(V::DuplicateBest, loc, format!("{n} options labeled best")),
    }
    if let Some(c) = counts {
        let want = [1, OptionCounts::CORRECT_TOTAL - 1, c.wrong, c.noise];
        if tally != want {
            r.push(
                V::LabelCount,
                loc,
                format!("label counts B/C/W/N = {tally:?}, expected {want:?}"),
            );
        }
    }
}
