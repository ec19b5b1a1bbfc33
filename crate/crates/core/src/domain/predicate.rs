use std::collections::BTreeMap;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::{FieldValue, VisibleFields, ROUTE_FIELD, SERVICES_FIELD};

/// A machine-checkable constraint over an option's visible fields.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Predicate {
    /// Text field equals `value` (case-insensitive).
    TextIs { field: String, value: String },
    /// Text field is one of `values` (case-insensitive).
    TextIn { field: String, values: Vec<String> },
    /// List field contains `item` (case-insensitive).
    ListHas { field: String, item: String },
    /// Integer field is at least `min`.
    AtLeast { field: String, min: i64 },
    /// Integer field is at most `max`.
    AtMost { field: String, max: i64 },
    /// List field has at most `max` entries (a direct flight is a 2-city path).
    ListLenAtMost { field: String, max: usize },
    /// The service appears among the option's paid services.
    ServiceOffered { service: String },
}

impl Predicate {
    /// Field the predicate reads.
    pub fn field(&self) -> &str {
        match self {
            Predicate::TextIs { field, .. }
            | Predicate::TextIn { field, .. }
            | Predicate::ListHas { field, .. }
            | Predicate::AtLeast { field, .. }
            | Predicate::AtMost { field, .. }
            | Predicate::ListLenAtMost { field, .. } => field,
            Predicate::ServiceOffered { .. } => SERVICES_FIELD,
        }
    }

    /// Evaluates the predicate. A missing or mistyped field never satisfies.
    pub fn holds(&self, fields: &VisibleFields) -> bool {
        let value = fields.get(self.field());
        match (self, value) {
            (Predicate::TextIs { value: want, .. }, Some(FieldValue::Text(got))) => {
                got.eq_ignore_ascii_case(want)
            }
            (Predicate::TextIn { values, .. }, Some(FieldValue::Text(got))) => {
                values.iter().any(|v| v.eq_ignore_ascii_case(got))
            }
            (Predicate::ListHas { item, .. }, Some(FieldValue::List(items))) => {
                items.iter().any(|i| i.eq_ignore_ascii_case(item))
            }
            (Predicate::AtLeast { min, .. }, Some(FieldValue::Int(v))) => v >= min,
            (Predicate::AtMost { max, .. }, Some(FieldValue::Int(v))) => v <= max,
            (Predicate::ListLenAtMost { max, .. }, Some(FieldValue::List(items))) => {
                items.len() <= *max
            }
            (Predicate::ServiceOffered { service }, Some(FieldValue::Services(s))) => {
                s.contains_key(service)
            }
            _ => false,
        }
    }
}

/// Whether an option's fields agree with the aspect's ground-truth search
/// arguments. `origin`/`destination` are checked against the route endpoints;
/// every other argument against the same-named text field.
pub fn matches_search_args(fields: &VisibleFields, args: &IndexMap<String, String>) -> bool {
    let route = fields.get(ROUTE_FIELD).and_then(FieldValue::as_list);
    args.iter().all(|(key, want)| {
        let got = match key.as_str() {
            "origin" => route.and_then(|r| r.first()).map(String::as_str),
            "destination" => route.and_then(|r| r.last()).map(String::as_str),
            _ => fields.get(key).and_then(FieldValue::as_text),
        };
        got.is_some_and(|g| g.eq_ignore_ascii_case(want))
    })
}

/// Whether every bounded numeric field lies within its inclusive range.
pub fn is_plausible(fields: &VisibleFields, ranges: &BTreeMap<String, [i64; 2]>) -> bool {
    ranges.iter().all(|(name, [lo, hi])| match fields.get(name) {
        Some(FieldValue::Int(v)) => (lo..=hi).contains(&v),
        _ => true,
    })
}
