use std::collections::{BTreeMap, BTreeSet};

use super::Dataset;
use crate::error::Violation;

/// Checks every type invariant of a dataset; an empty list means well formed.
pub fn validate_dataset(dataset: &Dataset) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut groups: BTreeMap<&str, u8> = BTreeMap::new();
    let mut seen = BTreeSet::new();

    for t in &dataset.trials {
        let id = t.id();
        if !(t.t.is_finite() && t.t > 0.0) {
            out.push(Violation::trial(
                &id,
                format!("t must be positive, got {}", t.t),
            ));
        }
        if !(1..=3).contains(&t.trial_index) {
            out.push(Violation::trial(
                &id,
                format!("trial index {} outside 1..=3", t.trial_index),
            ));
        }
        if !t.group.admits(&t.condition) {
            out.push(Violation::trial(
                &id,
                format!(
                    "condition {} not part of group {}",
                    t.condition,
                    t.group.number()
                ),
            ));
        }
        if let Some(&g) = groups.get(t.participant_id.as_str()) {
            if g != t.group.number() {
                out.push(Violation::trial(
                    &id,
                    format!("participant already assigned to group {g}"),
                ));
            }
        } else {
            groups.insert(&t.participant_id, t.group.number());
        }
        if !seen.insert((&t.participant_id, t.condition, t.trial_index)) {
            out.push(Violation::trial(&id, "duplicate trial"));
        }
        for p in t.physio.problems() {
            out.push(Violation::trial(&id, p));
        }
        match dataset.questionnaire(&t.participant_id, &t.condition) {
            None => out.push(Violation::trial(&id, "no questionnaire for condition")),
            Some(q) if !q.in_range() => {
                out.push(Violation::trial(&id, "questionnaire item outside 1..=7"))
            }
            Some(_) => {}
        }
    }
    out
}
