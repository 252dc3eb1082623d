use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::model::{
    AttributePath, ChangeModel, DataHistory, EntityId, PathChange, SemanticLabel, Timestamp, UpdateKindDistribution,
    Value,
};

/// The set of paths of one entity that change at one instant.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct UpdateTransaction {
    pub at: Timestamp,
    pub entity: EntityId,
    pub items: BTreeSet<AttributePath>,
}

/// One transaction per (entity, instant) at which a version begins after the
/// entity's creation, ordered by time then entity id.
pub fn extract_update_transactions(history: &DataHistory) -> Vec<UpdateTransaction> {
    let mut out: Vec<UpdateTransaction> = history
        .entities()
        .flat_map(|e| {
            e.update_instants().into_iter().map(move |(at, idxs)| UpdateTransaction {
                at,
                entity: e.id,
                items: idxs.into_iter().map(|i| history.paths()[i].clone()).collect(),
            })
        })
        .collect();
    out.sort_by_key(|t| (t.at, t.entity));
    out
}

/// Classifies a value change as an append (old value is a prefix), a
/// correction (small edit) or a replacement.
pub fn classify_update(old: &Value, new: &Value) -> UpdateKind {
    let (Some(a), Some(b)) = (old.as_text(), new.as_text()) else {
        return UpdateKind::Replace;
    };
    if !a.is_empty() && b.len() > a.len() && b.starts_with(a) {
        return UpdateKind::Append;
    }
    let longest = a.chars().count().max(b.chars().count());
    if longest >= 4 && strsim::levenshtein(a, b) <= 2 {
        return UpdateKind::Correct;
    }
    UpdateKind::Replace
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateKind {
    Replace,
    Append,
    Correct,
}

/// Observed change frequencies of a history, normalized per 1000 ticks of
/// entity lifetime. Rules are left empty; mine them separately.
pub fn mine_change_model(history: &DataHistory, horizon: Timestamp) -> ChangeModel {
    let mut exposure = 0u64;
    let mut inserts = 0u64;
    let mut deletes = 0u64;
    let n = history.paths().len();
    let mut updates = vec![[0u64; 3]; n];
    for e in history.entities() {
        let end = e.deleted_at.unwrap_or(horizon).min(horizon).max(e.created_at);
        exposure += end.0 - e.created_at.0;
        if e.created_at > Timestamp::ZERO {
            inserts += 1;
        }
        if e.deleted_at.is_some_and(|d| d <= horizon) {
            deletes += 1;
        }
        for (i, list) in e.versions.iter().enumerate() {
            for pair in list.windows(2) {
                let k = classify_update(&pair[0].value, &pair[1].value) as usize;
                updates[i][k] += 1;
            }
        }
    }
    let per_k = |c: u64| if exposure == 0 { 0.0 } else { c as f64 * 1000.0 / exposure as f64 };
    let paths = history
        .paths()
        .iter()
        .zip(&updates)
        .map(|(p, u)| {
            let total: u64 = u.iter().sum();
            let kinds = if total == 0 {
                UpdateKindDistribution::default()
            } else {
                let f = |c: u64| c as f64 / total as f64;
                UpdateKindDistribution { replace: f(u[0]), append: f(u[1]), correct: f(u[2]) }
            };
            (p.clone(), PathChange { update_rate: per_k(total), kinds })
        })
        .collect();
    ChangeModel { paths, insert_rate: per_k(inserts), delete_rate: per_k(deletes), rules: Vec::new() }
}

/// Update rate (per entity per 1000 ticks) and update-kind mix assumed for a
/// label when the input is a single snapshot without history.
pub fn default_path_change(label: SemanticLabel) -> PathChange {
    use SemanticLabel::*;
    let (rate, replace, append, correct) = match label {
        PersonName => (0.1, 0.7, 0.0, 0.3),
        Email => (0.3, 0.9, 0.0, 0.1),
        Phone => (0.3, 0.9, 0.0, 0.1),
        AddressPart => (0.4, 0.9, 0.0, 0.1),
        Date => (0.05, 0.5, 0.0, 0.5),
        Identifier => (0.0, 1.0, 0.0, 0.0),
        NumericMeasure => (0.5, 1.0, 0.0, 0.0),
        FreeText => (0.2, 0.5, 0.3, 0.2),
        Unknown => (0.1, 1.0, 0.0, 0.0),
    };
    PathChange { update_rate: rate, kinds: UpdateKindDistribution { replace, append, correct } }
}

pub const DEFAULT_INSERT_RATE: f64 = 0.2;
pub const DEFAULT_DELETE_RATE: f64 = 0.1;

pub fn default_change_model(labels: &BTreeMap<AttributePath, SemanticLabel>) -> ChangeModel {
    ChangeModel {
        paths: labels.iter().map(|(p, &l)| (p.clone(), default_path_change(l))).collect(),
        insert_rate: DEFAULT_INSERT_RATE,
        delete_rate: DEFAULT_DELETE_RATE,
        rules: Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{EntityHistory, VersionedValue};

    fn vv(v: &str, from: u64, to: Option<u64>) -> VersionedValue {
        VersionedValue { value: Value::text(v), valid_from: Timestamp(from), valid_to: to.map(Timestamp) }
    }

    fn history() -> DataHistory {
        let mut h = DataHistory::new(vec![AttributePath::key("A"), AttributePath::key("B")]);
        h.insert(EntityHistory {
            id: EntityId(2),
            created_at: Timestamp(0),
            deleted_at: None,
            versions: vec![vec![vv("a", 0, Some(5)), vv("a2", 5, None)], vec![vv("b", 0, Some(5)), vv("b2", 5, None)]],
        });
        h.insert(EntityHistory {
            id: EntityId(1),
            created_at: Timestamp(2),
            deleted_at: None,
            versions: vec![vec![vv("x", 2, Some(5)), vv("y", 5, None)], vec![vv("q", 2, None)]],
        });
        h.insert(EntityHistory {
            id: EntityId(3),
            created_at: Timestamp(0),
            deleted_at: None,
            versions: vec![vec![vv("s", 0, None)], vec![vv("t", 0, None)]],
        });
        h
    }

    #[test]
    fn transactions_group_paths_and_sort_by_entity() {
        let t = extract_update_transactions(&history());
        assert_eq!(t.len(), 2);
        assert_eq!((t[0].at, t[0].entity), (Timestamp(5), EntityId(1)));
        assert_eq!(t[1].items, [AttributePath::key("A"), AttributePath::key("B")].into_iter().collect());
    }

    #[test]
    fn change_kinds() {
        assert_eq!(classify_update(&Value::text("Main St"), &Value::text("Main St 5")), UpdateKind::Append);
        assert_eq!(classify_update(&Value::text("Smith"), &Value::text("Smyth")), UpdateKind::Correct);
        assert_eq!(classify_update(&Value::text("Smith"), &Value::text("Jones")), UpdateKind::Replace);
    }

    #[test]
    fn mined_rates_are_per_thousand_ticks_of_exposure() {
        let m = mine_change_model(&history(), Timestamp(10));
        // exposure 10 + 8 + 10 = 28 ticks; A changes twice.
        assert!((m.paths[&AttributePath::key("A")].update_rate - 2000.0 / 28.0).abs() < 1e-9);
        assert!((m.insert_rate - 1000.0 / 28.0).abs() < 1e-9);
        assert_eq!(m.delete_rate, 0.0);
    }
}
