//! Preparation: bring the input into a fine-grained normal form by splitting
//! attributes whose values separate cleanly, and keep the information needed
//! to invert every split.

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Row};
use crate::model::{AttributePath, EnrichedSchema, Value, ValueKind};
use crate::profiling::{profile_dataset, DataProfile, ProfileReport, ProfilingOptions};

/// Candidate separators in precedence order.
pub const DEFAULT_SEPARATORS: [&str; 5] = [", ", ",", ";", " / ", " "];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitDecision {
    pub separator: String,
    pub arity: usize,
}

/// One applied split: `original` was replaced by `parts`, which rejoin with
/// `separator`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub original: AttributePath,
    pub separator: String,
    pub parts: Vec<AttributePath>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreparedDataset {
    pub data: Dataset,
    pub schema: EnrichedSchema,
    pub profile: DataProfile,
    /// Splits in application order; invert in reverse.
    pub splits: Vec<Split>,
}

/// The separator and arity under which every non-null value splits into the
/// same number of non-empty parts. Only text columns qualify.
pub fn split_attribute<'a, I>(values: I, separators: &[&str]) -> Option<SplitDecision>
where
    I: IntoIterator<Item = &'a Value>,
    I::IntoIter: Clone,
{
    let values = values.into_iter().filter(|v| !v.is_null());
    let mut any = false;
    for v in values.clone() {
        any = true;
        if !matches!(v, Value::Text(_)) {
            return None;
        }
    }
    if !any {
        return None;
    }
    'sep: for sep in separators {
        let mut arity = None;
        for v in values.clone() {
            let Value::Text(s) = v else { unreachable!() };
            let parts: Vec<&str> = s.split(sep).collect();
            if parts.len() < 2 || parts.iter().any(|p| p.is_empty()) || arity.is_some_and(|a| a != parts.len()) {
                continue 'sep;
            }
            arity = Some(parts.len());
        }
        return arity.map(|arity| SplitDecision { separator: (*sep).to_string(), arity });
    }
    None
}

fn part_name(dataset: &Dataset, taken: &[AttributePath], original: &AttributePath, i: usize) -> AttributePath {
    let mut name = format!("{}_{}", original.leaf_name(), i);
    loop {
        let candidate = original.with_leaf_name(name.clone());
        if !dataset.paths.contains(&candidate) && !taken.contains(&candidate) {
            return candidate;
        }
        name.push('_');
    }
}

fn apply_split(dataset: &mut Dataset, idx: usize, decision: &SplitDecision) -> Split {
    let original = dataset.paths[idx].clone();
    let mut parts = Vec::with_capacity(decision.arity);
    for i in 1..=decision.arity {
        let p = part_name(dataset, &parts, &original, i);
        parts.push(p);
    }
    dataset.paths.splice(idx..=idx, parts.iter().cloned());
    for row in &mut dataset.rows {
        let cell = row[idx].take();
        let pieces: Vec<Option<Value>> = match cell {
            None => vec![None; decision.arity],
            Some(Value::Text(s)) => s.split(decision.separator.as_str()).map(|p| Some(Value::text(p))).collect(),
            Some(other) => vec![Some(other); decision.arity],
        };
        row.splice(idx..=idx, pieces);
    }
    Split { original, separator: decision.separator.clone(), parts }
}

fn split_columns(dataset: &mut Dataset, profile: &DataProfile, separators: &[&str]) -> Vec<Split> {
    let mut splits = Vec::new();
    let mut idx = 0;
    let mut skip_text_check = false;
    while idx < dataset.paths.len() {
        // The profile only describes the original columns; split parts are
        // always text.
        let is_text = skip_text_check
            || profile.attribute(&dataset.paths[idx]).is_none_or(|a| {
                a.kinds.keys().all(|k| matches!(k, ValueKind::Text | ValueKind::Null))
            });
        skip_text_check = false;
        let decision = if is_text {
            let column: Vec<&Value> = dataset.rows.iter().filter_map(|r| r[idx].as_ref()).collect();
            split_attribute(column.iter().copied(), separators)
        } else {
            None
        };
        match decision {
            Some(d) => {
                splits.push(apply_split(dataset, idx, &d));
                skip_text_check = true;
            }
            None => idx += 1,
        }
    }
    splits
}

/// Splits every cleanly separable attribute until no further split applies,
/// then re-profiles the result. Nested documents are already flattened to
/// leaf paths by the dataset representation; lists stay leaf values.
pub fn normalize_schema(dataset: &Dataset, profile: &DataProfile, options: &ProfilingOptions) -> PreparedDataset {
    normalize_with(dataset, profile, options, &DEFAULT_SEPARATORS)
}

pub fn normalize_with(
    dataset: &Dataset,
    profile: &DataProfile,
    options: &ProfilingOptions,
    separators: &[&str],
) -> PreparedDataset {
    let mut data = dataset.clone();
    let splits = split_columns(&mut data, profile, separators);
    let ProfileReport { profile, schema } = profile_dataset(&data, options);
    PreparedDataset { data, schema, profile, splits }
}

/// Re-normalizes an already prepared dataset, recording the new splits after
/// the existing ones. A prepared dataset has none.
pub fn renormalize(prepared: &PreparedDataset, options: &ProfilingOptions) -> PreparedDataset {
    let mut next = normalize_schema(&prepared.data, &prepared.profile, options);
    let mut splits = prepared.splits.clone();
    splits.append(&mut next.splits);
    next.splits = splits;
    next
}

/// Inverse of the normalization: rejoins split parts into the original
/// attribute at the position of its first part.
pub fn restore(data: &Dataset, splits: &[Split]) -> Dataset {
    let mut out = data.clone();
    for split in splits.iter().rev() {
        let positions: Vec<usize> = split.parts.iter().filter_map(|p| out.position(p)).collect();
        if positions.len() != split.parts.len() {
            continue;
        }
        let first = positions[0];
        for row in &mut out.rows {
            let cells: Vec<Option<Value>> = positions.iter().map(|&i| row[i].clone()).collect();
            let joined = join_cells(&cells, &split.separator);
            for &i in positions.iter().rev() {
                row.remove(i);
            }
            row.insert(first, joined);
        }
        for &i in positions.iter().rev() {
            out.paths.remove(i);
        }
        out.paths.insert(first, split.original.clone());
    }
    out
}

fn join_cells(cells: &[Option<Value>], separator: &str) -> Option<Value> {
    match &cells[0] {
        None => None,
        Some(Value::Text(_)) => {
            let texts: Vec<String> = cells.iter().map(|c| c.as_ref().map(|v| v.render().into_owned()).unwrap_or_default()).collect();
            Some(Value::text(texts.join(separator)))
        }
        Some(other) => Some(other.clone()),
    }
}

/// Joins one row of sub-values back to the original attribute value.
pub fn recombine(row: &Row, positions: &[usize], separator: &str) -> Option<Value> {
    let cells: Vec<Option<Value>> = positions.iter().map(|&i| row[i].clone()).collect();
    join_cells(&cells, separator)
}
