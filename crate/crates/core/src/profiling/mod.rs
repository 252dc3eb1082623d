//! Data profiling: attribute statistics, semantic types, exact constraints and
//! temporal characteristics.

mod constraints;
mod fim;
mod semantic;
mod stats;
mod temporal;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use constraints::{discover_constraints, prune_incidental_dependencies, temporal_uniques};
pub use fim::{mine_itemsets, mine_update_dependencies, window_unions, FimError};
pub use semantic::{classify_semantic_type, label_hint};
pub use stats::{profile_attributes, AttributeProfile, DataProfile, NumericRange, RelationshipProfile, Summary, SAMPLE_SIZE};
pub use temporal::{
    classify_update, default_change_model, default_path_change, extract_update_transactions, mine_change_model,
    UpdateKind, UpdateTransaction, DEFAULT_DELETE_RATE, DEFAULT_INSERT_RATE,
};

use crate::dataset::Dataset;
use crate::model::{
    AttributeDef, AttributePath, ChangeModel, Constraint, DataHistory, EnrichedSchema, Schema, SemanticType,
    Timestamp, ValueKind,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfilingOptions {
    pub max_lhs: usize,
    pub window: usize,
    pub min_support: f64,
    pub min_confidence: f64,
}

impl Default for ProfilingOptions {
    fn default() -> Self {
        ProfilingOptions { max_lhs: 2, window: 3, min_support: 0.1, min_confidence: 0.7 }
    }
}

/// The profile and enriched schema, serialized together as one document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileReport {
    pub profile: DataProfile,
    pub schema: EnrichedSchema,
}

fn dominant_kind(a: &AttributeProfile) -> ValueKind {
    a.kinds
        .iter()
        .filter(|(k, _)| **k != ValueKind::Null)
        .max_by_key(|(k, c)| (**c, std::cmp::Reverse(**k)))
        .map_or(ValueKind::Null, |(k, _)| *k)
}

/// Full profiling of a snapshot. Without a history the change model falls
/// back to per-semantic-type defaults.
pub fn profile_dataset(dataset: &Dataset, options: &ProfilingOptions) -> ProfileReport {
    let profile = profile_attributes(dataset);
    let semantic_types: BTreeMap<AttributePath, SemanticType> = profile
        .attributes
        .iter()
        .map(|a| (a.path.clone(), classify_semantic_type(&a.path, &a.sample)))
        .collect();
    let attributes = profile
        .attributes
        .iter()
        .map(|a| AttributeDef {
            path: a.path.clone(),
            semantic_type: semantic_types[&a.path].label,
            kind: dominant_kind(a),
            nullable: a.null_count > 0,
        })
        .collect();
    let mut constraints = prune_incidental_dependencies(dataset, discover_constraints(dataset, options.max_lhs));
    let temporal_unique = temporal_uniques(&constraints, |p| semantic_types[p]);
    constraints.extend(temporal_unique);
    let labels = semantic_types.iter().map(|(p, t)| (p.clone(), t.label)).collect();
    let schema = EnrichedSchema {
        schema: Schema {
            model: dataset.model,
            attributes,
            relationships: profile.relationships.iter().map(|r| r.relationship.clone()).collect(),
        },
        constraints,
        semantic_types,
        temporal: default_change_model(&labels),
    };
    ProfileReport { profile, schema }
}

/// Change model of an input history, including mined co-update rules.
pub fn profile_history(
    history: &DataHistory,
    horizon: Timestamp,
    options: &ProfilingOptions,
) -> Result<ChangeModel, FimError> {
    let mut model = mine_change_model(history, horizon);
    let tx = extract_update_transactions(history);
    model.rules = mine_update_dependencies(&tx, options.window, options.min_support, options.min_confidence)?;
    Ok(model)
}

/// Constraints a generator has to enforce: dependencies whose left-hand side
/// contains a unique combination hold automatically and are dropped.
pub fn enforced_constraints(constraints: &[Constraint]) -> Vec<Constraint> {
    let uniques: Vec<&Vec<AttributePath>> = constraints
        .iter()
        .filter_map(|c| match c {
            Constraint::Unique { paths } => Some(paths),
            _ => None,
        })
        .collect();
    constraints
        .iter()
        .filter(|c| match c {
            Constraint::FunctionalDependency { lhs, .. } => {
                !uniques.iter().any(|u| u.iter().all(|p| lhs.contains(p)))
            }
            _ => true,
        })
        .cloned()
        .collect()
}
