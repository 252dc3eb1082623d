use std::collections::HashMap;

use crate::model::{AttributePath, EnrichedSchema, RelationshipKind, Timestamp, Value, ValueKind};
use crate::preparation::Split;
use crate::profiling::DataProfile;

use super::errors::{default_tables, ErrorTables};

/// The attribute a record-level error moves values to, and the separator
/// used when joining or splitting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partner {
    pub index: usize,
    pub separator: String,
}

/// Schema-derived facts the engine needs for every entity.
#[derive(Debug, Clone)]
pub struct PollutionContext {
    pub paths: Vec<AttributePath>,
    pub horizon: Timestamp,
    pub tables: ErrorTables,
    /// Per path, the partner of swap, merge and split errors.
    pub partners: Vec<Option<Partner>>,
    /// Per path, the valid targets of a wrong reference.
    pub references: Vec<Vec<Value>>,
    positions: HashMap<AttributePath, usize>,
}

impl PollutionContext {
    /// Split groups pair each part with the next part of its group; other
    /// text attributes pair with the next text attribute, cyclically.
    pub fn new(
        paths: Vec<AttributePath>,
        schema: &EnrichedSchema,
        profile: &DataProfile,
        splits: &[Split],
        horizon: Timestamp,
    ) -> Self {
        let positions: HashMap<AttributePath, usize> = paths.iter().enumerate().map(|(i, p)| (p.clone(), i)).collect();
        let text: Vec<usize> = paths
            .iter()
            .enumerate()
            .filter(|(_, p)| schema.schema.attribute(p).is_some_and(|a| a.kind == ValueKind::Text))
            .map(|(i, _)| i)
            .collect();
        let partners = (0..paths.len())
            .map(|i| {
                for s in splits {
                    if let Some(k) = s.parts.iter().position(|p| p == &paths[i]) {
                        let next = &s.parts[(k + 1) % s.parts.len()];
                        if let Some(&j) = positions.get(next) {
                            return Some(Partner { index: j, separator: s.separator.clone() });
                        }
                    }
                }
                let k = text.iter().position(|&t| t == i)?;
                (text.len() > 1).then(|| Partner { index: text[(k + 1) % text.len()], separator: " ".into() })
            })
            .collect();
        let references = paths
            .iter()
            .map(|p| {
                schema
                    .schema
                    .relationships
                    .iter()
                    .filter(|r| r.kind == RelationshipKind::ForeignKey && &r.from == p)
                    .filter_map(|r| profile.attribute(&r.to))
                    .flat_map(|a| a.sample.iter().cloned())
                    .collect()
            })
            .collect();
        PollutionContext { paths, horizon, tables: default_tables().clone(), partners, references, positions }
    }

    pub fn index(&self, path: &AttributePath) -> Option<usize> {
        self.positions.get(path).copied()
    }
}
