//! Shared domain types: values, paths, schemas, the versioned data history
//! and simulation events.

mod error_kind;
mod event;
mod history;
mod ids;
mod path;
mod schema;
mod time;
mod value;

pub use error_kind::{ErrorKind, UnknownErrorKind};
pub use event::{Event, EventKind};
pub use history::{
    snapshot_at, validate_history, value_at, DataHistory, EntityHistory, HistoryError, VersionedValue, Violation,
};
pub use ids::{EntityId, RecordId, SourceId};
pub use path::{AttributePath, PathError, Segment};
pub use schema::{
    AttributeDef, ChangeModel, Constraint, DataModel, EnrichedSchema, PathChange, Relationship, RelationshipKind,
    Schema, SchemaError, SemanticLabel, SemanticType, UpdateKindDistribution, UpdateRule,
};
pub use time::Timestamp;
pub use value::{Document, Value, ValueKind};

/// Builds a nested document from leaf paths; absent cells are skipped.
pub fn unflatten(paths: &[AttributePath], row: Vec<Option<Value>>) -> Document {
    let mut doc = Document::new();
    for (path, cell) in paths.iter().zip(row) {
        if let Some(value) = cell {
            insert_at(&mut doc, path.segments(), value);
        }
    }
    doc
}

fn segment_key(seg: &Segment) -> String {
    match seg {
        Segment::Key(k) => k.clone(),
        Segment::Index(i) => format!("[{i}]"),
    }
}

fn insert_at(doc: &mut Document, segs: &[Segment], value: Value) {
    let key = segment_key(&segs[0]);
    if segs.len() == 1 {
        doc.insert(key, value);
        return;
    }
    if !matches!(doc.get(&key), Some(Value::Document(_))) {
        doc.insert(key.clone(), Value::Document(Document::new()));
    }
    if let Some(Value::Document(child)) = doc.get_mut(&key) {
        insert_at(child, &segs[1..], value);
    }
}

/// Leaf cells of a nested document in document order. Lists, scalars and empty
/// documents are leaves.
pub fn flatten(doc: &Document) -> Vec<(AttributePath, Value)> {
    let mut out = Vec::new();
    flatten_into(doc, &mut Vec::new(), &mut out);
    out
}

fn flatten_into(doc: &Document, prefix: &mut Vec<Segment>, out: &mut Vec<(AttributePath, Value)>) {
    for (k, v) in doc.iter() {
        prefix.push(Segment::Key(k.clone()));
        match v {
            Value::Document(child) if !child.is_empty() => flatten_into(child, prefix, out),
            other => out.push((AttributePath::new(prefix.clone()).expect("non-empty"), other.clone())),
        }
        prefix.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flatten_then_unflatten_is_identity() {
        let raw = r#"{"name":"A","address":{"city":"B","geo":{"lat":1.5}},"tags":["x"],"empty":{}}"#;
        let Value::Document(doc) = serde_json::from_str::<Value>(raw).unwrap() else { panic!() };
        let cells = flatten(&doc);
        let paths: Vec<_> = cells.iter().map(|(p, _)| p.clone()).collect();
        assert_eq!(paths.iter().map(|p| p.to_string()).collect::<Vec<_>>(), vec![
            "name",
            "address.city",
            "address.geo.lat",
            "tags",
            "empty"
        ]);
        let rebuilt = unflatten(&paths, cells.into_iter().map(|(_, v)| Some(v)).collect());
        assert_eq!(rebuilt, doc);
    }
}
