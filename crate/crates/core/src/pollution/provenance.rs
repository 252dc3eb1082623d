//! The provenance log: one entry per mutation of a source record, complete
//! enough to rebuild every source state at every instant.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};

use serde::de::{MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::io::IoError;
use crate::model::{AttributePath, EntityId, ErrorKind, RecordId, SourceId, Timestamp, Value};

/// Written cells of a record in path order. Serialized as a JSON object keyed
/// by path; absent cells are omitted.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Cells(pub Vec<(AttributePath, Value)>);

impl Serialize for Cells {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for (p, v) in &self.0 {
            map.serialize_entry(&p.to_string(), v)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for Cells {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct CellsVisitor;
        impl<'de> Visitor<'de> for CellsVisitor {
            type Value = Cells;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a map from attribute path to value")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> Result<Cells, A::Error> {
                let mut out = Vec::new();
                while let Some((k, v)) = access.next_entry::<String, Value>()? {
                    let path = k.parse::<AttributePath>().map_err(serde::de::Error::custom)?;
                    out.push((path, v));
                }
                Ok(Cells(out))
            }
        }
        deserializer.deserialize_map(CellsVisitor)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CreateCause {
    /// Part of the source's initial load at tick 0.
    Initial,
    Insert,
    /// An extra record of an inserted entity.
    Duplicate,
    Copy,
    /// The entity entered the source's scope through a profile change.
    Backfill,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateCause {
    World,
    Copy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCause {
    /// Injected while the source wrote the cell.
    Write,
    /// Injected by a copy transformation.
    Copy,
    Maintenance,
    /// A persistent faulty component of the source.
    Component,
    /// The source missed an update and kept an older version.
    Missed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeleteCause {
    World,
    Copy,
    Scope,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissedEvent {
    Update,
    Delete,
}

/// Origin of a copied record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Lineage {
    pub source: SourceId,
    pub record_id: RecordId,
    /// Index of the copy specification that transported the record.
    pub copy: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Op {
    Create {
        cause: CreateCause,
        cells: Cells,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        origin: Option<Lineage>,
    },
    Update {
        cause: UpdateCause,
        cells: Cells,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        removed: Vec<AttributePath>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        copy: Option<usize>,
    },
    Error {
        class: ErrorKind,
        path: AttributePath,
        before: Value,
        after: Value,
        cause: ErrorCause,
    },
    Delete {
        cause: DeleteCause,
    },
    Missed {
        event: MissedEvent,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        paths: Vec<AttributePath>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceEntry {
    pub source: SourceId,
    pub record_id: RecordId,
    pub entity_id: EntityId,
    pub at: Timestamp,
    #[serde(flatten)]
    pub op: Op,
}

/// A record rebuilt from the log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplayedRecord {
    pub entity: EntityId,
    pub created_at: Timestamp,
    pub origin: Option<Lineage>,
    pub cells: BTreeMap<AttributePath, Value>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReplayError {
    #[error("record {0} of source {1} is mutated before it is created")]
    UnknownRecord(RecordId, SourceId),
    #[error("record {0} of source {1} is created twice")]
    DuplicateRecord(RecordId, SourceId),
    #[error("error entry on record {record} at {path} expects {expected}, state holds {found}")]
    BeforeMismatch { record: RecordId, path: AttributePath, expected: Value, found: Value },
}

/// Live records per source, keyed by record id.
pub type ReplayedState = BTreeMap<SourceId, BTreeMap<RecordId, ReplayedRecord>>;

/// Applies one entry to a replayed state. Error entries are checked against
/// the cell they claim to modify.
pub fn apply_entry(state: &mut ReplayedState, e: &ProvenanceEntry) -> Result<(), ReplayError> {
    let records = state.entry(e.source).or_default();
    match &e.op {
        Op::Create { cells, origin, .. } => {
            let rec = ReplayedRecord {
                entity: e.entity_id,
                created_at: e.at,
                origin: *origin,
                cells: cells.0.iter().cloned().collect(),
            };
            if records.insert(e.record_id, rec).is_some() {
                return Err(ReplayError::DuplicateRecord(e.record_id, e.source));
            }
        }
        Op::Update { cells, removed, .. } => {
            let rec = records.get_mut(&e.record_id).ok_or(ReplayError::UnknownRecord(e.record_id, e.source))?;
            for (p, v) in &cells.0 {
                rec.cells.insert(p.clone(), v.clone());
            }
            for p in removed {
                rec.cells.remove(p);
            }
        }
        Op::Error { path, before, after, cause, .. } => {
            let rec = records.get_mut(&e.record_id).ok_or(ReplayError::UnknownRecord(e.record_id, e.source))?;
            let found = rec.cells.get(path).cloned().unwrap_or(Value::Null);
            // A missed update keeps the cell: `before` is the world's new value
            // and `after` the retained one.
            let expected = if *cause == ErrorCause::Missed { after } else { before };
            if &found != expected {
                return Err(ReplayError::BeforeMismatch {
                    record: e.record_id,
                    path: path.clone(),
                    expected: expected.clone(),
                    found,
                });
            }
            rec.cells.insert(path.clone(), after.clone());
        }
        Op::Delete { .. } => {
            records.remove(&e.record_id).ok_or(ReplayError::UnknownRecord(e.record_id, e.source))?;
        }
        Op::Missed { .. } => {
            if !records.contains_key(&e.record_id) {
                return Err(ReplayError::UnknownRecord(e.record_id, e.source));
            }
        }
    }
    Ok(())
}

/// Source states after every entry with `at <= t`. Entries must be in log
/// order.
pub fn replay_until<'a>(
    entries: impl IntoIterator<Item = &'a ProvenanceEntry>,
    t: Option<Timestamp>,
) -> Result<ReplayedState, ReplayError> {
    let mut state = ReplayedState::new();
    for e in entries {
        if t.is_none_or(|t| e.at <= t) {
            apply_entry(&mut state, e)?;
        }
    }
    Ok(state)
}

pub fn write_entries<W: Write>(mut w: W, entries: &[ProvenanceEntry]) -> std::io::Result<()> {
    for e in entries {
        serde_json::to_writer(&mut w, e)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Streams a provenance log grouped by entity: each item holds all entries
/// of one entity. The log must be written entity by entity.
pub struct EntityGroups<R> {
    lines: std::io::Lines<R>,
    line_no: usize,
    pending: Option<ProvenanceEntry>,
}

impl<R: BufRead> EntityGroups<R> {
    pub fn new(reader: R) -> Self {
        EntityGroups { lines: reader.lines(), line_no: 0, pending: None }
    }

    fn next_entry(&mut self) -> Option<Result<ProvenanceEntry, IoError>> {
        loop {
            let line = match self.lines.next()? {
                Ok(l) => l,
                Err(e) => return Some(Err(e.into())),
            };
            self.line_no += 1;
            if line.trim().is_empty() {
                continue;
            }
            return Some(
                serde_json::from_str(&line).map_err(|source| IoError::Json { line: self.line_no, source }),
            );
        }
    }
}

impl<R: BufRead> Iterator for EntityGroups<R> {
    type Item = Result<(EntityId, Vec<ProvenanceEntry>), IoError>;

    fn next(&mut self) -> Option<Self::Item> {
        let first = match self.pending.take() {
            Some(e) => e,
            None => match self.next_entry()? {
                Ok(e) => e,
                Err(err) => return Some(Err(err)),
            },
        };
        let entity = first.entity_id;
        let mut group = vec![first];
        loop {
            match self.next_entry() {
                None => break,
                Some(Err(err)) => return Some(Err(err)),
                Some(Ok(e)) if e.entity_id == entity => group.push(e),
                Some(Ok(e)) => {
                    self.pending = Some(e);
                    break;
                }
            }
        }
        Some(Ok((entity, group)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(record: u64, at: u64, op: Op) -> ProvenanceEntry {
        ProvenanceEntry { source: SourceId(0), record_id: RecordId(record), entity_id: EntityId(record / 10), at: Timestamp(at), op }
    }

    fn cells(kv: &[(&str, &str)]) -> Cells {
        Cells(kv.iter().map(|(k, v)| (AttributePath::key(*k), Value::text(*v))).collect())
    }

    #[test]
    fn entries_round_trip_through_json() {
        let es = vec![
            entry(1, 0, Op::Create { cause: CreateCause::Initial, cells: cells(&[("name", "Ann"), ("city", "Rome")]), origin: None }),
            entry(1, 3, Op::Error {
                class: ErrorKind::Typo,
                path: AttributePath::key("name"),
                before: Value::text("Ann"),
                after: Value::text("Anb"),
                cause: ErrorCause::Write,
            }),
            entry(1, 4, Op::Missed { event: MissedEvent::Update, paths: vec![AttributePath::key("city")] }),
            entry(1, 5, Op::Delete { cause: DeleteCause::World }),
        ];
        let mut buf = Vec::new();
        write_entries(&mut buf, &es).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.lines().next().unwrap().contains(r#""cells":{"name":"Ann","city":"Rome"}"#));
        let back: Vec<ProvenanceEntry> = EntityGroups::new(&buf[..]).flat_map(|g| g.unwrap().1).collect();
        assert_eq!(back, es);
    }

    #[test]
    fn replay_respects_time_and_checks_before_values() {
        let es = vec![
            entry(1, 0, Op::Create { cause: CreateCause::Initial, cells: cells(&[("name", "Ann")]), origin: None }),
            entry(1, 3, Op::Update { cause: UpdateCause::World, cells: cells(&[("name", "Anna")]), removed: vec![], copy: None }),
        ];
        let early = replay_until(&es, Some(Timestamp(2))).unwrap();
        assert_eq!(early[&SourceId(0)][&RecordId(1)].cells[&AttributePath::key("name")], Value::text("Ann"));
        let bad = entry(1, 4, Op::Error {
            class: ErrorKind::Typo,
            path: AttributePath::key("name"),
            before: Value::text("Ann"),
            after: Value::text("Anb"),
            cause: ErrorCause::Write,
        });
        let mut all = es.clone();
        all.push(bad);
        assert!(matches!(replay_until(&all, None), Err(ReplayError::BeforeMismatch { .. })));
    }

    #[test]
    fn groups_split_on_entity_change() {
        let es = vec![
            entry(10, 0, Op::Delete { cause: DeleteCause::World }),
            entry(11, 0, Op::Delete { cause: DeleteCause::World }),
            entry(20, 0, Op::Delete { cause: DeleteCause::World }),
        ];
        let mut buf = Vec::new();
        write_entries(&mut buf, &es).unwrap();
        let groups: Vec<(EntityId, usize)> = EntityGroups::new(&buf[..]).map(|g| g.map(|(e, v)| (e, v.len())).unwrap()).collect();
        assert_eq!(groups, vec![(EntityId(1), 2), (EntityId(2), 1)]);
    }
}
