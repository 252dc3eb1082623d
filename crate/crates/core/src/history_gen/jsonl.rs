//! JSON-lines serialization of a data history: one line per lifespan and one
//! per (entity, path, version).

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::io::IoError;
use crate::model::{AttributePath, DataHistory, EntityHistory, EntityId, Timestamp, Value, VersionedValue};

/// Path marker of lifespan lines.
pub const LIFESPAN_PATH: &str = "__lifespan__";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryLine {
    pub entity_id: EntityId,
    pub path: String,
    pub value: Value,
    pub valid_from: Timestamp,
    pub valid_to: Option<Timestamp>,
}

/// Writes the lifespan line, then every version in path order.
pub fn write_entity<W: Write>(mut w: W, paths: &[AttributePath], e: &EntityHistory) -> std::io::Result<()> {
    let mut line = |l: &HistoryLine| -> std::io::Result<()> {
        serde_json::to_writer(&mut w, l)?;
        w.write_all(b"\n")
    };
    line(&HistoryLine {
        entity_id: e.id,
        path: LIFESPAN_PATH.into(),
        value: Value::Null,
        valid_from: e.created_at,
        valid_to: e.deleted_at,
    })?;
    for (path, list) in paths.iter().zip(&e.versions) {
        let key = path.to_string();
        for v in list {
            line(&HistoryLine {
                entity_id: e.id,
                path: key.clone(),
                value: v.value.clone(),
                valid_from: v.valid_from,
                valid_to: v.valid_to,
            })?;
        }
    }
    Ok(())
}

pub fn write_history<W: Write>(mut w: W, history: &DataHistory) -> std::io::Result<()> {
    for e in history.entities() {
        write_entity(&mut w, history.paths(), e)?;
    }
    Ok(())
}

/// Reads a history. With `paths`, the path table is fixed and unknown paths
/// are rejected; otherwise paths are taken in order of first appearance.
/// Versions must appear in time order per (entity, path).
pub fn read_history<R: BufRead>(reader: R, paths: Option<&[AttributePath]>) -> Result<DataHistory, IoError> {
    let mut table: Vec<AttributePath> = paths.map(<[_]>::to_vec).unwrap_or_default();
    let fixed = paths.is_some();
    let mut index: BTreeMap<AttributePath, usize> = table.iter().enumerate().map(|(i, p)| (p.clone(), i)).collect();
    let mut lifespans: BTreeMap<EntityId, (Timestamp, Option<Timestamp>)> = BTreeMap::new();
    let mut cells: BTreeMap<EntityId, Vec<(usize, VersionedValue)>> = BTreeMap::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let l: HistoryLine = serde_json::from_str(&line).map_err(|source| IoError::Json { line: n + 1, source })?;
        if l.path == LIFESPAN_PATH {
            lifespans.insert(l.entity_id, (l.valid_from, l.valid_to));
            continue;
        }
        let path = AttributePath::from_str(&l.path)?;
        let idx = match index.get(&path) {
            Some(&i) => i,
            None if fixed => {
                return Err(IoError::Dataset(crate::dataset::DatasetError::UnknownPath { path, row: n }));
            }
            None => {
                table.push(path.clone());
                index.insert(path, table.len() - 1);
                table.len() - 1
            }
        };
        cells.entry(l.entity_id).or_default().push((
            idx,
            VersionedValue { value: l.value, valid_from: l.valid_from, valid_to: l.valid_to },
        ));
    }
    let mut history = DataHistory::new(table.clone());
    for (id, (created_at, deleted_at)) in lifespans {
        let mut versions: Vec<Vec<VersionedValue>> = vec![Vec::new(); table.len()];
        for (idx, v) in cells.remove(&id).unwrap_or_default() {
            versions[idx].push(v);
        }
        history.insert(EntityHistory { id, created_at, deleted_at, versions });
    }
    Ok(history)
}

/// Streams a history written entity by entity over a fixed path table.
pub struct HistoryEntities<R> {
    lines: std::io::Lines<R>,
    index: BTreeMap<AttributePath, usize>,
    width: usize,
    line_no: usize,
    pending: Option<HistoryLine>,
}

impl<R: BufRead> HistoryEntities<R> {
    pub fn new(reader: R, paths: &[AttributePath]) -> Self {
        HistoryEntities {
            lines: reader.lines(),
            index: paths.iter().enumerate().map(|(i, p)| (p.clone(), i)).collect(),
            width: paths.len(),
            line_no: 0,
            pending: None,
        }
    }

    fn next_line(&mut self) -> Option<Result<HistoryLine, IoError>> {
        loop {
            let line = match self.lines.next()? {
                Ok(l) => l,
                Err(e) => return Some(Err(e.into())),
            };
            self.line_no += 1;
            if !line.trim().is_empty() {
                return Some(serde_json::from_str(&line).map_err(|source| IoError::Json { line: self.line_no, source }));
            }
        }
    }

    fn add(&self, e: &mut EntityHistory, l: HistoryLine) -> Result<(), IoError> {
        if l.path == LIFESPAN_PATH {
            e.created_at = l.valid_from;
            e.deleted_at = l.valid_to;
            return Ok(());
        }
        let path = AttributePath::from_str(&l.path)?;
        let &idx = self
            .index
            .get(&path)
            .ok_or(IoError::Dataset(crate::dataset::DatasetError::UnknownPath { path, row: self.line_no }))?;
        e.versions[idx].push(VersionedValue { value: l.value, valid_from: l.valid_from, valid_to: l.valid_to });
        Ok(())
    }
}

impl<R: BufRead> Iterator for HistoryEntities<R> {
    type Item = Result<EntityHistory, IoError>;

    fn next(&mut self) -> Option<Self::Item> {
        let first = match self.pending.take() {
            Some(l) => l,
            None => match self.next_line()? {
                Ok(l) => l,
                Err(e) => return Some(Err(e)),
            },
        };
        let mut e = EntityHistory {
            id: first.entity_id,
            created_at: Timestamp::ZERO,
            deleted_at: None,
            versions: vec![Vec::new(); self.width],
        };
        if let Err(err) = self.add(&mut e, first) {
            return Some(Err(err));
        }
        loop {
            match self.next_line() {
                None => break,
                Some(Err(err)) => return Some(Err(err)),
                Some(Ok(l)) if l.entity_id == e.id => {
                    if let Err(err) = self.add(&mut e, l) {
                        return Some(Err(err));
                    }
                }
                Some(Ok(l)) => {
                    self.pending = Some(l);
                    break;
                }
            }
        }
        Some(Ok(e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let paths = vec![AttributePath::key("a"), AttributePath::from_str("b.c").unwrap()];
        let mut h = DataHistory::new(paths.clone());
        h.insert(EntityHistory {
            id: EntityId(3),
            created_at: Timestamp(2),
            deleted_at: Some(Timestamp(9)),
            versions: vec![
                vec![
                    VersionedValue { value: Value::text("x"), valid_from: Timestamp(2), valid_to: Some(Timestamp(5)) },
                    VersionedValue { value: Value::number("1.50"), valid_from: Timestamp(5), valid_to: Some(Timestamp(9)) },
                ],
                vec![],
            ],
        });
        let mut buf = Vec::new();
        write_history(&mut buf, &h).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(r#"{"entity_id":3,"path":"__lifespan__","value":null,"valid_from":2,"valid_to":9}"#));
        assert_eq!(read_history(buf.as_slice(), Some(&paths)).unwrap(), h);
        let streamed: Vec<EntityHistory> = HistoryEntities::new(buf.as_slice(), &paths).map(Result::unwrap).collect();
        assert_eq!(streamed, h.entities().cloned().collect::<Vec<_>>());
    }
}
