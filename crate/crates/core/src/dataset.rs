//! Row-oriented in-memory snapshot of a dataset over a fixed table of leaf paths.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::model::{flatten, unflatten, AttributePath, DataModel, Document, EntityId, Value};

/// One row: a cell per path of the owning dataset, `None` when the attribute is absent.
pub type Row = Vec<Option<Value>>;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub model: DataModel,
    pub paths: Vec<AttributePath>,
    pub rows: Vec<Row>,
}

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum DatasetError {
    #[error("rows {rows:?} cannot be typed under one schema: `{path}` is both a leaf and a nested document")]
    InconsistentInput { path: AttributePath, rows: Vec<usize> },
    #[error("row {row}: attribute `{path}` is not part of the schema")]
    UnknownPath { path: AttributePath, row: usize },
}

impl Dataset {
    pub fn new(model: DataModel, paths: Vec<AttributePath>) -> Self {
        Dataset { model, paths, rows: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn position(&self, path: &AttributePath) -> Option<usize> {
        self.paths.iter().position(|p| p == path)
    }

    /// Present cells of one column, in row order.
    pub fn column(&self, idx: usize) -> impl Iterator<Item = &Value> + '_ {
        self.rows.iter().filter_map(move |r| r[idx].as_ref())
    }

    /// Rows keyed by entity id; entities are numbered by row order.
    pub fn entity_rows(&self) -> impl Iterator<Item = (EntityId, &Row)> {
        self.rows.iter().enumerate().map(|(i, r)| (EntityId(i as u64), r))
    }

    pub fn from_documents(model: DataModel, docs: &[Document]) -> Result<Self, DatasetError> {
        let mut paths: Vec<AttributePath> = Vec::new();
        let mut index: HashMap<AttributePath, usize> = HashMap::new();
        let mut flat_rows = Vec::with_capacity(docs.len());
        for doc in docs {
            let cells = flatten(doc);
            for (p, _) in &cells {
                if !index.contains_key(p) {
                    index.insert(p.clone(), paths.len());
                    paths.push(p.clone());
                }
            }
            flat_rows.push(cells);
        }
        check_leaf_conflicts(&paths, &flat_rows)?;
        let rows = flat_rows
            .into_iter()
            .map(|cells| {
                let mut row: Row = vec![None; paths.len()];
                for (p, v) in cells {
                    row[index[&p]] = Some(v);
                }
                row
            })
            .collect();
        Ok(Dataset { model, paths, rows })
    }

    /// Places documents into a fixed path table, e.g. one taken from a schema.
    pub fn conform(model: DataModel, paths: Vec<AttributePath>, docs: &[Document]) -> Result<Self, DatasetError> {
        let index: HashMap<&AttributePath, usize> = paths.iter().enumerate().map(|(i, p)| (p, i)).collect();
        let mut rows = Vec::with_capacity(docs.len());
        for (i, doc) in docs.iter().enumerate() {
            let mut row: Row = vec![None; paths.len()];
            for (p, v) in flatten(doc) {
                let at = *index.get(&p).ok_or_else(|| DatasetError::UnknownPath { path: p.clone(), row: i })?;
                row[at] = Some(v);
            }
            rows.push(row);
        }
        Ok(Dataset { model, paths, rows })
    }

    pub fn to_documents(&self) -> Vec<Document> {
        self.rows.iter().map(|r| unflatten(&self.paths, r.clone())).collect()
    }
}

fn check_leaf_conflicts(paths: &[AttributePath], rows: &[Vec<(AttributePath, Value)>]) -> Result<(), DatasetError> {
    let set: BTreeSet<&AttributePath> = paths.iter().collect();
    for p in paths {
        let mut prefix = p.parent();
        while let Some(parent) = prefix {
            if set.contains(&parent) {
                let mut offending: BTreeMap<usize, ()> = BTreeMap::new();
                for (i, cells) in rows.iter().enumerate() {
                    if cells.iter().any(|(q, _)| q == &parent || q.starts_with(&parent) && q != &parent) {
                        offending.insert(i, ());
                    }
                }
                return Err(DatasetError::InconsistentInput {
                    path: parent,
                    rows: offending.into_keys().collect(),
                });
            }
            prefix = parent.parent();
        }
    }
    Ok(())
}
