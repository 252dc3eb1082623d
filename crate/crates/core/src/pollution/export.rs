//! Source exports: canonical records rendered through a representation
//! profile into CSV (relational) or JSON lines (document).

use std::collections::BTreeMap;
use std::io::Write;

use crate::io::{csv_writer, IoError};
use crate::model::{unflatten, AttributePath, DataModel, Document, RecordId, SourceId, Timestamp, Value};
use crate::preconfig::{map_paths, map_record, FlatRecord, GenerationConfig, RepresentationProfile};

use super::provenance::{replay_until, ProvenanceEntry, ReplayError};

/// Name of the leading record id column or key.
pub const RECORD_ID_COLUMN: &str = "record_id";

pub fn flat_record(paths: &[AttributePath], cells: &[Option<Value>]) -> FlatRecord {
    paths.iter().cloned().zip(cells.iter().cloned()).collect()
}

/// A canonical record in a source's representation.
pub fn represent(profile: &RepresentationProfile, paths: &[AttributePath], cells: &[Option<Value>]) -> FlatRecord {
    map_record(&profile.mapping, flat_record(paths, cells))
}

/// Layout of one exported source.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceExport {
    pub source: SourceId,
    pub model: DataModel,
    pub columns: Vec<AttributePath>,
}

impl SourceExport {
    pub fn new(source: SourceId, profile: &RepresentationProfile, paths: &[AttributePath]) -> Self {
        SourceExport { source, model: profile.model, columns: map_paths(&profile.mapping, paths) }
    }

    pub fn extension(&self) -> &'static str {
        match self.model {
            DataModel::Relational => "csv",
            DataModel::Document => "jsonl",
        }
    }
}

/// Streams records of one layout to CSV or JSON lines.
pub enum SourceWriter<W: Write> {
    Csv { writer: Box<csv::Writer<W>>, columns: Vec<AttributePath> },
    Jsonl { writer: W },
}

impl<W: Write> SourceWriter<W> {
    /// Writes the CSV header right away.
    pub fn new(model: DataModel, columns: &[AttributePath], writer: W) -> Result<Self, IoError> {
        match model {
            DataModel::Relational => {
                let mut w = csv_writer(writer);
                w.write_record(std::iter::once(RECORD_ID_COLUMN.to_string()).chain(columns.iter().map(|c| c.to_string())))?;
                Ok(SourceWriter::Csv { writer: Box::new(w), columns: columns.to_vec() })
            }
            DataModel::Document => Ok(SourceWriter::Jsonl { writer }),
        }
    }

    pub fn write(&mut self, id: RecordId, record: FlatRecord) -> Result<(), IoError> {
        match self {
            SourceWriter::Csv { writer, columns } => {
                let mut row = vec![String::new(); columns.len() + 1];
                row[0] = id.to_string();
                for (p, cell) in record {
                    if let (Some(k), Some(v)) = (columns.iter().position(|c| *c == p), cell) {
                        row[k + 1] = v.render().into_owned();
                    }
                }
                writer.write_record(&row)?;
            }
            SourceWriter::Jsonl { writer } => {
                let (paths, cells): (Vec<AttributePath>, Vec<Option<Value>>) = record.into_iter().unzip();
                let mut doc = Document::new();
                doc.insert(RECORD_ID_COLUMN, Value::number(&id.to_string()));
                for (k, v) in unflatten(&paths, cells) {
                    doc.insert(k, v);
                }
                serde_json::to_writer(&mut *writer, &Value::Document(doc)).map_err(std::io::Error::from)?;
                writer.write_all(b"\n")?;
            }
        }
        Ok(())
    }

    pub fn finish(self) -> Result<(), IoError> {
        match self {
            SourceWriter::Csv { mut writer, .. } => writer.flush()?,
            SourceWriter::Jsonl { mut writer } => writer.flush()?,
        }
        Ok(())
    }
}

/// Every source as it looked at `t`, in the representation valid at `t`.
/// Records appear in record id order.
pub fn export_at<'a>(
    entries: impl IntoIterator<Item = &'a ProvenanceEntry>,
    config: &GenerationConfig,
    paths: &[AttributePath],
    t: Timestamp,
) -> Result<BTreeMap<SourceId, Vec<(RecordId, FlatRecord)>>, ReplayError> {
    let state = replay_until(entries, Some(t))?;
    let mut out = BTreeMap::new();
    for source in &config.sources {
        let profile = &source.profile_at(t).representation;
        let records = state
            .get(&source.id)
            .into_iter()
            .flatten()
            .map(|(id, r)| {
                let cells: Vec<Option<Value>> = paths.iter().map(|p| r.cells.get(p).cloned()).collect();
                (*id, represent(profile, paths, &cells))
            })
            .collect();
        out.insert(source.id, records);
    }
    Ok(out)
}
