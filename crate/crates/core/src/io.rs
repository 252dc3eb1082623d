//! CSV and JSON-lines readers and writers for datasets.

use std::io::{BufRead, Read, Write};
use std::str::FromStr;

use rust_decimal::Decimal;

use crate::dataset::{Dataset, DatasetError, Row};
use crate::model::{AttributePath, DataModel, Document, PathError, Value};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error("line {line}: expected a JSON object")]
    NotAnObject { line: usize },
    #[error("bad column name: {0}")]
    Header(#[from] PathError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

/// Reads an RFC-4180 CSV file with a header row. Empty cells are null. A column
/// becomes numeric (or boolean) only when every non-empty cell renders back to
/// exactly the same text, so reading is lossless.
pub fn read_csv<R: Read>(reader: R) -> Result<Dataset, IoError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let paths = rdr
        .headers()?
        .iter()
        .map(AttributePath::from_str)
        .collect::<Result<Vec<_>, _>>()?;
    let mut raw: Vec<Vec<String>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        raw.push(rec.iter().map(str::to_string).collect());
    }
    let width = paths.len();
    let column_kind: Vec<CellKind> = (0..width)
        .map(|c| infer_column(raw.iter().map(|r| r.get(c).map(String::as_str).unwrap_or(""))))
        .collect();
    let rows = raw
        .into_iter()
        .map(|r| {
            (0..width)
                .map(|c| Some(parse_cell(r.get(c).map(String::as_str).unwrap_or(""), column_kind[c])))
                .collect::<Row>()
        })
        .collect();
    Ok(Dataset { model: DataModel::Relational, paths, rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CellKind {
    Text,
    Number,
    Boolean,
}

fn exact_decimal(s: &str) -> Option<Decimal> {
    Decimal::from_str(s).ok().filter(|d| d.to_string() == s)
}

fn infer_column<'a>(cells: impl Iterator<Item = &'a str>) -> CellKind {
    let mut number = true;
    let mut boolean = true;
    let mut any = false;
    for s in cells.filter(|s| !s.is_empty()) {
        any = true;
        number &= exact_decimal(s).is_some();
        boolean &= s == "true" || s == "false";
        if !number && !boolean {
            return CellKind::Text;
        }
    }
    match (any, number, boolean) {
        (false, _, _) => CellKind::Text,
        (_, true, _) => CellKind::Number,
        (_, _, true) => CellKind::Boolean,
        _ => CellKind::Text,
    }
}

fn parse_cell(s: &str, kind: CellKind) -> Value {
    if s.is_empty() {
        return Value::Null;
    }
    match kind {
        CellKind::Number => exact_decimal(s).map(Value::Number).unwrap_or_else(|| Value::text(s)),
        CellKind::Boolean => Value::Boolean(s == "true"),
        CellKind::Text => Value::text(s),
    }
}

pub fn csv_writer<W: Write>(writer: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer)
}

pub fn write_csv<W: Write>(dataset: &Dataset, writer: W) -> Result<(), IoError> {
    let mut w = csv_writer(writer);
    w.write_record(dataset.paths.iter().map(|p| p.to_string()))?;
    for row in &dataset.rows {
        w.write_record(row.iter().map(|c| c.as_ref().map(|v| v.render().into_owned()).unwrap_or_default()))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads one JSON object per non-empty line.
pub fn read_jsonl_documents<R: BufRead>(reader: R) -> Result<Vec<Document>, IoError> {
    let mut docs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let v: Value = serde_json::from_str(&line).map_err(|source| IoError::Json { line: i + 1, source })?;
        match v {
            Value::Document(d) => docs.push(d),
            _ => return Err(IoError::NotAnObject { line: i + 1 }),
        }
    }
    Ok(docs)
}

pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Dataset, IoError> {
    let docs = read_jsonl_documents(reader)?;
    Ok(Dataset::from_documents(DataModel::Document, &docs)?)
}

pub fn write_jsonl<W: Write>(dataset: &Dataset, mut writer: W) -> Result<(), IoError> {
    for doc in dataset.to_documents() {
        serde_json::to_writer(&mut writer, &Value::Document(doc)).map_err(std::io::Error::from)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// Dispatches on the file extension: `.csv` is relational, anything else is JSON-lines.
pub fn read_dataset_file(path: &std::path::Path) -> Result<Dataset, IoError> {
    let file = std::fs::File::open(path)?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        read_csv(std::io::BufReader::new(file))
    } else {
        read_jsonl(std::io::BufReader::new(file))
    }
}
