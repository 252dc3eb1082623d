//! Schema mapping steps between the canonical prepared schema and a source or
//! target representation. Steps operate on flat records: ordered lists of
//! (leaf path, cell) pairs.

use serde::{Deserialize, Serialize};

use crate::formats::{convert, FormatId};
use crate::model::{AttributePath, Segment, Value};

pub type FlatRecord = Vec<(AttributePath, Option<Value>)>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "snake_case")]
pub enum MappingStep {
    /// Renames a path and everything below it.
    Rename { from: AttributePath, to: AttributePath },
    /// Joins the non-null parts with a separator into one attribute placed at
    /// the first part's position.
    Merge { parts: Vec<AttributePath>, into: AttributePath, separator: String },
    /// Splits a text attribute into at most `into.len()` pieces.
    Split { from: AttributePath, into: Vec<AttributePath>, separator: String },
    /// Moves paths below a new top-level key.
    Nest { paths: Vec<AttributePath>, under: String },
    /// Replaces the nested attributes below `under` by top-level attributes
    /// named `<under>_<child>`.
    Flatten { under: AttributePath },
    /// Renders values of `path` that are in format `from` in format `to`.
    FormatConvention { path: AttributePath, from: FormatId, to: FormatId },
}

impl MappingStep {
    /// Paths of the input schema the step reads.
    pub fn inputs(&self) -> Vec<&AttributePath> {
        match self {
            MappingStep::Rename { from, .. } | MappingStep::Split { from, .. } => vec![from],
            MappingStep::Merge { parts, .. } => parts.iter().collect(),
            MappingStep::Nest { paths, .. } => paths.iter().collect(),
            MappingStep::Flatten { under } => vec![under],
            MappingStep::FormatConvention { path, .. } => vec![path],
        }
    }

    pub fn is_value_level(&self) -> bool {
        matches!(self, MappingStep::FormatConvention { .. })
    }

    fn apply(&self, mut rec: FlatRecord) -> FlatRecord {
        match self {
            MappingStep::Rename { from, to } => {
                for (p, _) in &mut rec {
                    if p.starts_with(from) {
                        let mut segs = to.segments().to_vec();
                        segs.extend_from_slice(&p.segments()[from.segments().len()..]);
                        *p = AttributePath::new(segs).expect("non-empty");
                    }
                }
                rec
            }
            MappingStep::Merge { parts, into, separator } => {
                let Some(first) = rec.iter().position(|(p, _)| parts.contains(p)) else { return rec };
                let mut present = false;
                let mut texts = Vec::new();
                for part in parts {
                    if let Some((_, Some(v))) = rec.iter().find(|(p, _)| p == part) {
                        present = true;
                        if !v.is_null() {
                            texts.push(v.render().into_owned());
                        }
                    }
                }
                let merged = match (present, texts.is_empty()) {
                    (false, _) => None,
                    (true, true) => Some(Value::Null),
                    (true, false) => Some(Value::text(texts.join(separator))),
                };
                rec[first] = (into.clone(), merged);
                let mut i = 0;
                rec.retain(|(p, _)| {
                    i += 1;
                    i - 1 == first || !parts.contains(p)
                });
                rec
            }
            MappingStep::Split { from, into, separator } => {
                let Some(at) = rec.iter().position(|(p, _)| p == from) else { return rec };
                let (_, cell) = rec.remove(at);
                let pieces: Vec<Option<Value>> = match cell {
                    None => vec![None; into.len()],
                    Some(Value::Text(s)) => {
                        let mut it = s.splitn(into.len(), separator.as_str()).map(|x| Some(Value::text(x)));
                        (0..into.len()).map(|_| it.next().unwrap_or(Some(Value::Null))).collect()
                    }
                    Some(other) => {
                        let mut v = vec![Some(Value::Null); into.len()];
                        v[0] = Some(other);
                        v
                    }
                };
                for (k, (p, c)) in into.iter().zip(pieces).enumerate() {
                    rec.insert(at + k, (p.clone(), c));
                }
                rec
            }
            MappingStep::Nest { paths, under } => {
                for (p, _) in &mut rec {
                    if paths.iter().any(|q| p.starts_with(q)) {
                        *p = p.prefixed(under.clone());
                    }
                }
                rec
            }
            MappingStep::Flatten { under } => {
                for (p, _) in &mut rec {
                    if p.starts_with(under) && p != under {
                        let rest: Vec<String> = p.segments()[under.segments().len() - 1..]
                            .iter()
                            .map(|s| match s {
                                Segment::Key(k) => k.clone(),
                                Segment::Index(i) => i.to_string(),
                            })
                            .collect();
                        let mut segs = under.segments()[..under.segments().len() - 1].to_vec();
                        segs.push(Segment::Key(rest.join("_")));
                        *p = AttributePath::new(segs).expect("non-empty");
                    }
                }
                rec
            }
            MappingStep::FormatConvention { path, from, to } => {
                for (p, cell) in &mut rec {
                    if p == path {
                        if let Some(converted) = cell.as_ref().and_then(|v| convert(v, *from, *to)) {
                            *cell = Some(converted);
                        }
                    }
                }
                rec
            }
        }
    }
}

/// Applies steps in order. Steps referring to paths that are absent leave the
/// record unchanged, so every step list is total.
pub fn map_record(steps: &[MappingStep], rec: FlatRecord) -> FlatRecord {
    steps.iter().fold(rec, |r, s| s.apply(r))
}

/// Output schema of a step list.
pub fn map_paths(steps: &[MappingStep], paths: &[AttributePath]) -> Vec<AttributePath> {
    let rec: FlatRecord = paths.iter().map(|p| (p.clone(), None)).collect();
    map_record(steps, rec).into_iter().map(|(p, _)| p).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::str::FromStr;

    fn p(s: &str) -> AttributePath {
        AttributePath::from_str(s).unwrap()
    }

    fn rec(cells: &[(&str, &str)]) -> FlatRecord {
        cells.iter().map(|(k, v)| (p(k), Some(Value::text(*v)))).collect()
    }

    #[test]
    fn rename_merge_nest_flatten() {
        let r = rec(&[("name_1", "Smith"), ("name_2", "John"), ("city", "Berlin")]);
        let steps = vec![
            MappingStep::Merge { parts: vec![p("name_1"), p("name_2")], into: p("name"), separator: ", ".into() },
            MappingStep::Rename { from: p("city"), to: p("town") },
            MappingStep::Nest { paths: vec![p("town")], under: "address".into() },
        ];
        let out = map_record(&steps, r);
        assert_eq!(out, vec![(p("name"), Some(Value::text("Smith, John"))), (p("address.town"), Some(Value::text("Berlin")))]);
        let flat = map_record(&[MappingStep::Flatten { under: p("address") }], out);
        assert_eq!(flat[1].0, p("address_town"));
    }

    #[test]
    fn split_pads_missing_pieces() {
        let out = map_record(
            &[MappingStep::Split { from: p("a"), into: vec![p("x"), p("y")], separator: " ".into() }],
            rec(&[("a", "one")]),
        );
        assert_eq!(out, vec![(p("x"), Some(Value::text("one"))), (p("y"), Some(Value::Null))]);
    }

    #[test]
    fn format_convention_leaves_foreign_formats() {
        let step = MappingStep::FormatConvention { path: p("d"), from: FormatId::DateIso, to: FormatId::DateDmy };
        assert_eq!(map_record(std::slice::from_ref(&step), rec(&[("d", "2020-01-02")]))[0].1, Some(Value::text("02.01.2020")));
        assert_eq!(map_record(&[step], rec(&[("d", "01/02/2020")]))[0].1, Some(Value::text("01/02/2020")));
    }

    #[test]
    fn paths_follow_records() {
        let steps = vec![MappingStep::Rename { from: p("a"), to: p("b") }];
        assert_eq!(map_paths(&steps, &[p("a"), p("c")]), vec![p("b"), p("c")]);
    }
}
