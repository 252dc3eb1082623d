use std::collections::{BTreeMap, BTreeSet, HashSet};

use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::model::{AttributePath, Relationship, RelationshipKind, Value, ValueKind};
use crate::rng::stable_hash;

/// Number of distinct values kept per attribute as a generator sample.
pub const SAMPLE_SIZE: usize = 256;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericRange {
    pub min: Decimal,
    pub max: Decimal,
    /// Largest number of fractional digits observed.
    pub scale: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeProfile {
    pub path: AttributePath,
    pub count: usize,
    pub null_count: usize,
    pub null_rate: f64,
    pub distinct_count: usize,
    pub length: Summary,
    pub tokens: Summary,
    pub kinds: BTreeMap<ValueKind, usize>,
    pub numeric: Option<NumericRange>,
    /// Bottom-k sample of distinct non-null values by stable hash; independent
    /// of row order.
    pub sample: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationshipProfile {
    pub relationship: Relationship,
    /// Fraction of rows in which the relationship is instantiated.
    pub frequency: f64,
    pub type_counts: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataProfile {
    pub rows: usize,
    pub attributes: Vec<AttributeProfile>,
    pub relationships: Vec<RelationshipProfile>,
}

impl DataProfile {
    pub fn attribute(&self, path: &AttributePath) -> Option<&AttributeProfile> {
        self.attributes.iter().find(|a| &a.path == path)
    }
}

#[derive(Default)]
struct Acc {
    count: usize,
    nulls: usize,
    distinct: HashSet<u64>,
    len_sum: u64,
    len_min: Option<usize>,
    len_max: usize,
    tok_sum: u64,
    tok_min: Option<usize>,
    tok_max: usize,
    kinds: BTreeMap<ValueKind, usize>,
    numeric: Option<NumericRange>,
    sample: BTreeMap<u64, Value>,
}

fn value_hash(v: &Value) -> u64 {
    let mut bytes = vec![v.kind() as u8];
    bytes.extend_from_slice(v.render().as_bytes());
    stable_hash(&bytes)
}

impl Acc {
    fn push(&mut self, cell: Option<&Value>) {
        self.count += 1;
        let v = match cell {
            None | Some(Value::Null) => {
                self.nulls += 1;
                *self.kinds.entry(ValueKind::Null).or_default() += 1;
                return;
            }
            Some(v) => v,
        };
        *self.kinds.entry(v.kind()).or_default() += 1;
        let h = value_hash(v);
        if self.distinct.insert(h) {
            let full = self.sample.len() >= SAMPLE_SIZE;
            if !full || self.sample.keys().next_back().is_some_and(|&top| h < top) {
                self.sample.insert(h, v.clone());
                if full {
                    self.sample.pop_last();
                }
            }
        }
        let len = v.length();
        self.len_sum += len as u64;
        self.len_min = Some(self.len_min.map_or(len, |m| m.min(len)));
        self.len_max = self.len_max.max(len);
        let toks = v.render().split_whitespace().count();
        self.tok_sum += toks as u64;
        self.tok_min = Some(self.tok_min.map_or(toks, |m| m.min(toks)));
        self.tok_max = self.tok_max.max(toks);
        if let Value::Number(d) = v {
            let r = self.numeric.get_or_insert(NumericRange { min: *d, max: *d, scale: d.scale() });
            r.min = r.min.min(*d);
            r.max = r.max.max(*d);
            r.scale = r.scale.max(d.scale());
        }
    }

    fn finish(self, path: AttributePath) -> AttributeProfile {
        let non_null = self.count - self.nulls;
        let summary = |sum: u64, min: Option<usize>, max: usize| {
            if non_null == 0 {
                Summary::default()
            } else {
                Summary { min: min.unwrap_or(0) as f64, mean: sum as f64 / non_null as f64, max: max as f64 }
            }
        };
        AttributeProfile {
            path,
            count: self.count,
            null_count: self.nulls,
            null_rate: if self.count == 0 { 0.0 } else { self.nulls as f64 / self.count as f64 },
            distinct_count: self.distinct.len(),
            length: summary(self.len_sum, self.len_min, self.len_max),
            tokens: summary(self.tok_sum, self.tok_min, self.tok_max),
            kinds: self.kinds,
            numeric: self.numeric,
            sample: self.sample.into_values().collect(),
        }
    }
}

fn profile_column(dataset: &Dataset, idx: usize) -> AttributeProfile {
    let mut acc = Acc::default();
    for row in &dataset.rows {
        acc.push(row[idx].as_ref());
    }
    acc.finish(dataset.paths[idx].clone())
}

/// Per-attribute statistics plus relationship frequencies. Statistics are over
/// non-null values; null rate is over all rows.
pub fn profile_attributes(dataset: &Dataset) -> DataProfile {
    #[cfg(feature = "parallel")]
    let attributes: Vec<AttributeProfile> = {
        use rayon::prelude::*;
        (0..dataset.paths.len()).into_par_iter().map(|i| profile_column(dataset, i)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let attributes: Vec<AttributeProfile> = (0..dataset.paths.len()).map(|i| profile_column(dataset, i)).collect();
    let relationships = profile_relationships(dataset, &attributes);
    DataProfile { rows: dataset.len(), attributes, relationships }
}

/// Nesting relationships come from path structure; foreign keys are exact
/// inclusion dependencies into a column whose values are all distinct.
fn profile_relationships(dataset: &Dataset, attrs: &[AttributeProfile]) -> Vec<RelationshipProfile> {
    let mut out = Vec::new();
    let rows = dataset.len().max(1) as f64;
    let parents: BTreeSet<AttributePath> = dataset.paths.iter().filter_map(|p| p.parent()).collect();
    for parent in parents {
        let children: Vec<usize> =
            (0..dataset.paths.len()).filter(|&i| dataset.paths[i].parent().as_ref() == Some(&parent)).collect();
        let present = dataset.rows.iter().filter(|r| children.iter().any(|&c| r[c].is_some())).count();
        let mut type_counts = BTreeMap::new();
        for &c in &children {
            for v in dataset.column(c) {
                *type_counts.entry(format!("{:?}", v.kind()).to_lowercase()).or_insert(0) += 1;
            }
        }
        out.push(RelationshipProfile {
            relationship: Relationship { kind: RelationshipKind::Nesting, from: parent.clone(), to: parent },
            frequency: present as f64 / rows,
            type_counts,
        });
    }
    let key_columns: Vec<usize> = attrs
        .iter()
        .enumerate()
        .filter(|(_, a)| a.null_count == 0 && a.count > 1 && a.distinct_count == a.count)
        .map(|(i, _)| i)
        .collect();
    for &to in &key_columns {
        let targets: HashSet<String> = dataset.column(to).map(|v| v.render().into_owned()).collect();
        for (from, a) in attrs.iter().enumerate() {
            if from == to || a.count - a.null_count == 0 {
                continue;
            }
            let values: Vec<String> = dataset
                .column(from)
                .filter(|v| !v.is_null())
                .map(|v| v.render().into_owned())
                .collect();
            if values.iter().all(|v| targets.contains(v)) && values.iter().any(|v| !v.is_empty()) {
                // A column included in another key column that is itself a key is
                // a renamed copy rather than a reference.
                if a.distinct_count == a.count {
                    continue;
                }
                let mut type_counts = BTreeMap::new();
                type_counts.insert("resolved".to_string(), values.len());
                out.push(RelationshipProfile {
                    relationship: Relationship {
                        kind: RelationshipKind::ForeignKey,
                        from: dataset.paths[from].clone(),
                        to: dataset.paths[to].clone(),
                    },
                    frequency: values.len() as f64 / rows,
                    type_counts,
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DataModel;
    use proptest::prelude::*;

    fn one_column(values: Vec<Value>) -> Dataset {
        Dataset {
            model: DataModel::Relational,
            paths: vec![AttributePath::key("c")],
            rows: values.into_iter().map(|v| vec![Some(v)]).collect(),
        }
    }

    #[test]
    fn empty_dataset_yields_zeroes() {
        let p = profile_attributes(&Dataset::new(DataModel::Relational, vec![AttributePath::key("c")]));
        assert_eq!(p.rows, 0);
        let a = &p.attributes[0];
        assert_eq!((a.count, a.null_count, a.distinct_count), (0, 0, 0));
        assert_eq!(a.length, Summary::default());
        assert_eq!(a.null_rate, 0.0);
    }

    #[test]
    fn length_statistics_over_non_null_values() {
        let p = profile_attributes(&one_column(vec![Value::text("ab"), Value::text("abcd"), Value::Null]));
        let a = &p.attributes[0];
        assert_eq!(a.length, Summary { min: 2.0, mean: 3.0, max: 4.0 });
        assert!((a.null_rate - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(a.distinct_count, 2);
    }

    #[test]
    fn whitespace_token_count() {
        let p = profile_attributes(&one_column(vec![Value::text("John Smith")]));
        assert_eq!(p.attributes[0].tokens.max, 2.0);
    }

    #[test]
    fn inclusion_into_a_key_is_a_foreign_key() {
        let ds = Dataset {
            model: DataModel::Relational,
            paths: vec![AttributePath::key("id"), AttributePath::key("manager")],
            rows: vec![
                vec![Some(Value::text("a")), Some(Value::text("b"))],
                vec![Some(Value::text("b")), Some(Value::Null)],
                vec![Some(Value::text("c")), Some(Value::text("b"))],
            ],
        };
        let p = profile_attributes(&ds);
        assert_eq!(p.relationships.len(), 1);
        assert_eq!(p.relationships[0].relationship.kind, RelationshipKind::ForeignKey);
        assert_eq!(p.relationships[0].relationship.from, AttributePath::key("manager"));
    }

    proptest! {
        #[test]
        fn profile_is_row_order_invariant(values in proptest::collection::vec("[a-c ]{0,5}", 0..40), seed in any::<u64>()) {
            let ds = one_column(values.iter().map(|s| if s.is_empty() { Value::Null } else { Value::text(s.clone()) }).collect());
            let mut shuffled = ds.clone();
            let n = shuffled.rows.len();
            let mut state = seed;
            for i in (1..n).rev() {
                state = crate::rng::mix64(state);
                shuffled.rows.swap(i, (state % (i as u64 + 1)) as usize);
            }
            prop_assert_eq!(profile_attributes(&ds), profile_attributes(&shuffled));
        }
    }
}
