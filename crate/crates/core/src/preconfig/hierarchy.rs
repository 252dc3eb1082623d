//! The parameter hierarchy: dataset, source, table, attribute and error-class
//! levels. A node without a budget inherits its parent's; a leaf's
//! probability is its budget times the normalized weight of its class.

use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};

use crate::model::{
    AttributePath, EnrichedSchema, ErrorKind, RelationshipKind, SemanticLabel, SourceId, ValueKind,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Dataset,
    Source,
    Table,
    Attribute,
    ErrorClass,
}

impl Level {
    fn next(self) -> Option<Level> {
        match self {
            Level::Dataset => Some(Level::Source),
            Level::Source => Some(Level::Table),
            Level::Table => Some(Level::Attribute),
            Level::Attribute => Some(Level::ErrorClass),
            Level::ErrorClass => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PollutionNode {
    pub name: String,
    pub level: Level,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<PollutionNode>,
}

impl PollutionNode {
    pub fn new(name: impl Into<String>, level: Level, budget: Option<f64>) -> Self {
        PollutionNode { name: name.into(), level, budget, children: Vec::new() }
    }

    pub fn with_children(mut self, children: Vec<PollutionNode>) -> Self {
        self.children = children;
        self
    }
}

/// Per semantic label, the relative weight of each error class.
pub type ClassWeights = BTreeMap<SemanticLabel, BTreeMap<ErrorKind, f64>>;

static DEFAULT_WEIGHTS: LazyLock<ClassWeights> = LazyLock::new(|| {
    serde_json::from_str(include_str!("../../data/class_weights.json")).expect("bundled class weights parse")
});

pub fn default_class_weights() -> ClassWeights {
    DEFAULT_WEIGHTS.clone()
}

pub type LeafProbabilities = BTreeMap<(SourceId, AttributePath, ErrorKind), f64>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HierarchyError {
    #[error("unknown attribute path `{0}`")]
    UnknownPath(String),
    #[error("unknown error class `{0}`")]
    UnknownErrorClass(String),
    #[error("node `{name}` at level {found:?} where {expected:?} was expected")]
    InvalidLevel { name: String, expected: Level, found: Level },
    #[error("source node name `{0}` is not of the form s<number>")]
    InvalidSource(String),
    #[error("budget {0} outside [0, 1]")]
    InvalidBudget(f64),
}

pub fn source_node_name(id: SourceId) -> String {
    format!("s{}", id.0)
}

fn parse_source(name: &str) -> Result<SourceId, HierarchyError> {
    name.strip_prefix('s')
        .and_then(|n| n.parse().ok())
        .map(SourceId)
        .ok_or_else(|| HierarchyError::InvalidSource(name.to_string()))
}

/// Error classes that can affect an attribute given its value kind and role.
pub fn applicable_classes(schema: &EnrichedSchema, path: &AttributePath) -> BTreeSet<ErrorKind> {
    use ErrorKind::*;
    let Some(def) = schema.schema.attribute(path) else { return BTreeSet::new() };
    let label = schema.semantic_label(path);
    let text_paths = schema.schema.attributes.iter().filter(|a| a.kind == ValueKind::Text).count();
    let mut out = BTreeSet::from([Missing, Outdated]);
    match def.kind {
        ValueKind::Text => {
            out.extend([Typo, Phonetic]);
            if matches!(label, SemanticLabel::Date | SemanticLabel::Phone) {
                out.insert(Format);
            }
            if text_paths >= 2 {
                out.extend([Swap, Merge, Split]);
            }
        }
        ValueKind::Number => {
            out.extend([Typo, Format]);
        }
        ValueKind::List => {
            out.insert(ListOrder);
        }
        _ => {}
    }
    let is_reference = schema
        .schema
        .relationships
        .iter()
        .any(|r| r.kind == RelationshipKind::ForeignKey && &r.from == path);
    if is_reference {
        out.insert(WrongReference);
    }
    out
}

/// Normalized class weights of one attribute over `classes`. Falls back to
/// `missing` when no class has positive weight.
fn normalized(weights: &BTreeMap<ErrorKind, f64>, classes: &BTreeSet<ErrorKind>) -> BTreeMap<ErrorKind, f64> {
    let total: f64 = classes.iter().map(|c| weights.get(c).copied().unwrap_or(0.0)).sum();
    if total <= 0.0 {
        return BTreeMap::from([(ErrorKind::Missing, 1.0)]);
    }
    classes
        .iter()
        .filter_map(|c| {
            let w = weights.get(c).copied().unwrap_or(0.0);
            (w > 0.0).then(|| (*c, w / total))
        })
        .collect()
}

fn budget_of(node: &PollutionNode, inherited: f64) -> Result<f64, HierarchyError> {
    match node.budget {
        Some(b) if !(0.0..=1.0).contains(&b) => Err(HierarchyError::InvalidBudget(b)),
        Some(b) => Ok(b),
        None => Ok(inherited),
    }
}

fn check_children(node: &PollutionNode) -> Result<(), HierarchyError> {
    let expected = node.level.next();
    for c in &node.children {
        if Some(c.level) != expected {
            return Err(HierarchyError::InvalidLevel {
                name: c.name.clone(),
                expected: expected.unwrap_or(Level::ErrorClass),
                found: c.level,
            });
        }
    }
    Ok(())
}

/// Expands the tree into one probability per (source, attribute, class).
/// Subtrees that stop above the error-class level expand over every schema
/// attribute and every applicable class.
pub fn expand_pollution_hierarchy(
    tree: &PollutionNode,
    schema: &EnrichedSchema,
    weights: &ClassWeights,
) -> Result<LeafProbabilities, HierarchyError> {
    if tree.level != Level::Dataset {
        return Err(HierarchyError::InvalidLevel { name: tree.name.clone(), expected: Level::Dataset, found: tree.level });
    }
    check_children(tree)?;
    let root = budget_of(tree, 0.0)?;
    let mut out = LeafProbabilities::new();
    for source in &tree.children {
        let id = parse_source(&source.name)?;
        check_children(source)?;
        let source_budget = budget_of(source, root)?;
        if source.children.is_empty() {
            expand_tables(id, source_budget, &[], schema, weights, &mut out)?;
        }
        for table in &source.children {
            check_children(table)?;
            let b = budget_of(table, source_budget)?;
            expand_tables(id, b, &table.children, schema, weights, &mut out)?;
        }
    }
    Ok(out)
}

fn expand_tables(
    source: SourceId,
    budget: f64,
    attributes: &[PollutionNode],
    schema: &EnrichedSchema,
    weights: &ClassWeights,
    out: &mut LeafProbabilities,
) -> Result<(), HierarchyError> {
    let mut explicit: BTreeMap<AttributePath, &PollutionNode> = BTreeMap::new();
    for a in attributes {
        let path = AttributePath::from_str(&a.name).map_err(|_| HierarchyError::UnknownPath(a.name.clone()))?;
        if schema.schema.attribute(&path).is_none() {
            return Err(HierarchyError::UnknownPath(a.name.clone()));
        }
        check_children(a)?;
        explicit.insert(path, a);
    }
    for def in &schema.schema.attributes {
        let path = &def.path;
        let label = schema.semantic_label(path);
        let table = weights.get(&label).or_else(|| weights.get(&SemanticLabel::Unknown));
        let empty = BTreeMap::new();
        let table = table.unwrap_or(&empty);
        let (attr_budget, leaves) = match explicit.get(path) {
            Some(node) => (budget_of(node, budget)?, node.children.as_slice()),
            None => (budget, &[][..]),
        };
        if leaves.is_empty() {
            for (class, w) in normalized(table, &applicable_classes(schema, path)) {
                out.insert((source, path.clone(), class), attr_budget * w);
            }
            continue;
        }
        let mut classes = BTreeMap::new();
        for leaf in leaves {
            let class =
                ErrorKind::from_str(&leaf.name).map_err(|_| HierarchyError::UnknownErrorClass(leaf.name.clone()))?;
            classes.insert(class, budget_of(leaf, attr_budget)?);
        }
        let set: BTreeSet<ErrorKind> = classes.keys().copied().collect();
        for (class, w) in normalized(table, &set) {
            out.insert((source, path.clone(), class), classes.get(&class).copied().unwrap_or(attr_budget) * w);
        }
    }
    Ok(())
}

/// A tree with one budget at the root and one node per source and attribute.
pub fn default_hierarchy(degree: f64, sources: &[SourceId], schema: &EnrichedSchema) -> PollutionNode {
    let source_nodes = sources
        .iter()
        .map(|&s| {
            let attrs = schema
                .schema
                .attributes
                .iter()
                .map(|a| PollutionNode::new(a.path.to_string(), Level::Attribute, None))
                .collect();
            PollutionNode::new(source_node_name(s), Level::Source, None)
                .with_children(vec![PollutionNode::new("main", Level::Table, None).with_children(attrs)])
        })
        .collect();
    PollutionNode::new("dataset", Level::Dataset, Some(degree)).with_children(source_nodes)
}
