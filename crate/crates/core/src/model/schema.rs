use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{AttributePath, ValueKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataModel {
    Relational,
    Document,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SemanticLabel {
    PersonName,
    Email,
    Phone,
    Date,
    AddressPart,
    Identifier,
    NumericMeasure,
    FreeText,
    Unknown,
}

impl SemanticLabel {
    pub const ALL: [SemanticLabel; 9] = [
        SemanticLabel::PersonName,
        SemanticLabel::Email,
        SemanticLabel::Phone,
        SemanticLabel::Date,
        SemanticLabel::AddressPart,
        SemanticLabel::Identifier,
        SemanticLabel::NumericMeasure,
        SemanticLabel::FreeText,
        SemanticLabel::Unknown,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SemanticLabel::PersonName => "person-name",
            SemanticLabel::Email => "email",
            SemanticLabel::Phone => "phone",
            SemanticLabel::Date => "date",
            SemanticLabel::AddressPart => "address-part",
            SemanticLabel::Identifier => "identifier",
            SemanticLabel::NumericMeasure => "numeric-measure",
            SemanticLabel::FreeText => "free-text",
            SemanticLabel::Unknown => "unknown",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemanticType {
    pub label: SemanticLabel,
    pub confidence: f64,
}

impl SemanticType {
    pub const UNKNOWN: SemanticType = SemanticType { label: SemanticLabel::Unknown, confidence: 0.0 };
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeDef {
    pub path: AttributePath,
    pub semantic_type: SemanticLabel,
    pub kind: ValueKind,
    pub nullable: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelationshipKind {
    ForeignKey,
    Nesting,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Relationship {
    pub kind: RelationshipKind,
    pub from: AttributePath,
    pub to: AttributePath,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub model: DataModel,
    pub attributes: Vec<AttributeDef>,
    #[serde(default)]
    pub relationships: Vec<Relationship>,
}

impl Schema {
    pub fn paths(&self) -> Vec<AttributePath> {
        self.attributes.iter().map(|a| a.path.clone()).collect()
    }

    pub fn attribute(&self, path: &AttributePath) -> Option<&AttributeDef> {
        self.attributes.iter().find(|a| &a.path == path)
    }

    pub fn position(&self, path: &AttributePath) -> Option<usize> {
        self.attributes.iter().position(|a| &a.path == path)
    }

    /// Checks attribute uniqueness and that relationship endpoints exist.
    pub fn validate(&self) -> Result<(), SchemaError> {
        let mut seen = BTreeSet::new();
        for a in &self.attributes {
            if !seen.insert(&a.path) {
                return Err(SchemaError::DuplicateAttribute(a.path.clone()));
            }
        }
        for r in &self.relationships {
            for end in [&r.from, &r.to] {
                let known = seen.contains(end) || self.attributes.iter().any(|a| a.path.starts_with(end));
                if !known {
                    return Err(SchemaError::UnknownPath(end.clone()));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Constraint {
    Unique { paths: Vec<AttributePath> },
    FunctionalDependency { lhs: Vec<AttributePath>, rhs: Vec<AttributePath> },
    /// A key value, once held by an entity, is never held by a different entity.
    TemporalUnique { paths: Vec<AttributePath> },
}

impl Constraint {
    pub fn paths(&self) -> Vec<&AttributePath> {
        match self {
            Constraint::Unique { paths } | Constraint::TemporalUnique { paths } => paths.iter().collect(),
            Constraint::FunctionalDependency { lhs, rhs } => lhs.iter().chain(rhs.iter()).collect(),
        }
    }

    pub fn validate(&self) -> Result<(), SchemaError> {
        match self {
            Constraint::Unique { paths } | Constraint::TemporalUnique { paths } if paths.is_empty() => {
                Err(SchemaError::EmptyConstraint)
            }
            Constraint::FunctionalDependency { rhs, .. } if rhs.is_empty() => Err(SchemaError::EmptyConstraint),
            Constraint::FunctionalDependency { lhs, rhs } if lhs.iter().any(|p| rhs.contains(p)) => {
                Err(SchemaError::OverlappingDependency)
            }
            _ => Ok(()),
        }
    }
}

/// Distribution over the ways a value is updated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpdateKindDistribution {
    pub replace: f64,
    pub append: f64,
    pub correct: f64,
}

impl Default for UpdateKindDistribution {
    fn default() -> Self {
        UpdateKindDistribution { replace: 1.0, append: 0.0, correct: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathChange {
    /// Expected updates per entity per 1000 ticks.
    pub update_rate: f64,
    pub kinds: UpdateKindDistribution,
}

/// Co-update rule `antecedent -> consequent` mined over windows of update transactions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpdateRule {
    pub antecedent: BTreeSet<AttributePath>,
    pub consequent: BTreeSet<AttributePath>,
    pub window: usize,
    pub support: f64,
    pub confidence: f64,
}

/// Temporal characteristics of a dataset: how often and how values change, and
/// how often entities appear and disappear.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangeModel {
    pub paths: BTreeMap<AttributePath, PathChange>,
    /// Expected inserts per existing entity per 1000 ticks.
    pub insert_rate: f64,
    /// Expected deletes per entity per 1000 ticks.
    pub delete_rate: f64,
    #[serde(default)]
    pub rules: Vec<UpdateRule>,
}

impl ChangeModel {
    pub fn validate(&self) -> Result<(), SchemaError> {
        let rates_ok = self.insert_rate >= 0.0
            && self.delete_rate >= 0.0
            && self.paths.values().all(|p| p.update_rate >= 0.0);
        if !rates_ok {
            return Err(SchemaError::InvalidChangeModel("negative rate".into()));
        }
        for (path, change) in &self.paths {
            let k = change.kinds;
            let sum = k.replace + k.append + k.correct;
            if k.replace < 0.0 || k.append < 0.0 || k.correct < 0.0 || (sum - 1.0).abs() > 1e-9 {
                return Err(SchemaError::InvalidChangeModel(format!("update kinds of {path} must sum to 1")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnrichedSchema {
    pub schema: Schema,
    pub constraints: Vec<Constraint>,
    pub semantic_types: BTreeMap<AttributePath, SemanticType>,
    pub temporal: ChangeModel,
}

impl EnrichedSchema {
    pub fn semantic_label(&self, path: &AttributePath) -> SemanticLabel {
        self.semantic_types.get(path).map(|s| s.label).unwrap_or(SemanticLabel::Unknown)
    }

    pub fn validate(&self) -> Result<(), SchemaError> {
        self.schema.validate()?;
        for c in &self.constraints {
            c.validate()?;
            for p in c.paths() {
                if self.schema.attribute(p).is_none() {
                    return Err(SchemaError::UnknownPath(p.clone()));
                }
            }
        }
        self.temporal.validate()
    }
}

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum SchemaError {
    #[error("duplicate attribute `{0}`")]
    DuplicateAttribute(AttributePath),
    #[error("unknown attribute path `{0}`")]
    UnknownPath(AttributePath),
    #[error("constraint without paths")]
    EmptyConstraint,
    #[error("functional dependency with overlapping sides")]
    OverlappingDependency,
    #[error("invalid change model: {0}")]
    InvalidChangeModel(String),
}
