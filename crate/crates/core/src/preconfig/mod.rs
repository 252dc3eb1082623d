//! Preconfiguration: expand a handful of high-level parameters into a complete
//! generation config (source profile histories, copying history and
//! integration profiles) and measure pollution at runtime.

mod hierarchy;
mod mapping;
mod measure;

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

pub use hierarchy::{
    applicable_classes, default_class_weights, default_hierarchy, expand_pollution_hierarchy, source_node_name,
    ClassWeights, HierarchyError, LeafProbabilities, Level, PollutionNode,
};
pub use mapping::{map_paths, map_record, FlatRecord, MappingStep};
pub use measure::{
    adapt_parameters, adaptation_factor, cells_differ, measure_pollution, MeasureError, PollutionTally, ADAPT_MAX,
    ADAPT_MIN,
};

use crate::formats::{detect, FormatFamily, FormatId};
use crate::model::{
    AttributePath, DataModel, EnrichedSchema, EntityId, ErrorKind, SemanticLabel, SourceId, Timestamp, Value,
    ValueKind,
};
use crate::preparation::Split;
use crate::profiling::DataProfile;
use crate::rng::{mix64, stream, tag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Cleaning,
    Integration,
    Linkage,
}

impl ScenarioKind {
    pub fn default_heterogeneity(self) -> f64 {
        match self {
            ScenarioKind::Cleaning => 0.0,
            ScenarioKind::Integration => 0.5,
            ScenarioKind::Linkage => 0.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HighLevelParams {
    pub scenario: ScenarioKind,
    pub sources: usize,
    pub pollution: f64,
    pub duplicates: f64,
    pub volume_factor: f64,
    pub copy_intensity: f64,
    pub heterogeneity: f64,
    pub horizon: Timestamp,
    pub seed: u64,
}

impl HighLevelParams {
    pub fn new(scenario: ScenarioKind, sources: usize, seed: u64) -> Self {
        HighLevelParams {
            scenario,
            sources,
            pollution: 0.1,
            duplicates: 0.1,
            volume_factor: 1.0,
            copy_intensity: 0.5,
            heterogeneity: scenario.default_heterogeneity(),
            horizon: Timestamp(1000),
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(ConfigError::Infeasible(format!("{name} = {v} outside [0, 1]")))
            }
        };
        unit("pollution", self.pollution)?;
        unit("copy intensity", self.copy_intensity)?;
        unit("heterogeneity", self.heterogeneity)?;
        if !(0.0..1.0).contains(&self.duplicates) {
            return Err(ConfigError::Infeasible(format!("duplicate rate {} outside [0, 1)", self.duplicates)));
        }
        if !self.volume_factor.is_finite() || self.volume_factor <= 0.0 {
            return Err(ConfigError::Infeasible(format!("volume factor {} must be positive", self.volume_factor)));
        }
        if self.sources == 0 || self.sources > MAX_SOURCES {
            return Err(ConfigError::Infeasible(format!("source count {} outside 1..={MAX_SOURCES}", self.sources)));
        }
        if self.scenario == ScenarioKind::Cleaning && self.sources != 1 {
            return Err(ConfigError::Infeasible("a cleaning scenario has exactly one source".into()));
        }
        Ok(())
    }
}

/// Record ids reserve eight bits for the source.
pub const MAX_SOURCES: usize = 255;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("infeasible configuration: {0}")]
    Infeasible(String),
    #[error(transparent)]
    Hierarchy(#[from] HierarchyError),
    #[error("configuration references unknown path `{0}`")]
    UnknownPath(AttributePath),
    #[error("configuration references unknown source {0:?}")]
    UnknownSource(SourceId),
    #[error("copy graph has a cycle at t{0}")]
    CyclicCopies(u64),
    #[error("profile periods of source {0:?} do not partition the timeline")]
    Periods(SourceId),
}

/// Which part of the world a source covers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Scope {
    All,
    /// Entities whose hash bucket lies in `from, from + 1, ..` (`count`
    /// buckets, wrapping).
    HashBucket { buckets: u32, from: u32, count: u32 },
    /// Entities whose value at `path` lies in `[min, max]`.
    AttributeRange { path: AttributePath, min: Option<Value>, max: Option<Value> },
}

impl Scope {
    pub fn contains(&self, entity: EntityId, value_of: impl Fn(&AttributePath) -> Option<Value>) -> bool {
        match self {
            Scope::All => true,
            Scope::HashBucket { buckets, from, count } => {
                let b = (mix64(entity.0 ^ tag::SCOPE) % u64::from((*buckets).max(1))) as u32;
                (b + buckets - from % buckets) % buckets < *count
            }
            Scope::AttributeRange { path, min, max } => match value_of(path) {
                None => false,
                Some(v) if v.is_null() => false,
                Some(v) => min.as_ref().is_none_or(|m| &v >= m) && max.as_ref().is_none_or(|m| &v <= m),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepresentationProfile {
    pub model: DataModel,
    pub mapping: Vec<MappingStep>,
    pub scope: Scope,
}

/// How the outdated rate is realized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutdatedMode {
    /// The source ignores a world update or delete with this probability.
    Missed,
    /// Each written cell is replaced by a random past version with this
    /// probability.
    Lookup,
}

/// A persistent faulty component that corrupts writes to some paths while it
/// is active.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorSourceComponent {
    pub id: u32,
    pub paths: Vec<AttributePath>,
    pub class: ErrorKind,
    pub rate: f64,
    pub active_from: Timestamp,
    pub active_to: Timestamp,
}

impl ErrorSourceComponent {
    pub fn is_active(&self, t: Timestamp) -> bool {
        self.active_from <= t && t < self.active_to
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorProfile {
    /// Degree of pollution the runtime adaptation steers towards.
    pub target_degree: f64,
    pub duplicate_rate: f64,
    /// Probability of each further extra record once a duplicate is made.
    pub duplicate_continuation: f64,
    /// Per path, the probability of each applicable class per written cell.
    /// Classes absent from a path's map are masked for that path.
    pub class_probs: BTreeMap<AttributePath, BTreeMap<ErrorKind, f64>>,
    pub outdated_rate: f64,
    pub outdated_mode: OutdatedMode,
    /// Per-cell error probability of each maintenance sweep.
    pub maintenance_rate: f64,
    #[serde(default)]
    pub components: Vec<ErrorSourceComponent>,
}

impl ErrorProfile {
    pub fn clean() -> Self {
        ErrorProfile {
            target_degree: 0.0,
            duplicate_rate: 0.0,
            duplicate_continuation: 0.3,
            class_probs: BTreeMap::new(),
            outdated_rate: 0.0,
            outdated_mode: OutdatedMode::Missed,
            maintenance_rate: 0.0,
            components: Vec::new(),
        }
    }

    pub fn miss_rate(&self) -> f64 {
        match self.outdated_mode {
            OutdatedMode::Missed => self.outdated_rate,
            OutdatedMode::Lookup => 0.0,
        }
    }

    /// Multiplies every error probability, clamping each to 1. Duplicate
    /// rates are not pollution and stay unchanged.
    pub fn scale(&mut self, factor: f64) {
        let s = |p: &mut f64| *p = (*p * factor).clamp(0.0, 1.0);
        for classes in self.class_probs.values_mut() {
            classes.values_mut().for_each(s);
        }
        s(&mut self.outdated_rate);
        s(&mut self.maintenance_rate);
        self.components.iter_mut().for_each(|c| s(&mut c.rate));
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceProfile {
    pub representation: RepresentationProfile,
    pub errors: ErrorProfile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfilePeriod {
    pub profile: SourceProfile,
    pub valid_from: Timestamp,
    /// `None` for the last period, which stays valid through the horizon.
    pub valid_to: Option<Timestamp>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceConfig {
    pub id: SourceId,
    pub name: String,
    pub periods: Vec<ProfilePeriod>,
}

impl SourceConfig {
    pub fn period_at(&self, t: Timestamp) -> usize {
        self.periods.partition_point(|p| p.valid_from <= t).saturating_sub(1)
    }

    pub fn profile_at(&self, t: Timestamp) -> &SourceProfile {
        &self.periods[self.period_at(t)].profile
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CopyTriggerKind {
    Periodic { interval: u64 },
    OnChange,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CopySpec {
    pub from: SourceId,
    pub to: SourceId,
    pub valid_from: Timestamp,
    pub valid_to: Timestamp,
    pub trigger: CopyTriggerKind,
    /// Paths that are copied; other cells of a copied record stay null.
    pub scope: Vec<AttributePath>,
    /// Value-level steps only.
    pub transform: Vec<MappingStep>,
    pub transform_error_rate: f64,
}

impl CopySpec {
    pub fn is_active(&self, t: Timestamp) -> bool {
        self.valid_from <= t && t < self.valid_to
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegrationProfile {
    pub name: String,
    pub target: Vec<AttributePath>,
    /// Steps from each source's canonical records into the target schema.
    pub mappings: BTreeMap<SourceId, Vec<MappingStep>>,
    pub mapping_error_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryParams {
    pub horizon: Timestamp,
    pub volume_factor: f64,
    pub max_retries: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptationParams {
    pub enabled: bool,
    /// Simulate the first batch once without output to calibrate.
    pub pilot: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationConfig {
    pub seed: u64,
    pub params: HighLevelParams,
    pub hierarchy: PollutionNode,
    pub sources: Vec<SourceConfig>,
    pub copying: Vec<CopySpec>,
    pub integration: Vec<IntegrationProfile>,
    pub history: HistoryParams,
    pub adaptation: AdaptationParams,
    pub maintenance_interval: u64,
    /// Split groups of the prepared schema; merge and split errors move
    /// values between parts of one group.
    pub splits: Vec<Split>,
}

impl GenerationConfig {
    pub fn source(&self, id: SourceId) -> Option<&SourceConfig> {
        self.sources.iter().find(|s| s.id == id)
    }

    /// Checks source ids, referenced paths, period partitioning and copy-graph acyclicity.
    pub fn validate(&self, schema: &EnrichedSchema) -> Result<(), ConfigError> {
        self.params.validate()?;
        let ids: BTreeSet<SourceId> = self.sources.iter().map(|s| s.id).collect();
        if ids.is_empty() {
            return Err(ConfigError::Infeasible("no sources".into()));
        }
        if ids.len() != self.sources.len() {
            return Err(ConfigError::Infeasible("duplicate source ids".into()));
        }
        let known = |p: &AttributePath| schema.schema.attribute(p).is_some();
        for s in &self.sources {
            let ok = !s.periods.is_empty()
                && s.periods[0].valid_from == Timestamp::ZERO
                && s.periods.windows(2).all(|w| w[0].valid_to == Some(w[1].valid_from) && w[0].valid_from < w[1].valid_from)
                && s.periods.last().is_some_and(|p| p.valid_to.is_none());
            if !ok {
                return Err(ConfigError::Periods(s.id));
            }
            for p in &s.periods {
                for path in p.profile.errors.class_probs.keys() {
                    if !known(path) {
                        return Err(ConfigError::UnknownPath(path.clone()));
                    }
                }
            }
        }
        for c in &self.copying {
            for id in [c.from, c.to] {
                if !ids.contains(&id) {
                    return Err(ConfigError::UnknownSource(id));
                }
            }
            if let Some(p) = c.scope.iter().find(|p| !known(p)) {
                return Err(ConfigError::UnknownPath(p.clone()));
            }
        }
        let mut instants: BTreeSet<Timestamp> = self.copying.iter().map(|c| c.valid_from).collect();
        instants.insert(Timestamp::ZERO);
        for t in instants {
            if !is_acyclic(self.copying.iter().filter(|c| c.is_active(t)).map(|c| (c.from, c.to))) {
                return Err(ConfigError::CyclicCopies(t.0));
            }
        }
        Ok(())
    }
}

/// Kahn's algorithm over the given edges.
pub fn is_acyclic(edges: impl Iterator<Item = (SourceId, SourceId)>) -> bool {
    let edges: Vec<(SourceId, SourceId)> = edges.collect();
    if edges.iter().any(|(a, b)| a == b) {
        return false;
    }
    let nodes: BTreeSet<SourceId> = edges.iter().flat_map(|(a, b)| [*a, *b]).collect();
    let mut indeg: BTreeMap<SourceId, usize> = nodes.iter().map(|n| (*n, 0)).collect();
    for (_, b) in &edges {
        *indeg.get_mut(b).unwrap() += 1;
    }
    let mut ready: Vec<SourceId> = indeg.iter().filter(|(_, d)| **d == 0).map(|(n, _)| *n).collect();
    let mut seen = 0;
    while let Some(n) = ready.pop() {
        seen += 1;
        for (_, b) in edges.iter().filter(|(a, _)| *a == n) {
            let d = indeg.get_mut(b).unwrap();
            *d -= 1;
            if *d == 0 {
                ready.push(*b);
            }
        }
    }
    seen == nodes.len()
}

fn synonym(leaf: &str) -> String {
    let s = match leaf {
        "email" => "mail",
        "mail" => "email",
        "phone" => "telephone",
        "zip" => "postal_code",
        "city" => "town",
        "street" => "address_line",
        "birth_date" => "dob",
        "salary" => "income",
        "name" => "full_name",
        "id" => "identifier",
        "name_1" => "last_name",
        "name_2" => "first_name",
        _ => return format!("{leaf}_alt"),
    };
    s.to_string()
}

/// The most common format of a column, if at least 90% of its sample has it.
fn column_format(profile: &DataProfile, path: &AttributePath) -> Option<FormatId> {
    let a = profile.attribute(path)?;
    let mut counts: BTreeMap<FormatId, usize> = BTreeMap::new();
    for v in &a.sample {
        if let Some(f) = detect(v) {
            *counts.entry(f).or_default() += 1;
        }
    }
    let (f, c) = counts.into_iter().max_by_key(|(f, c)| (*c, std::cmp::Reverse(*f)))?;
    (c * 10 >= a.sample.len() * 9 && f.family() != FormatFamily::Decimal).then_some(f)
}

/// Candidate heterogeneity steps, in the order they are applied.
#[derive(Debug, Clone)]
enum CatalogEntry {
    Merge(Split),
    Format(AttributePath, FormatId),
    Rename(AttributePath),
    NestAddress(Vec<AttributePath>),
}

fn catalog(schema: &EnrichedSchema, profile: &DataProfile, splits: &[Split]) -> Vec<CatalogEntry> {
    let paths = schema.schema.paths();
    let mut out = Vec::new();
    let split_parts: BTreeSet<&AttributePath> = splits.iter().flat_map(|s| s.parts.iter()).collect();
    for s in splits {
        if s.parts.iter().all(|p| paths.contains(p)) && s.parts.iter().all(|p| p.parent() == s.original.parent()) {
            out.push(CatalogEntry::Merge(s.clone()));
        }
    }
    for p in &paths {
        let label = schema.semantic_label(p);
        if matches!(label, SemanticLabel::Date | SemanticLabel::Phone) {
            if let Some(f) = column_format(profile, p) {
                out.push(CatalogEntry::Format(p.clone(), f));
            }
        }
    }
    for p in paths.iter().filter(|p| !split_parts.contains(p) && p.segments().len() == 1).take(3) {
        out.push(CatalogEntry::Rename(p.clone()));
    }
    let address: Vec<AttributePath> = paths
        .iter()
        .filter(|p| schema.semantic_label(p) == SemanticLabel::AddressPart && p.segments().len() == 1)
        .cloned()
        .collect();
    if address.len() >= 2 {
        out.push(CatalogEntry::NestAddress(address));
    }
    out
}

fn other_format(from: FormatId, pick: usize) -> FormatId {
    let options: Vec<FormatId> = from
        .family()
        .members()
        .into_iter()
        .filter(|f| *f != from && *f != FormatId::PhoneCompact && *f != FormatId::DateCompact)
        .collect();
    options[pick % options.len()]
}

/// Builds the mapping of the selected catalog entries, tracking renamed paths
/// so later steps refer to current names.
fn build_mapping(entries: &[CatalogEntry], selected: &[usize], base: &[AttributePath], pick: usize) -> Vec<MappingStep> {
    let mut steps: Vec<MappingStep> = Vec::new();
    let mut sel = selected.to_vec();
    sel.sort_unstable();
    for &i in &sel {
        let current = |p: &AttributePath| -> Option<AttributePath> {
            let idx = base.iter().position(|b| b == p)?;
            map_paths(&steps, base).get(idx).cloned().filter(|_| map_paths(&steps, base).len() == base.len())
        };
        match &entries[i] {
            CatalogEntry::Merge(s) => steps.push(MappingStep::Merge {
                parts: s.parts.clone(),
                into: s.original.clone(),
                separator: s.separator.clone(),
            }),
            CatalogEntry::Format(p, from) => {
                let path = map_paths(&steps, std::slice::from_ref(p))[0].clone();
                steps.push(MappingStep::FormatConvention { path, from: *from, to: other_format(*from, pick) });
            }
            CatalogEntry::Rename(p) => {
                let from = map_paths(&steps, std::slice::from_ref(p))[0].clone();
                let to = from.with_leaf_name(synonym(from.leaf_name()));
                if current(p).is_some() || !base.contains(&to) {
                    steps.push(MappingStep::Rename { from, to });
                }
            }
            CatalogEntry::NestAddress(paths) => {
                let mapped = map_paths(&steps, paths);
                steps.push(MappingStep::Nest { paths: mapped, under: "address".into() });
            }
        }
    }
    steps
}

fn choose_steps(entries: &[CatalogEntry], count: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut order: Vec<usize> = (0..entries.len()).collect();
    order.shuffle(rng);
    order.truncate(count.min(entries.len()));
    order
}

fn period_bounds(horizon: u64, periods: usize, rng: &mut impl Rng) -> Vec<Timestamp> {
    let k = if horizon < periods as u64 * 2 { 1 } else { periods };
    let mut out = vec![Timestamp::ZERO];
    let step = horizon / k as u64;
    for j in 1..k as u64 {
        let jitter = (step / 10).max(1);
        let t = j * step + rng.random_range(0..jitter);
        if t > out.last().unwrap().0 && t < horizon {
            out.push(Timestamp(t));
        }
    }
    out
}

/// Derives a full configuration. Pure in its inputs.
pub fn derive_preconfiguration(
    schema: &EnrichedSchema,
    profile: &DataProfile,
    splits: &[Split],
    params: &HighLevelParams,
) -> Result<GenerationConfig, ConfigError> {
    derive_with_weights(schema, profile, splits, params, &default_class_weights())
}

pub fn derive_with_weights(
    schema: &EnrichedSchema,
    profile: &DataProfile,
    splits: &[Split],
    params: &HighLevelParams,
    weights: &ClassWeights,
) -> Result<GenerationConfig, ConfigError> {
    params.validate()?;
    let h = params.heterogeneity;
    let degree = params.pollution;
    let horizon = params.horizon.0;
    let ids: Vec<SourceId> = (0..params.sources as u64).map(SourceId).collect();
    let hierarchy = default_hierarchy(degree, &ids, schema);
    let leaves = expand_pollution_hierarchy(&hierarchy, schema, weights)?;
    let entries = catalog(schema, profile, splits);
    let base_paths = schema.schema.paths();
    let text_paths: Vec<AttributePath> = schema
        .schema
        .attributes
        .iter()
        .filter(|a| a.kind == ValueKind::Text)
        .map(|a| a.path.clone())
        .collect();

    let mut sources = Vec::new();
    for &id in &ids {
        let mut rng = stream(params.seed, &[tag::PRECONFIG, 1, id.0]);
        let class_probs: BTreeMap<AttributePath, BTreeMap<ErrorKind, f64>> =
            leaves.iter().filter(|((s, _, _), _)| *s == id).fold(BTreeMap::new(), |mut m, ((_, p, c), v)| {
                m.entry(p.clone()).or_insert_with(BTreeMap::new).insert(*c, *v);
                m
            });
        let model = if params.scenario == ScenarioKind::Linkage && h >= 0.5 && id.0 % 2 == 1 {
            match schema.schema.model {
                DataModel::Relational => DataModel::Document,
                DataModel::Document => DataModel::Relational,
            }
        } else {
            schema.schema.model
        };
        let base_scope = if params.sources == 1 {
            Scope::All
        } else {
            Scope::HashBucket { buckets: 10, from: (id.0 as u32 * 3) % 10, count: 7 }
        };
        let step_count = (h * entries.len() as f64).round() as usize;
        let mut selected = choose_steps(&entries, step_count, &mut rng);
        let pick = rng.random_range(0..4usize);
        let components = match text_paths.is_empty() || degree <= 0.0 || h <= 0.0 {
            true => Vec::new(),
            false => {
                let path = text_paths[rng.random_range(0..text_paths.len())].clone();
                let start = rng.random_range(0..horizon.max(1));
                vec![ErrorSourceComponent {
                    id: 0,
                    paths: vec![path],
                    class: ErrorKind::Typo,
                    rate: (degree * 0.5).min(1.0),
                    active_from: Timestamp(start),
                    active_to: Timestamp((start + horizon / 5).min(horizon).max(start + 1)),
                }]
            }
        };
        let errors = ErrorProfile {
            target_degree: degree,
            duplicate_rate: params.duplicates,
            duplicate_continuation: 0.3,
            class_probs,
            outdated_rate: degree * 0.1,
            outdated_mode: OutdatedMode::Missed,
            maintenance_rate: degree * 0.02,
            components,
        };
        let bounds = period_bounds(horizon, 1 + (h * 2.0).floor() as usize, &mut rng);
        let mut periods: Vec<ProfilePeriod> = Vec::new();
        for (j, &from) in bounds.iter().enumerate() {
            let mut errors = errors.clone();
            let mut scope = base_scope.clone();
            if j > 0 {
                // Later periods fix some errors and introduce others.
                for classes in errors.class_probs.values_mut() {
                    for p in classes.values_mut() {
                        *p = (*p * rng.random_range(1.0 - 0.5 * h..=1.0 + 0.5 * h)).clamp(0.0, 1.0);
                    }
                }
                if let Some(extra) = (0..entries.len()).find(|i| !selected.contains(i)) {
                    selected.push(extra);
                }
                if let Scope::HashBucket { count, .. } = &mut scope {
                    *count = if j % 2 == 1 { 6 } else { 8 };
                }
            }
            periods.push(ProfilePeriod {
                profile: SourceProfile {
                    representation: RepresentationProfile {
                        model,
                        mapping: build_mapping(&entries, &selected, &base_paths, pick),
                        scope,
                    },
                    errors,
                },
                valid_from: from,
                valid_to: bounds.get(j + 1).copied(),
            });
        }
        sources.push(SourceConfig { id, name: source_node_name(id), periods });
    }

    let mut copying = Vec::new();
    if params.copy_intensity > 0.0 {
        let mut rng = stream(params.seed, &[tag::PRECONFIG, 2]);
        // Edges only run from lower to higher ids, so the graph is acyclic.
        for i in 0..ids.len() {
            for j in i + 1..ids.len() {
                if rng.random::<f64>() >= params.copy_intensity {
                    continue;
                }
                let start = rng.random_range(0..=horizon / 2);
                let end = (start + horizon / 2 + rng.random_range(0..=horizon / 2)).min(horizon + 1);
                let trigger = if rng.random::<bool>() {
                    CopyTriggerKind::Periodic { interval: (horizon / 20).max(1) }
                } else {
                    CopyTriggerKind::OnChange
                };
                let scope: Vec<AttributePath> = if rng.random::<bool>() {
                    base_paths.clone()
                } else {
                    let mut s: Vec<AttributePath> =
                        base_paths.iter().filter(|_| rng.random::<f64>() < 0.7).cloned().collect();
                    if s.is_empty() {
                        s.push(base_paths[0].clone());
                    }
                    s
                };
                let transform = if h > 0.0 {
                    entries
                        .iter()
                        .filter_map(|e| match e {
                            CatalogEntry::Format(p, f) if scope.contains(p) => Some(MappingStep::FormatConvention {
                                path: p.clone(),
                                from: *f,
                                to: other_format(*f, i + j),
                            }),
                            _ => None,
                        })
                        .take(1)
                        .collect()
                } else {
                    Vec::new()
                };
                copying.push(CopySpec {
                    from: ids[i],
                    to: ids[j],
                    valid_from: Timestamp(start),
                    valid_to: Timestamp(end.max(start + 1)),
                    trigger,
                    scope,
                    transform,
                    transform_error_rate: degree * 0.25,
                });
            }
        }
    }

    let mut integration = Vec::new();
    if params.scenario == ScenarioKind::Integration {
        let targets = if h >= 0.5 { 2 } else { 1 };
        for t in 0..targets {
            let mut rng = stream(params.seed, &[tag::PRECONFIG, 3, t as u64]);
            let structural: Vec<CatalogEntry> =
                entries.iter().filter(|e| !matches!(e, CatalogEntry::Format(..))).cloned().collect();
            let count = ((h * structural.len() as f64) / 2.0).round() as usize + t;
            let selected = choose_steps(&structural, count, &mut rng);
            let target_steps = build_mapping(&structural, &selected, &base_paths, t);
            let mappings = sources
                .iter()
                .map(|s| {
                    let last = &s.periods.last().expect("one period").profile.representation.mapping;
                    let mut steps: Vec<MappingStep> = last
                        .iter()
                        .filter(|m| m.is_value_level())
                        .map(|m| match m {
                            // Source formats survive integration; paths are canonical here.
                            MappingStep::FormatConvention { path, from, to } => {
                                let canonical = base_paths
                                    .iter()
                                    .find(|b| map_paths(last, std::slice::from_ref(b)).first() == Some(path))
                                    .cloned()
                                    .unwrap_or_else(|| path.clone());
                                MappingStep::FormatConvention { path: canonical, from: *from, to: *to }
                            }
                            other => other.clone(),
                        })
                        .collect();
                    steps.extend(target_steps.iter().cloned());
                    (s.id, steps)
                })
                .collect();
            integration.push(IntegrationProfile {
                name: format!("target-{t}"),
                target: map_paths(&target_steps, &base_paths),
                mappings,
                mapping_error_rate: degree * 0.25,
            });
        }
    }

    let config = GenerationConfig {
        seed: params.seed,
        params: params.clone(),
        hierarchy,
        sources,
        copying,
        integration,
        history: HistoryParams { horizon: params.horizon, volume_factor: params.volume_factor, max_retries: 10 },
        adaptation: AdaptationParams { enabled: true, pilot: true },
        maintenance_interval: (horizon / 10).max(1),
        splits: splits.to_vec(),
    };
    config.validate(schema)?;
    Ok(config)
}

#[cfg(test)]
mod tests;
