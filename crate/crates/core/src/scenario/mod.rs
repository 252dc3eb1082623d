//! Scenario assembly: the gold standard (duplicate clustering and golden
//! records), integration of sources into target schemas, and the layout of
//! cleaning, integration and linkage scenarios.
//!
//! Everything here is computed entity by entity from the provenance log, so
//! assembly streams in the same order the engine wrote.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::model::{unflatten, AttributePath, DataHistory, DataModel, EntityHistory, EntityId, RecordId, SourceId, Timestamp, Value};
use crate::pollution::{replay_until, ProvenanceEntry, ReplayError};
use crate::preconfig::{map_record, FlatRecord, IntegrationProfile, ScenarioKind};
use crate::rng::{stream, tag};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AssembleError {
    #[error("record {record} of source {source_id} links to no known entity")]
    DanglingRecord { record: RecordId, source_id: SourceId },
    #[error("invalid scenario: {0}")]
    InvalidKind(String),
    #[error(transparent)]
    Replay(#[from] ReplayError),
}

/// A record alive at the horizon, in canonical paths.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmittedRecord {
    pub source: SourceId,
    pub id: RecordId,
    pub entity: EntityId,
    pub cells: BTreeMap<AttributePath, Value>,
}

impl EmittedRecord {
    /// Cells in the order of `paths`; absent cells are `None`.
    pub fn flat(&self, paths: &[AttributePath]) -> FlatRecord {
        paths.iter().map(|p| (p.clone(), self.cells.get(p).cloned())).collect()
    }
}

/// Final records of one entity's log, by source and record id.
pub fn emitted_records(entries: &[ProvenanceEntry]) -> Result<Vec<EmittedRecord>, ReplayError> {
    let state = replay_until(entries, None)?;
    Ok(state
        .into_iter()
        .flat_map(|(source, records)| {
            records.into_iter().map(move |(id, r)| EmittedRecord { source, id, entity: r.entity, cells: r.cells })
        })
        .collect())
}

/// One line of the clustering file. The cluster id is the entity id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterLine {
    pub record_id: RecordId,
    pub cluster_id: EntityId,
}

/// True values of one entity. `as_of` is the horizon, or the last instant the
/// entity was alive when it was deleted earlier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldenRecord {
    pub cluster_id: EntityId,
    pub as_of: Timestamp,
    pub record: Value,
}

pub fn golden_record(e: &EntityHistory, paths: &[AttributePath], horizon: Timestamp) -> GoldenRecord {
    let as_of = e.last_alive(horizon);
    GoldenRecord { cluster_id: e.id, as_of, record: Value::Document(unflatten(paths, e.row_at(as_of))) }
}

/// The gold standard contribution of one entity.
#[derive(Debug, Clone, PartialEq)]
pub struct EntityGold {
    pub cluster: EntityId,
    /// Sorted record ids.
    pub records: Vec<RecordId>,
    pub golden: Option<GoldenRecord>,
}

impl EntityGold {
    /// Every intra-cluster pair `(a, b)` with `a < b`.
    pub fn pairs(&self) -> impl Iterator<Item = (RecordId, RecordId)> + '_ {
        self.records.iter().enumerate().flat_map(move |(i, a)| self.records[i + 1..].iter().map(move |b| (*a, *b)))
    }
}

/// Clusters the records of one entity. Copies carry the entity of their
/// origin, so lineage needs no further resolution.
pub fn entity_gold(
    entity: Option<&EntityHistory>,
    records: &[EmittedRecord],
    paths: &[AttributePath],
    horizon: Timestamp,
) -> Result<EntityGold, AssembleError> {
    let first = records.first();
    let e = match entity {
        Some(e) => e,
        None => {
            return match first {
                Some(r) => Err(AssembleError::DanglingRecord { record: r.id, source_id: r.source }),
                None => Err(AssembleError::InvalidKind("empty entity group".into())),
            }
        }
    };
    if let Some(r) = records.iter().find(|r| r.entity != e.id) {
        return Err(AssembleError::DanglingRecord { record: r.id, source_id: r.source });
    }
    let mut ids: Vec<RecordId> = records.iter().map(|r| r.id).collect();
    ids.sort_unstable();
    let golden = (!ids.is_empty()).then(|| golden_record(e, paths, horizon));
    Ok(EntityGold { cluster: e.id, records: ids, golden })
}

/// The complete gold standard of a run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GoldStandard {
    /// Non-empty clusters only.
    pub clusters: BTreeMap<EntityId, Vec<RecordId>>,
    pub golden: Vec<GoldenRecord>,
}

impl GoldStandard {
    pub fn cluster_lines(&self) -> impl Iterator<Item = ClusterLine> + '_ {
        self.clusters
            .iter()
            .flat_map(|(c, ids)| ids.iter().map(move |r| ClusterLine { record_id: *r, cluster_id: *c }))
    }
}

/// Builds the gold standard from a log written entity by entity.
pub fn build_gold_standard(
    provenance: &[ProvenanceEntry],
    history: &DataHistory,
    horizon: Timestamp,
) -> Result<GoldStandard, AssembleError> {
    let mut gold = GoldStandard::default();
    for group in provenance.chunk_by(|a, b| a.entity_id == b.entity_id) {
        let records = emitted_records(group)?;
        let g = entity_gold(history.entity(group[0].entity_id), &records, history.paths(), horizon)?;
        if let Some(golden) = g.golden {
            gold.golden.push(golden);
            gold.clusters.insert(g.cluster, g.records);
        }
    }
    Ok(gold)
}

/// A value pair written to each other's target attribute.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MappingError {
    pub source: SourceId,
    pub record_id: RecordId,
    pub a: AttributePath,
    pub b: AttributePath,
}

/// One record in a target schema.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegratedRecord {
    pub source: SourceId,
    pub record_id: RecordId,
    /// Cells in target order.
    pub record: FlatRecord,
    pub error: Option<MappingError>,
    /// Target attributes no mapping step produced; they stay null.
    pub unmapped: Vec<AttributePath>,
}

/// Maps one canonical record into the target of `profile`. The swap draw is
/// keyed by the profile and record, so it is independent of processing order.
pub fn integrate_record(
    profile: &IntegrationProfile,
    profile_index: usize,
    seed: u64,
    record: &EmittedRecord,
    paths: &[AttributePath],
) -> IntegratedRecord {
    let steps = profile.mappings.get(&record.source).map(Vec::as_slice).unwrap_or_default();
    let mapped = map_record(steps, record.flat(paths));
    let mut unmapped = Vec::new();
    let mut out: FlatRecord = profile
        .target
        .iter()
        .map(|t| match mapped.iter().find(|(p, _)| p == t) {
            Some((_, cell)) => (t.clone(), cell.clone()),
            None => {
                unmapped.push(t.clone());
                (t.clone(), None)
            }
        })
        .collect();
    let mut rng = stream(seed, &[tag::INTEGRATION, profile_index as u64, record.id.0]);
    let mut error = None;
    if rng.random::<f64>() < profile.mapping_error_rate {
        let filled: Vec<usize> = (0..out.len()).filter(|&i| out[i].1.as_ref().is_some_and(|v| !v.is_null())).collect();
        if filled.len() >= 2 {
            let i = filled[rng.random_range(0..filled.len())];
            let others: Vec<usize> = filled.iter().copied().filter(|&j| out[j].1 != out[i].1).collect();
            if !others.is_empty() {
                let j = others[rng.random_range(0..others.len())];
                let (a, b) = (out[i].1.take(), out[j].1.take());
                out[i].1 = b;
                out[j].1 = a;
                error = Some(MappingError {
                    source: record.source,
                    record_id: record.id,
                    a: out[i.min(j)].0.clone(),
                    b: out[i.max(j)].0.clone(),
                });
            }
        }
    }
    IntegratedRecord { source: record.source, record_id: record.id, record: out, error, unmapped }
}

/// Integrates every record of every source, in input order.
pub fn apply_integration_profile(
    records: &[EmittedRecord],
    profile: &IntegrationProfile,
    profile_index: usize,
    seed: u64,
    paths: &[AttributePath],
) -> Vec<IntegratedRecord> {
    records.iter().map(|r| integrate_record(profile, profile_index, seed, r, paths)).collect()
}

/// What one scenario packages.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioPlan {
    pub name: String,
    pub kind: ScenarioKind,
    /// Index of the integration profile for integration scenarios.
    pub integration: Option<usize>,
}

/// One scenario per integration profile, otherwise exactly one. All scenarios
/// of a run share the sources and the gold standard.
pub fn assemble(kind: ScenarioKind, sources: usize, profiles: &[IntegrationProfile]) -> Result<Vec<ScenarioPlan>, AssembleError> {
    match kind {
        ScenarioKind::Cleaning if sources != 1 => {
            Err(AssembleError::InvalidKind(format!("a cleaning scenario needs one source, got {sources}")))
        }
        ScenarioKind::Linkage if sources < 2 => {
            Err(AssembleError::InvalidKind(format!("a linkage scenario needs two or more sources, got {sources}")))
        }
        ScenarioKind::Integration if profiles.is_empty() => {
            Err(AssembleError::InvalidKind("an integration scenario needs an integration profile".into()))
        }
        ScenarioKind::Integration => Ok(profiles
            .iter()
            .enumerate()
            .map(|(i, p)| ScenarioPlan { name: format!("integration-{}", p.name), kind, integration: Some(i) })
            .collect()),
        ScenarioKind::Cleaning => Ok(vec![ScenarioPlan { name: "cleaning".into(), kind, integration: None }]),
        ScenarioKind::Linkage => Ok(vec![ScenarioPlan { name: "linkage".into(), kind, integration: None }]),
    }
}

/// An exported dataset and the schema it was written with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetFile {
    pub file: String,
    pub model: DataModel,
    /// Schema version: the list of exported leaf paths.
    pub columns: Vec<AttributePath>,
    pub records: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldFiles {
    pub clusters: String,
    pub pairs: String,
    pub golden: String,
}

/// The manifest of one scenario directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioManifest {
    pub name: String,
    pub kind: ScenarioKind,
    pub sources: BTreeMap<SourceId, DatasetFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrated: Option<DatasetFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mapping_errors: Option<String>,
    /// Integrated records with target attributes no mapping produced.
    #[serde(default)]
    pub unmapped_records: u64,
    pub gold: GoldFiles,
    pub config_hash: String,
    pub seed: u64,
}
