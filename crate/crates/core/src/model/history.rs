use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::{unflatten, AttributePath, Constraint, Document, EnrichedSchema, EntityId, Timestamp, Value};

/// One instance of a value, valid on the half-open interval `[valid_from, valid_to)`.
/// An open `valid_to` means the version is still current.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VersionedValue {
    pub value: Value,
    pub valid_from: Timestamp,
    pub valid_to: Option<Timestamp>,
}

impl VersionedValue {
    pub fn contains(&self, t: Timestamp) -> bool {
        self.valid_from <= t && self.valid_to.is_none_or(|end| t < end)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityHistory {
    pub id: EntityId,
    pub created_at: Timestamp,
    pub deleted_at: Option<Timestamp>,
    /// Version lists aligned with the owning history's path table. An empty
    /// list means the entity never had that attribute.
    pub versions: Vec<Vec<VersionedValue>>,
}

impl EntityHistory {
    pub fn is_alive(&self, t: Timestamp) -> bool {
        self.created_at <= t && self.deleted_at.is_none_or(|d| t < d)
    }

    pub fn version_at(&self, idx: usize, t: Timestamp) -> Option<&VersionedValue> {
        let list = self.versions.get(idx)?;
        let pos = list.partition_point(|v| v.valid_from <= t);
        let v = list.get(pos.checked_sub(1)?)?;
        v.contains(t).then_some(v)
    }

    /// Values of every path at `t`; `None` for absent attributes. Callers must
    /// check liveness first.
    pub fn row_at(&self, t: Timestamp) -> Vec<Option<Value>> {
        (0..self.versions.len()).map(|i| self.version_at(i, t).map(|v| v.value.clone())).collect()
    }

    /// Last instant at which the entity is alive, clipped to `horizon`.
    pub fn last_alive(&self, horizon: Timestamp) -> Timestamp {
        match self.deleted_at {
            Some(d) if d <= horizon => Timestamp(d.0.saturating_sub(1).max(self.created_at.0)),
            _ => horizon.max(self.created_at),
        }
    }

    /// Start times of every version after creation, i.e. the update instants.
    pub fn update_instants(&self) -> BTreeMap<Timestamp, Vec<usize>> {
        let mut out: BTreeMap<Timestamp, Vec<usize>> = BTreeMap::new();
        for (idx, list) in self.versions.iter().enumerate() {
            for v in list.iter().filter(|v| v.valid_from > self.created_at) {
                out.entry(v.valid_from).or_default().push(idx);
            }
        }
        out
    }
}

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum HistoryError {
    #[error("unknown entity {0}")]
    UnknownEntity(EntityId),
    #[error("entity {entity} is not alive at {at}")]
    OutsideLifespan { entity: EntityId, at: Timestamp },
    #[error("unknown attribute path `{0}`")]
    UnknownPath(AttributePath),
    #[error("entity {entity}: {reason}")]
    Malformed { entity: EntityId, reason: String },
}

/// The simulated world truth: per entity, per attribute, an ordered list of versions.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DataHistory {
    paths: Vec<AttributePath>,
    entities: BTreeMap<EntityId, EntityHistory>,
}

impl DataHistory {
    pub fn new(paths: Vec<AttributePath>) -> Self {
        DataHistory { paths, entities: BTreeMap::new() }
    }

    /// History consisting of a single snapshot at tick 0.
    pub fn from_snapshot<I>(paths: Vec<AttributePath>, rows: I) -> Self
    where
        I: IntoIterator<Item = (EntityId, Vec<Option<Value>>)>,
    {
        let mut h = DataHistory::new(paths);
        for (id, row) in rows {
            let versions = row
                .into_iter()
                .map(|cell| match cell {
                    Some(value) => vec![VersionedValue { value, valid_from: Timestamp::ZERO, valid_to: None }],
                    None => Vec::new(),
                })
                .collect();
            h.entities.insert(id, EntityHistory { id, created_at: Timestamp::ZERO, deleted_at: None, versions });
        }
        h
    }

    pub fn paths(&self) -> &[AttributePath] {
        &self.paths
    }

    pub fn path_index(&self, path: &AttributePath) -> Option<usize> {
        self.paths.iter().position(|p| p == path)
    }

    pub fn insert(&mut self, entity: EntityHistory) {
        debug_assert_eq!(entity.versions.len(), self.paths.len());
        self.entities.insert(entity.id, entity);
    }

    pub fn entity(&self, id: EntityId) -> Option<&EntityHistory> {
        self.entities.get(&id)
    }

    pub fn entities(&self) -> impl Iterator<Item = &EntityHistory> {
        self.entities.values()
    }

    pub fn into_entities(self) -> impl Iterator<Item = EntityHistory> {
        self.entities.into_values()
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    /// Structural invariants: per path, versions are ordered, contiguous,
    /// non-empty intervals that exactly cover the entity's lifespan.
    pub fn check_structure(&self) -> Result<(), HistoryError> {
        for e in self.entities.values() {
            let bad = |reason: String| HistoryError::Malformed { entity: e.id, reason };
            if e.versions.len() != self.paths.len() {
                return Err(bad("version table width differs from path table".into()));
            }
            if let Some(d) = e.deleted_at {
                if d <= e.created_at {
                    return Err(bad("deleted before creation".into()));
                }
            }
            for (idx, list) in e.versions.iter().enumerate() {
                let Some(first) = list.first() else { continue };
                if first.valid_from != e.created_at {
                    return Err(bad(format!("{} does not start at creation", self.paths[idx])));
                }
                for pair in list.windows(2) {
                    if pair[0].valid_to != Some(pair[1].valid_from) {
                        return Err(bad(format!("{} has a gap or overlap", self.paths[idx])));
                    }
                }
                for v in list {
                    if v.valid_to.is_some_and(|end| end <= v.valid_from) {
                        return Err(bad(format!("{} has an empty interval", self.paths[idx])));
                    }
                }
                if list.last().and_then(|v| v.valid_to) != e.deleted_at {
                    return Err(bad(format!("{} does not end with the lifespan", self.paths[idx])));
                }
            }
        }
        Ok(())
    }
}

/// The value instance of `path` for `entity` that is valid at `t`.
pub fn value_at(
    history: &DataHistory,
    entity: EntityId,
    path: &AttributePath,
    t: Timestamp,
) -> Result<Value, HistoryError> {
    let e = history.entity(entity).ok_or(HistoryError::UnknownEntity(entity))?;
    if !e.is_alive(t) {
        return Err(HistoryError::OutsideLifespan { entity, at: t });
    }
    let idx = history.path_index(path).ok_or_else(|| HistoryError::UnknownPath(path.clone()))?;
    e.version_at(idx, t)
        .map(|v| v.value.clone())
        .ok_or_else(|| HistoryError::UnknownPath(path.clone()))
}

/// All entities alive at `t`, ordered by id, with every attribute resolved at `t`.
pub fn snapshot_at(history: &DataHistory, t: Timestamp) -> Vec<(EntityId, Document)> {
    history
        .entities()
        .filter(|e| e.is_alive(t))
        .map(|e| (e.id, unflatten(history.paths(), e.row_at(t))))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub at: Timestamp,
    pub constraint: Constraint,
    pub entities: Vec<EntityId>,
}

/// Intervals on which an entity's tuple of values over `idxs` is constant.
struct KeySegment {
    from: Timestamp,
    to: Option<Timestamp>,
    entity: EntityId,
    key: Vec<Value>,
}

fn key_segments(e: &EntityHistory, idxs: &[usize]) -> Vec<KeySegment> {
    let mut bounds: BTreeSet<Timestamp> = BTreeSet::new();
    bounds.insert(e.created_at);
    for &i in idxs {
        bounds.extend(e.versions[i].iter().map(|v| v.valid_from));
    }
    let mut out: Vec<KeySegment> = Vec::new();
    for t in bounds {
        if !e.is_alive(t) {
            continue;
        }
        let key: Vec<Value> = idxs
            .iter()
            .map(|&i| e.version_at(i, t).map(|v| v.value.clone()).unwrap_or(Value::Null))
            .collect();
        if let Some(last) = out.last_mut() {
            if last.key == key {
                continue;
            }
            last.to = Some(t);
        }
        out.push(KeySegment { from: t, to: e.deleted_at, entity: e.id, key });
    }
    out
}

fn overlaps_at(end: Option<Timestamp>, t: Timestamp) -> bool {
    end.is_none_or(|end| t < end)
}

/// Replays the history against every constraint of the schema. Returns one
/// violation per conflict onset; an empty result means every intermediate
/// snapshot is valid.
pub fn validate_history(history: &DataHistory, schema: &EnrichedSchema) -> Vec<Violation> {
    let mut out = Vec::new();
    for constraint in &schema.constraints {
        let resolve = |paths: &[AttributePath]| -> Option<Vec<usize>> {
            paths.iter().map(|p| history.path_index(p)).collect()
        };
        match constraint {
            Constraint::Unique { paths } => {
                let Some(idxs) = resolve(paths) else { continue };
                let mut groups: HashMap<Vec<Value>, Vec<KeySegment>> = HashMap::new();
                for e in history.entities() {
                    for seg in key_segments(e, &idxs) {
                        if seg.key.iter().any(Value::is_null) {
                            continue;
                        }
                        groups.entry(seg.key.clone()).or_default().push(seg);
                    }
                }
                for segs in groups.values_mut() {
                    segs.sort_by_key(|s| (s.from, s.entity));
                    let mut active: Vec<&KeySegment> = Vec::new();
                    for seg in segs.iter() {
                        active.retain(|a| overlaps_at(a.to, seg.from));
                        if active.iter().any(|a| a.entity != seg.entity) {
                            let mut ents: Vec<EntityId> = active.iter().map(|a| a.entity).collect();
                            ents.push(seg.entity);
                            push_violation(&mut out, seg.from, constraint, ents);
                        }
                        active.push(seg);
                    }
                }
            }
            Constraint::TemporalUnique { paths } => {
                let Some(idxs) = resolve(paths) else { continue };
                let mut groups: HashMap<Vec<Value>, Vec<(Timestamp, EntityId)>> = HashMap::new();
                for e in history.entities() {
                    for seg in key_segments(e, &idxs) {
                        if !seg.key.iter().any(Value::is_null) {
                            groups.entry(seg.key).or_default().push((seg.from, seg.entity));
                        }
                    }
                }
                for holders in groups.values_mut() {
                    holders.sort();
                    let first = holders[0].1;
                    if let Some(&(at, _)) = holders.iter().find(|(_, e)| *e != first) {
                        let ents: BTreeSet<EntityId> = holders.iter().map(|(_, e)| *e).collect();
                        push_violation(&mut out, at, constraint, ents.into_iter().collect());
                    }
                }
            }
            Constraint::FunctionalDependency { lhs, rhs } => {
                let (Some(l), Some(r)) = (resolve(lhs), resolve(rhs)) else { continue };
                let all: Vec<usize> = l.iter().chain(r.iter()).copied().collect();
                let mut groups: HashMap<Vec<Value>, Vec<KeySegment>> = HashMap::new();
                for e in history.entities() {
                    for mut seg in key_segments(e, &all) {
                        let rhs_vals = seg.key.split_off(l.len());
                        let lhs_vals = std::mem::replace(&mut seg.key, rhs_vals);
                        groups.entry(lhs_vals).or_default().push(seg);
                    }
                }
                for segs in groups.values_mut() {
                    segs.sort_by_key(|s| (s.from, s.entity));
                    let mut active: Vec<&KeySegment> = Vec::new();
                    for seg in segs.iter() {
                        active.retain(|a| overlaps_at(a.to, seg.from) && a.entity != seg.entity);
                        let clash: Vec<EntityId> =
                            active.iter().filter(|a| a.key != seg.key).map(|a| a.entity).collect();
                        if !clash.is_empty() {
                            let mut ents = clash;
                            ents.push(seg.entity);
                            push_violation(&mut out, seg.from, constraint, ents);
                        }
                        active.push(seg);
                    }
                }
            }
        }
    }
    out.sort_by(|a, b| (a.at, &a.constraint, &a.entities).cmp(&(b.at, &b.constraint, &b.entities)));
    out
}

fn push_violation(out: &mut Vec<Violation>, at: Timestamp, constraint: &Constraint, mut entities: Vec<EntityId>) {
    entities.sort();
    entities.dedup();
    out.push(Violation { at, constraint: constraint.clone(), entities });
}
