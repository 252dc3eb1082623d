//! Generation of a constraint-respecting data history from a prepared
//! snapshot and a change model.
//!
//! Every entity is planned and materialized from its own random stream, so
//! any partition of the entity range can be generated independently. Three
//! mechanisms keep all intermediate states valid without a global index:
//!
//! * attributes tied together by functional dependencies form components
//!   whose values are always taken jointly from one input row;
//! * constant attributes never change;
//! * unique attributes receive minted values that never collide with each
//!   other or with the input.

mod jsonl;
mod mint;
mod synth;

use std::collections::{BTreeMap, BTreeSet};
use std::ops::Range;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

pub use jsonl::{read_history, write_entity, write_history, HistoryEntities, HistoryLine, LIFESPAN_PATH};
pub use mint::Mint;
pub use synth::{synthesize_update, PathSynth, SynthError, MAX_RETRIES};

use crate::dataset::Row;
use crate::model::{
    AttributePath, ChangeModel, Constraint, DataHistory, EntityHistory, EntityId, Event, EventKind, Timestamp,
    UpdateRule, Value, ValueKind, VersionedValue,
};
use crate::preparation::PreparedDataset;
use crate::rng::{stream, tag};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HistoryGenError {
    #[error("constraint or rule references unknown path `{0}`")]
    UnknownPath(AttributePath),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// A planned event that could not be realized. Generation continues without it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Diagnostic {
    ConstraintDeadlock { entity: EntityId, at: Timestamp, paths: Vec<AttributePath> },
    ExhaustedRetries { entity: EntityId, at: Timestamp, path: AttributePath },
}

/// Updates of one entity at one instant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlannedUpdate {
    pub at: Timestamp,
    pub entity: EntityId,
    pub paths: BTreeSet<AttributePath>,
}

/// Lag, in transactions, after which a rule's consequent follows its
/// antecedent; `None` when the rule does not fire.
fn rule_lag(confidence: f64, window: usize, rng: &mut impl Rng) -> Option<usize> {
    (rng.random::<f64>() < confidence).then(|| rng.random_range(0..window.max(1)))
}

fn lag_ticks(lag: usize, mean_gap: f64) -> u64 {
    (lag as f64 * mean_gap).round() as u64
}

/// Consequent updates caused by `trigger`: with probability
/// `rule.confidence`, one update of the consequent on the same entity, lagged
/// by a uniform number of transactions in `[0, rule.window)`, each
/// transaction lasting `mean_gap` ticks.
pub fn apply_update_rule(
    rule: &UpdateRule,
    trigger: &PlannedUpdate,
    mean_gap: f64,
    rng: &mut impl Rng,
) -> Vec<PlannedUpdate> {
    if !rule.antecedent.is_subset(&trigger.paths) {
        return Vec::new();
    }
    match rule_lag(rule.confidence, rule.window, rng) {
        Some(lag) => vec![PlannedUpdate {
            at: Timestamp(trigger.at.0 + lag_ticks(lag, mean_gap)),
            entity: trigger.entity,
            paths: rule.consequent.clone(),
        }],
        None => Vec::new(),
    }
}

#[derive(Debug, Clone)]
struct IndexedRule {
    antecedent: Vec<usize>,
    consequent: Vec<usize>,
    window: usize,
    confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryParams {
    pub horizon: Timestamp,
    pub volume_factor: f64,
    pub seed: u64,
}

/// Attributes that change together, with the input rows that supply their
/// joint values.
#[derive(Debug, Clone)]
struct Component {
    members: Vec<usize>,
}

/// Plans and materializes entity histories.
#[derive(Debug, Clone)]
pub struct HistoryGenerator {
    paths: Vec<AttributePath>,
    rows: Vec<Row>,
    synth: Vec<PathSynth>,
    /// Per-tick update intensity of each attribute.
    intensity: Vec<f64>,
    constant: Vec<bool>,
    component_of: Vec<Option<usize>>,
    components: Vec<Component>,
    mints: Vec<Option<Mint>>,
    /// Mint attributes to refresh when an attribute changes, so that the
    /// unique combinations it belongs to stay unique.
    guards: Vec<Vec<usize>>,
    rules: Vec<IndexedRule>,
    input_count: u64,
    insert_count: u64,
    delete_intensity: f64,
    extra_delete: f64,
    mean_gap: f64,
    params: HistoryParams,
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, x: usize) -> usize {
        let p = self.0[x];
        if p == x {
            return x;
        }
        let r = self.find(p);
        self.0[x] = r;
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        if a != b {
            self.0[a.max(b)] = a.min(b);
        }
    }
}

impl HistoryGenerator {
    pub fn new(
        prepared: &PreparedDataset,
        change_model: &ChangeModel,
        rules: &[UpdateRule],
        constraints: &[Constraint],
        params: HistoryParams,
    ) -> Result<Self, HistoryGenError> {
        if !(params.volume_factor > 0.0 && params.volume_factor.is_finite()) {
            return Err(HistoryGenError::InvalidParameter(format!("volume factor {}", params.volume_factor)));
        }
        let data = &prepared.data;
        let paths = data.paths.clone();
        let n = paths.len();
        let index = |p: &AttributePath| data.position(p).ok_or_else(|| HistoryGenError::UnknownPath(p.clone()));

        let mut constant = vec![false; n];
        let mut uf = UnionFind((0..n).collect());
        let mut in_fd = vec![false; n];
        let unique_sets: Vec<Vec<usize>> = constraints
            .iter()
            .filter_map(|c| match c {
                Constraint::Unique { paths } | Constraint::TemporalUnique { paths } => {
                    Some(paths.iter().map(index).collect::<Result<Vec<_>, _>>())
                }
                _ => None,
            })
            .collect::<Result<_, _>>()?;
        for c in constraints {
            if let Constraint::FunctionalDependency { lhs, rhs } = c {
                let l = lhs.iter().map(index).collect::<Result<Vec<_>, _>>()?;
                let r = rhs.iter().map(index).collect::<Result<Vec<_>, _>>()?;
                if l.is_empty() {
                    r.iter().for_each(|&i| constant[i] = true);
                    continue;
                }
                // Dependencies on a unique combination hold by themselves.
                if unique_sets.iter().any(|u| u.iter().all(|i| l.contains(i))) {
                    continue;
                }
                for &i in l.iter().chain(&r) {
                    in_fd[i] = true;
                    uf.union(l[0], i);
                }
            }
        }
        let mut roots: BTreeMap<usize, usize> = BTreeMap::new();
        let mut components: Vec<Component> = Vec::new();
        let mut component_of = vec![None; n];
        for i in (0..n).filter(|&i| in_fd[i] && !constant[i]) {
            let root = uf.find(i);
            let c = *roots.entry(root).or_insert_with(|| {
                components.push(Component { members: Vec::new() });
                components.len() - 1
            });
            components[c].members.push(i);
            component_of[i] = Some(c);
        }

        let schema = &prepared.schema;
        let mut mints: Vec<Option<Mint>> = vec![None; n];
        let mut guards: Vec<Vec<usize>> = vec![Vec::new(); n];
        for set in &unique_sets {
            let chosen = set
                .iter()
                .copied()
                .find(|&i| mints[i].is_some())
                .or_else(|| set.iter().copied().find(|&i| component_of[i].is_none() && !constant[i]))
                .unwrap_or(set[0]);
            if mints[chosen].is_none() {
                let numeric = schema.schema.attribute(&paths[chosen]).is_some_and(|a| a.kind == ValueKind::Number);
                mints[chosen] = Some(Mint::for_column(data.column(chosen), numeric));
            }
            for &i in set.iter().filter(|&&i| i != chosen) {
                if !guards[i].contains(&chosen) {
                    guards[i].push(chosen);
                }
            }
        }

        let synth: Vec<PathSynth> =
            paths.iter().map(|p| PathSynth::new(p, schema, &prepared.profile, change_model)).collect();
        let intensity: Vec<f64> = paths
            .iter()
            .enumerate()
            .map(|(i, p)| {
                if constant[i] {
                    0.0
                } else {
                    change_model.paths.get(p).map_or(0.0, |c| c.update_rate.max(0.0) / 1000.0)
                }
            })
            .collect();
        let indexed_rules = rules
            .iter()
            .chain(&change_model.rules)
            .map(|r| {
                Ok(IndexedRule {
                    antecedent: r.antecedent.iter().map(index).collect::<Result<_, _>>()?,
                    consequent: r.consequent.iter().map(index).collect::<Result<_, _>>()?,
                    window: r.window.max(1),
                    confidence: r.confidence.clamp(0.0, 1.0),
                })
            })
            .collect::<Result<Vec<_>, HistoryGenError>>()?;

        let input_count = data.len() as u64;
        let h = params.horizon.0;
        let insert_count = if h == 0 || input_count == 0 {
            0
        } else {
            let growth = ((params.volume_factor - 1.0).max(0.0) * input_count as f64).round();
            let churn = (input_count as f64 * change_model.insert_rate.max(0.0) * h as f64 / 1000.0).round();
            (growth + churn) as u64
        };
        let exposure = input_count as f64 + insert_count as f64 / 2.0;
        let total_intensity: f64 = intensity.iter().sum::<f64>() * exposure;
        let mean_gap = if total_intensity > 0.0 { 1.0 / total_intensity } else { 0.0 };
        Ok(HistoryGenerator {
            paths,
            rows: data.rows.clone(),
            synth,
            intensity,
            constant,
            component_of,
            components,
            mints,
            guards,
            rules: indexed_rules,
            input_count,
            insert_count,
            delete_intensity: change_model.delete_rate.max(0.0) / 1000.0,
            extra_delete: (1.0 - params.volume_factor).clamp(0.0, 1.0),
            mean_gap,
            params,
        })
    }

    pub fn paths(&self) -> &[AttributePath] {
        &self.paths
    }

    pub fn horizon(&self) -> Timestamp {
        self.params.horizon
    }

    pub fn input_count(&self) -> u64 {
        self.input_count
    }

    pub fn insert_count(&self) -> u64 {
        self.insert_count
    }

    /// Total number of entities; ids are `0..entity_count()`, input rows first.
    pub fn entity_count(&self) -> u64 {
        self.input_count + self.insert_count
    }

    /// Expected gap between consecutive update transactions of the whole world.
    pub fn mean_gap(&self) -> f64 {
        self.mean_gap
    }

    fn mint(&self, path: usize, entity: EntityId, ordinal: &mut u64) -> Value {
        let counter = *ordinal * self.entity_count() + entity.0;
        *ordinal += 1;
        self.mints[path].as_ref().expect("mint path").value(counter)
    }

    fn pick_row<'a>(&'a self, rng: &mut impl Rng) -> &'a Row {
        &self.rows[rng.random_range(0..self.rows.len())]
    }

    /// Initial values of an inserted entity: joint values for components,
    /// independent column draws elsewhere, fresh values for unique keys.
    fn synthesize_row(&self, entity: EntityId, ordinal: &mut u64, rng: &mut impl Rng) -> Row {
        let mut row: Row = (0..self.paths.len()).map(|i| self.pick_row(rng)[i].clone()).collect();
        for comp in &self.components {
            let donor = self.pick_row(rng);
            for &i in &comp.members {
                row[i] = donor[i].clone();
            }
        }
        for (i, (cell, mint)) in row.iter_mut().zip(&self.mints).enumerate() {
            if mint.is_some() {
                *cell = Some(self.mint(i, entity, ordinal));
            }
        }
        row
    }

    fn lifespan(&self, entity: EntityId, rng: &mut impl Rng) -> (Timestamp, Option<Timestamp>) {
        let h = self.params.horizon.0;
        let created = if entity.0 < self.input_count { 0 } else { rng.random_range(1..=h.max(1)) };
        let mut deleted: Option<u64> = None;
        if h > 0 && self.delete_intensity > 0.0 {
            let x = created as f64 + Exp::new(self.delete_intensity).expect("positive rate").sample(rng);
            let d = (x.ceil() as u64).max(created + 1);
            if d <= h {
                deleted = Some(d);
            }
        }
        if h > 0 && entity.0 < self.input_count && rng.random::<f64>() < self.extra_delete {
            let d = rng.random_range(1..=h);
            deleted = Some(deleted.map_or(d, |old| old.min(d)));
        }
        (Timestamp(created), deleted.map(Timestamp))
    }

    /// Update instants per attribute on `(created, last]`, merged by tick.
    fn schedule(&self, created: u64, last: u64, row: &Row, rng: &mut impl Rng) -> BTreeMap<u64, BTreeSet<usize>> {
        let mut plan: BTreeMap<u64, BTreeSet<usize>> = BTreeMap::new();
        if last <= created {
            return plan;
        }
        for (i, &rate) in self.intensity.iter().enumerate() {
            if rate <= 0.0 || row[i].is_none() {
                continue;
            }
            let exp = Exp::new(rate).expect("positive rate");
            let mut t = created as f64;
            loop {
                t += exp.sample(rng);
                let tick = t.ceil() as u64;
                if tick > last {
                    break;
                }
                plan.entry(tick.max(created + 1)).or_default().insert(i);
            }
        }
        plan
    }

    /// Adds rule consequents for every base transaction. Consequents do not
    /// trigger further rules.
    fn fire_rules(&self, plan: &mut BTreeMap<u64, BTreeSet<usize>>, last: u64, row: &Row, rng: &mut impl Rng) {
        if self.rules.is_empty() {
            return;
        }
        let mut extra: Vec<(u64, usize)> = Vec::new();
        for (&t, items) in plan.iter() {
            for rule in &self.rules {
                if !rule.antecedent.iter().all(|i| items.contains(i)) {
                    continue;
                }
                if let Some(lag) = rule_lag(rule.confidence, rule.window, rng) {
                    let at = t + lag_ticks(lag, self.mean_gap);
                    if at <= last {
                        extra.extend(rule.consequent.iter().filter(|&&i| row[i].is_some()).map(|&i| (at, i)));
                    }
                }
            }
        }
        for (at, i) in extra {
            plan.entry(at).or_default().insert(i);
        }
    }

    /// The full history of one entity and the events that could not be realized.
    pub fn generate_entity(&self, entity: EntityId) -> (EntityHistory, Vec<Diagnostic>) {
        let seed = self.params.seed;
        let mut rng = stream(seed, &[tag::HISTORY_PLAN, entity.0]);
        let mut ordinal = 0u64;
        let mut minted = vec![false; self.paths.len()];
        let mut row = if entity.0 < self.input_count {
            self.rows[entity.0 as usize].clone()
        } else {
            let mut insert_rng = stream(seed, &[tag::INSERT_PLAN, entity.0]);
            let row = self.synthesize_row(entity, &mut ordinal, &mut insert_rng);
            minted.iter_mut().enumerate().for_each(|(i, m)| *m = self.mints[i].is_some());
            row
        };
        let (created, deleted) = self.lifespan(entity, &mut rng);
        let last = deleted.map_or(self.params.horizon.0, |d| d.0 - 1).min(self.params.horizon.0);
        let mut plan = self.schedule(created.0, last, &row, &mut rng);
        self.fire_rules(&mut plan, last, &row, &mut rng);

        let mut versions: Vec<Vec<VersionedValue>> = row
            .iter()
            .map(|c| match c {
                Some(v) => vec![VersionedValue { value: v.clone(), valid_from: created, valid_to: None }],
                None => Vec::new(),
            })
            .collect();
        let mut diagnostics = Vec::new();
        let mut commit_rng = stream(seed, &[tag::HISTORY_COMMIT, entity.0]);
        for (t, items) in plan {
            let at = Timestamp(t);
            let mut changes: BTreeMap<usize, Value> = BTreeMap::new();
            let mut done_components: BTreeSet<usize> = BTreeSet::new();
            for &i in &items {
                let Some(current) = row[i].clone() else { continue };
                if self.mints[i].is_some() {
                    changes.insert(i, self.mint(i, entity, &mut ordinal));
                    minted[i] = true;
                } else if let Some(c) = self.component_of[i] {
                    if !done_components.insert(c) {
                        continue;
                    }
                    let forced: Vec<usize> =
                        self.components[c].members.iter().copied().filter(|m| items.contains(m)).collect();
                    match self.pick_donor(c, &forced, &row, &mut commit_rng) {
                        Some(donor) => {
                            for &m in &self.components[c].members {
                                if donor[m] != row[m] {
                                    changes.insert(m, donor[m].clone().expect("same presence pattern"));
                                }
                            }
                        }
                        None => diagnostics.push(Diagnostic::ConstraintDeadlock {
                            entity,
                            at,
                            paths: forced.iter().map(|&m| self.paths[m].clone()).collect(),
                        }),
                    }
                } else if !self.constant[i] {
                    match synthesize_update(&current, &self.synth[i], &mut commit_rng) {
                        Ok(v) => {
                            changes.insert(i, v);
                        }
                        Err(_) => diagnostics.push(Diagnostic::ExhaustedRetries {
                            entity,
                            at,
                            path: self.paths[i].clone(),
                        }),
                    }
                }
            }
            let changed: Vec<usize> = changes.keys().copied().collect();
            for i in changed {
                for &g in &self.guards[i] {
                    if !minted[g] && !changes.contains_key(&g) {
                        changes.insert(g, self.mint(g, entity, &mut ordinal));
                        minted[g] = true;
                    }
                }
            }
            for (i, value) in changes {
                let list = &mut versions[i];
                let prev = list.last_mut().expect("present attribute");
                if prev.value == value {
                    continue;
                }
                prev.valid_to = Some(at);
                list.push(VersionedValue { value: value.clone(), valid_from: at, valid_to: None });
                row[i] = Some(value);
            }
        }
        if let Some(d) = deleted {
            for list in &mut versions {
                if let Some(v) = list.last_mut() {
                    v.valid_to = Some(d);
                }
            }
        }
        (EntityHistory { id: entity, created_at: created, deleted_at: deleted, versions }, diagnostics)
    }

    /// A random input row whose component values differ from the current
    /// ones on every forced attribute and share their presence pattern.
    fn pick_donor(&self, c: usize, forced: &[usize], row: &Row, rng: &mut impl Rng) -> Option<&Row> {
        let members = &self.components[c].members;
        let fits = |d: &Row| {
            members.iter().all(|&m| d[m].is_some() == row[m].is_some()) && forced.iter().all(|&m| d[m] != row[m])
        };
        for _ in 0..MAX_RETRIES {
            let d = self.pick_row(rng);
            if fits(d) {
                return Some(d);
            }
        }
        // Rare values: fall back to a deterministic scan from a random start.
        let start = rng.random_range(0..self.rows.len());
        (0..self.rows.len()).map(|k| &self.rows[(start + k) % self.rows.len()]).find(|d| fits(d))
    }

    /// Histories of a contiguous id range, in id order.
    pub fn generate_range(&self, ids: Range<u64>) -> (Vec<EntityHistory>, Vec<Diagnostic>) {
        #[cfg(feature = "parallel")]
        let results: Vec<(EntityHistory, Vec<Diagnostic>)> = {
            use rayon::prelude::*;
            ids.into_par_iter().map(|id| self.generate_entity(EntityId(id))).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let results: Vec<(EntityHistory, Vec<Diagnostic>)> =
            ids.map(|id| self.generate_entity(EntityId(id))).collect();
        let mut diagnostics = Vec::new();
        let entities = results
            .into_iter()
            .map(|(e, d)| {
                diagnostics.extend(d);
                e
            })
            .collect();
        (entities, diagnostics)
    }
}

/// Generates the complete history in memory.
pub fn generate_history(
    prepared: &PreparedDataset,
    change_model: &ChangeModel,
    rules: &[UpdateRule],
    constraints: &[Constraint],
    params: HistoryParams,
) -> Result<(DataHistory, Vec<Diagnostic>), HistoryGenError> {
    let generator = HistoryGenerator::new(prepared, change_model, rules, constraints, params)?;
    let (entities, diagnostics) = generator.generate_range(0..generator.entity_count());
    let mut history = DataHistory::new(generator.paths().to_vec());
    entities.into_iter().for_each(|e| history.insert(e));
    Ok((history, diagnostics))
}

/// World events of one entity. Within a tick, events order by entity id,
/// then insert before update before delete.
pub fn entity_events(e: &EntityHistory, paths: &[AttributePath]) -> Vec<Event> {
    let seq = |rank: u64| e.id.0 << 2 | rank;
    let mut out = Vec::new();
    if e.created_at > Timestamp::ZERO {
        out.push(Event { at: e.created_at, seq: seq(0), kind: EventKind::WorldInsert { entity: e.id } });
    }
    for (at, idxs) in e.update_instants() {
        if e.deleted_at.is_some_and(|d| at >= d) {
            continue;
        }
        out.push(Event {
            at,
            seq: seq(1),
            kind: EventKind::WorldUpdate { entity: e.id, paths: idxs.iter().map(|&i| paths[i].clone()).collect() },
        });
    }
    if let Some(d) = e.deleted_at {
        out.push(Event { at: d, seq: seq(2), kind: EventKind::WorldDelete { entity: e.id } });
    }
    out
}

/// The world event plan of a history, ordered by `(at, seq)`.
pub fn world_events(history: &DataHistory) -> Vec<Event> {
    let mut out: Vec<Event> = history.entities().flat_map(|e| entity_events(e, history.paths())).collect();
    out.sort();
    out
}

#[cfg(test)]
mod tests;
