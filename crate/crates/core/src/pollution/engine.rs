use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::formats::{convert, FormatId};
use crate::history_gen::entity_events;
use crate::model::{
    AttributePath, EntityHistory, EntityId, ErrorKind, Event, EventKind, RecordId, SourceId, Timestamp, Value,
    ValueKind,
};
use crate::preconfig::{CopySpec, CopyTriggerKind, GenerationConfig, MappingStep, OutdatedMode, PollutionTally, SourceProfile};
use crate::rng::{mix64, stream, tag, StreamRng};

use super::context::PollutionContext;
use super::errors::{inject_error, InjectError};
use super::provenance::{
    Cells, CreateCause, DeleteCause, ErrorCause, Lineage, MissedEvent, Op, ProvenanceEntry, UpdateCause,
};

/// Extra records per duplicated entity are capped here.
const MAX_EXTRA_RECORDS: u32 = 20;

const SEQ_COPY: u64 = 1 << 62;
const SEQ_PROFILE: u64 = 2 << 62;
const SEQ_SWEEP: u64 = 3 << 62;

/// A live record of one source, in the canonical path order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceRecord {
    pub id: RecordId,
    pub entity: EntityId,
    pub origin: Option<Lineage>,
    pub cells: Vec<Option<Value>>,
}

/// Record ids are a bijective scramble of (source, entity, ordinal), so they
/// are unique without coordination.
pub fn record_id(source: SourceId, entity: EntityId, ordinal: u64) -> RecordId {
    RecordId(mix64(tag::RECORD_ID ^ (source.0 << 56 | entity.0 << 16 | ordinal.min(0xffff))))
}

/// The value of a path at a random earlier instant in `[created_at, t)`, or
/// `None` when that lookup cannot change the cell.
pub fn make_outdated(e: &EntityHistory, idx: usize, current: &Value, t: Timestamp, rng: &mut impl Rng) -> Option<Value> {
    if t <= e.created_at {
        return None;
    }
    let past = Timestamp(rng.random_range(e.created_at.0..t.0));
    let v = &e.version_at(idx, past)?.value;
    (v != current).then(|| v.clone())
}

#[derive(Debug, Clone, Default)]
struct ClassTable {
    classes: Vec<(ErrorKind, f64)>,
    total: f64,
}

impl ClassTable {
    fn pick(&self, u: f64) -> Option<ErrorKind> {
        let mut acc = 0.0;
        for &(k, p) in &self.classes {
            acc += p;
            if u < acc {
                return Some(k);
            }
        }
        None
    }

    /// A class drawn by relative weight, for errors whose rate is set
    /// elsewhere.
    fn pick_weighted(&self, rng: &mut impl Rng) -> ErrorKind {
        if self.total > 0.0 {
            return self.pick(rng.random::<f64>() * self.total).unwrap_or(self.classes[0].0);
        }
        self.classes.choose(rng).map_or(ErrorKind::Typo, |c| c.0)
    }
}

struct CopyPlan {
    from: usize,
    to: usize,
    mask: Vec<bool>,
    formats: Vec<(usize, FormatId, FormatId)>,
}

/// Simulation rules for one fixed configuration.
pub struct Engine<'a> {
    ctx: &'a PollutionContext,
    config: GenerationConfig,
    /// Class tables per source, period and path.
    tables: Vec<Vec<Vec<ClassTable>>>,
    copies: Vec<CopyPlan>,
    /// On-change copy specifications per source.
    on_change: Vec<Vec<usize>>,
    global: Vec<Event>,
}

fn class_table(profile: &SourceProfile, path: &AttributePath) -> ClassTable {
    let classes: Vec<(ErrorKind, f64)> = profile
        .errors
        .class_probs
        .get(path)
        .map(|m| m.iter().map(|(k, p)| (*k, *p)).collect())
        .unwrap_or_default();
    let total = classes.iter().map(|c| c.1).sum();
    ClassTable { classes, total }
}

impl<'a> Engine<'a> {
    pub fn new(ctx: &'a PollutionContext, config: GenerationConfig) -> Self {
        let horizon = ctx.horizon;
        let index: BTreeMap<SourceId, usize> = config.sources.iter().enumerate().map(|(i, s)| (s.id, i)).collect();
        let tables = config
            .sources
            .iter()
            .map(|s| s.periods.iter().map(|p| ctx.paths.iter().map(|path| class_table(&p.profile, path)).collect()).collect())
            .collect();
        let copies: Vec<CopyPlan> = config
            .copying
            .iter()
            .map(|c| CopyPlan {
                from: index[&c.from],
                to: index[&c.to],
                mask: ctx.paths.iter().map(|p| c.scope.contains(p)).collect(),
                formats: c
                    .transform
                    .iter()
                    .filter_map(|m| match m {
                        MappingStep::FormatConvention { path, from, to } => ctx.index(path).map(|i| (i, *from, *to)),
                        _ => None,
                    })
                    .collect(),
            })
            .collect();
        let mut on_change = vec![Vec::new(); config.sources.len()];
        let mut global = Vec::new();
        for (k, (spec, plan)) in config.copying.iter().zip(&copies).enumerate() {
            match spec.trigger {
                CopyTriggerKind::OnChange => on_change[plan.from].push(k),
                CopyTriggerKind::Periodic { interval } => {
                    let mut t = spec.valid_from.0;
                    while t < spec.valid_to.0 && t <= horizon.0 {
                        global.push(Event {
                            at: Timestamp(t),
                            seq: SEQ_COPY | (plan.from as u64) << 32 | k as u64,
                            kind: EventKind::CopyTrigger { spec: k },
                        });
                        t += interval.max(1);
                    }
                }
            }
        }
        for (i, s) in config.sources.iter().enumerate() {
            for (j, p) in s.periods.iter().enumerate().skip(1) {
                if p.valid_from <= horizon {
                    global.push(Event {
                        at: p.valid_from,
                        seq: SEQ_PROFILE | (i as u64) << 16 | j as u64,
                        kind: EventKind::ProfileChange { source: s.id, profile: j },
                    });
                }
            }
            let interval = config.maintenance_interval.max(1);
            for t in (interval..=horizon.0).step_by(interval as usize) {
                global.push(Event {
                    at: Timestamp(t),
                    seq: SEQ_SWEEP | i as u64,
                    kind: EventKind::MaintenanceSweep { source: s.id },
                });
            }
        }
        global.sort();
        Engine { ctx, config, tables, copies, on_change, global }
    }

    pub fn config(&self) -> &GenerationConfig {
        &self.config
    }

    /// Replays every event that touches one entity. Entities never interact,
    /// so the outcome is independent of how entities are scheduled.
    pub fn simulate_entity(&self, e: &EntityHistory) -> EntityOutcome {
        let mut sim = Sim {
            engine: self,
            e,
            slots: self
                .config
                .sources
                .iter()
                .map(|s| Slot {
                    id: s.id,
                    in_scope: false,
                    records: Vec::new(),
                    next_ordinal: 0,
                    rng: stream(self.config.seed, &[tag::SOURCE, s.id.0, e.id.0]),
                })
                .collect(),
            log: Vec::new(),
        };
        let horizon = self.ctx.horizon;
        let mut world = entity_events(e, &self.ctx.paths);
        if e.created_at == Timestamp::ZERO {
            world.insert(0, Event { at: Timestamp::ZERO, seq: e.id.0 << 2, kind: EventKind::WorldInsert { entity: e.id } });
        }
        world.retain(|ev| ev.at <= horizon);
        let start = self.global.partition_point(|g| g.at < e.created_at);
        let mut globals = self.global[start..].iter().peekable();
        let mut worlds = world.iter().peekable();
        loop {
            let next = match (worlds.peek(), globals.peek()) {
                (Some(w), Some(g)) if *w <= *g => worlds.next(),
                (Some(_), None) => worlds.next(),
                (_, Some(_)) => globals.next(),
                (None, None) => break,
            };
            let ev = next.expect("peeked");
            if e.deleted_at.is_some_and(|d| ev.at >= d) && sim.slots.iter().all(|s| s.records.is_empty()) {
                break;
            }
            sim.handle(ev);
        }
        let truth_at = e.last_alive(horizon);
        let truth = e.row_at(truth_at);
        let mut tallies = vec![PollutionTally::default(); sim.slots.len()];
        let mut records = Vec::new();
        for (i, slot) in sim.slots.into_iter().enumerate() {
            for r in slot.records {
                tallies[i].add_record(&truth, &r.cells);
                records.push((slot.id, r));
            }
        }
        EntityOutcome { entity: e.id, provenance: sim.log, records, tallies }
    }
}

/// Everything one entity contributes to the output.
#[derive(Debug, Clone, PartialEq)]
pub struct EntityOutcome {
    pub entity: EntityId,
    pub provenance: Vec<ProvenanceEntry>,
    /// Records alive at the horizon, by source.
    pub records: Vec<(SourceId, SourceRecord)>,
    /// Pollution of the final records, per source in configuration order.
    pub tallies: Vec<PollutionTally>,
}

struct Slot {
    id: SourceId,
    in_scope: bool,
    records: Vec<SourceRecord>,
    next_ordinal: u64,
    rng: StreamRng,
}

struct Sim<'e, 'a> {
    engine: &'e Engine<'a>,
    e: &'e EntityHistory,
    slots: Vec<Slot>,
    log: Vec<ProvenanceEntry>,
}

fn cells_of(paths: &[AttributePath], cells: &[Option<Value>], which: impl Fn(usize) -> bool) -> Cells {
    Cells(
        cells
            .iter()
            .enumerate()
            .filter(|(i, _)| which(*i))
            .filter_map(|(i, c)| c.as_ref().map(|v| (paths[i].clone(), v.clone())))
            .collect(),
    )
}

impl<'e, 'a> Sim<'e, 'a> {
    fn entry(&mut self, source: SourceId, record: RecordId, at: Timestamp, op: Op) {
        let e = self.e;
        self.log.push(ProvenanceEntry { source, record_id: record, entity_id: e.id, at, op });
    }

    fn profile(&self, s: usize, t: Timestamp) -> (&'e SourceProfile, usize) {
        let engine = self.engine;
        let src = &engine.config.sources[s];
        let p = src.period_at(t);
        (&src.periods[p].profile, p)
    }

    fn value_of(&self, t: Timestamp) -> impl Fn(&AttributePath) -> Option<Value> + 'e {
        let (engine, e) = (self.engine, self.e);
        move |p: &AttributePath| engine.ctx.index(p).and_then(|i| e.version_at(i, t)).map(|v| v.value.clone())
    }

    fn handle(&mut self, ev: &Event) {
        let engine = self.engine;
        let t = ev.at;
        match &ev.kind {
            EventKind::WorldInsert { .. } => {
                for s in 0..self.slots.len() {
                    if self.insert(s, t) {
                        self.changed(s, t);
                    }
                }
            }
            EventKind::WorldUpdate { paths, .. } => {
                let idxs: Vec<usize> = paths.iter().filter_map(|p| engine.ctx.index(p)).collect();
                for s in 0..self.slots.len() {
                    if self.update(s, t, &idxs) {
                        self.changed(s, t);
                    }
                }
            }
            EventKind::WorldDelete { .. } => {
                for s in 0..self.slots.len() {
                    if self.delete(s, t) {
                        self.changed(s, t);
                    }
                }
            }
            EventKind::CopyTrigger { spec } => {
                if self.copy(*spec, t) {
                    self.changed(engine.copies[*spec].to, t);
                }
            }
            EventKind::ProfileChange { profile, .. } => {
                let s = (ev.seq >> 16 & 0xffff) as usize;
                if self.profile_change(s, *profile, t) {
                    self.changed(s, t);
                }
            }
            EventKind::MaintenanceSweep { .. } => {
                let s = (ev.seq & 0xffff) as usize;
                if self.sweep(s, t) {
                    self.changed(s, t);
                }
            }
        }
    }

    /// Runs the on-change copies reading from source `s`. The copy graph is
    /// acyclic, so the cascade terminates.
    fn changed(&mut self, s: usize, t: Timestamp) {
        let engine = self.engine;
        let specs = engine.on_change[s].clone();
        for k in specs {
            if engine.config.copying[k].is_active(t) && self.copy(k, t) {
                self.changed(engine.copies[k].to, t);
            }
        }
    }

    fn new_record(&mut self, s: usize, cells: Vec<Option<Value>>, origin: Option<Lineage>) -> usize {
        let e = self.e;
        let slot = &mut self.slots[s];
        let id = record_id(slot.id, e.id, slot.next_ordinal);
        slot.next_ordinal += 1;
        slot.records.push(SourceRecord { id, entity: e.id, origin, cells });
        slot.records.len() - 1
    }

    fn create(&mut self, s: usize, t: Timestamp, cause: CreateCause) {
        let (engine, e) = (self.engine, self.e);
        let cells = e.row_at(t);
        let r = self.new_record(s, cells, None);
        let rec = &self.slots[s].records[r];
        let op = Op::Create { cause, cells: cells_of(&engine.ctx.paths, &rec.cells, |_| true), origin: None };
        let (id, src) = (rec.id, self.slots[s].id);
        self.entry(src, id, t, op);
        let all: Vec<usize> = (0..engine.ctx.paths.len()).collect();
        self.pollute_written(s, r, &all, t);
    }

    fn insert(&mut self, s: usize, t: Timestamp) -> bool {
        let e = self.e;
        let (profile, _) = self.profile(s, t);
        let in_scope = profile.representation.scope.contains(e.id, self.value_of(t));
        let (rate, cont) = (profile.errors.duplicate_rate, profile.errors.duplicate_continuation);
        self.slots[s].in_scope = in_scope;
        if !in_scope {
            return false;
        }
        let rng = &mut self.slots[s].rng;
        let mut extras = 0;
        if rng.random::<f64>() < rate {
            extras = 1;
            while extras < MAX_EXTRA_RECORDS && rng.random::<f64>() < cont {
                extras += 1;
            }
        }
        let first = if t == Timestamp::ZERO { CreateCause::Initial } else { CreateCause::Insert };
        self.create(s, t, first);
        for _ in 0..extras {
            self.create(s, t, CreateCause::Duplicate);
        }
        true
    }

    fn update(&mut self, s: usize, t: Timestamp, idxs: &[usize]) -> bool {
        let (engine, e) = (self.engine, self.e);
        let miss = self.profile(s, t).0.errors.miss_rate();
        let paths = &engine.ctx.paths;
        let before = Timestamp(t.0.saturating_sub(1));
        let mut changed = false;
        for r in 0..self.slots[s].records.len() {
            if self.slots[s].records[r].origin.is_some() {
                continue;
            }
            let src = self.slots[s].id;
            let id = self.slots[s].records[r].id;
            if self.slots[s].rng.random::<f64>() < miss {
                self.entry(src, id, t, Op::Missed { event: MissedEvent::Update, paths: idxs.iter().map(|&i| paths[i].clone()).collect() });
                for &i in idxs {
                    let kept = self.slots[s].records[r].cells[i].clone();
                    let old = e.version_at(i, before).map(|v| &v.value);
                    let new = e.version_at(i, t).map(|v| &v.value);
                    if let (Some(kept), Some(old), Some(new)) = (kept, old, new) {
                        if &kept == old && old != new {
                            self.entry(src, id, t, Op::Error {
                                class: ErrorKind::Outdated,
                                path: paths[i].clone(),
                                before: new.clone(),
                                after: kept,
                                cause: ErrorCause::Missed,
                            });
                        }
                    }
                }
                continue;
            }
            let rec = &mut self.slots[s].records[r];
            let mut removed = Vec::new();
            for &i in idxs {
                let v = e.version_at(i, t).map(|v| v.value.clone());
                if v.is_none() && rec.cells[i].is_some() {
                    removed.push(paths[i].clone());
                }
                rec.cells[i] = v;
            }
            let cells = cells_of(paths, &rec.cells, |i| idxs.contains(&i));
            self.entry(src, id, t, Op::Update { cause: UpdateCause::World, cells, removed, copy: None });
            self.pollute_written(s, r, idxs, t);
            changed = true;
        }
        changed
    }

    fn delete(&mut self, s: usize, t: Timestamp) -> bool {
        let miss = self.profile(s, t).0.errors.miss_rate();
        let mut changed = false;
        let src = self.slots[s].id;
        let mut r = 0;
        while r < self.slots[s].records.len() {
            let rec = &self.slots[s].records[r];
            let id = rec.id;
            if rec.origin.is_some() {
                r += 1;
                continue;
            }
            if self.slots[s].rng.random::<f64>() < miss {
                self.entry(src, id, t, Op::Missed { event: MissedEvent::Delete, paths: Vec::new() });
                r += 1;
                continue;
            }
            self.slots[s].records.remove(r);
            self.entry(src, id, t, Op::Delete { cause: DeleteCause::World });
            changed = true;
        }
        changed
    }

    /// Mirrors the origin source's records of this entity into the target.
    fn copy(&mut self, k: usize, t: Timestamp) -> bool {
        let engine = self.engine;
        let plan = &engine.copies[k];
        let spec: &CopySpec = &engine.config.copying[k];
        let (a, b) = (plan.from, plan.to);
        let from_id = self.slots[a].id;
        let to_id = self.slots[b].id;
        let paths = &engine.ctx.paths;
        let origins: Vec<(RecordId, Vec<Option<Value>>)> = self.slots[a]
            .records
            .iter()
            .map(|r| {
                let mut cells: Vec<Option<Value>> =
                    r.cells.iter().enumerate().map(|(i, c)| if plan.mask[i] { c.clone() } else { None }).collect();
                for &(i, f, g) in &plan.formats {
                    if let Some(v) = cells[i].as_ref().and_then(|v| convert(v, f, g)) {
                        cells[i] = Some(v);
                    }
                }
                (r.id, cells)
            })
            .collect();
        let mut changed = false;
        let mut r = 0;
        while r < self.slots[b].records.len() {
            let rec = &self.slots[b].records[r];
            let stale = rec.origin.is_some_and(|o| o.source == from_id && o.copy == k && !origins.iter().any(|(id, _)| *id == o.record_id));
            if stale {
                let id = rec.id;
                self.slots[b].records.remove(r);
                self.entry(to_id, id, t, Op::Delete { cause: DeleteCause::Copy });
                changed = true;
            } else {
                r += 1;
            }
        }
        for (origin_id, cells) in origins {
            let lineage = Lineage { source: from_id, record_id: origin_id, copy: k };
            let existing = self.slots[b].records.iter().position(|r| r.origin == Some(lineage));
            let (r, written) = match existing {
                Some(r) => {
                    let rec = &mut self.slots[b].records[r];
                    let written: Vec<usize> = (0..paths.len()).filter(|&i| plan.mask[i] && rec.cells[i] != cells[i]).collect();
                    if written.is_empty() {
                        continue;
                    }
                    let mut removed = Vec::new();
                    for &i in &written {
                        if cells[i].is_none() {
                            removed.push(paths[i].clone());
                        }
                        rec.cells[i] = cells[i].clone();
                    }
                    let op = Op::Update {
                        cause: UpdateCause::Copy,
                        cells: cells_of(paths, &rec.cells, |i| written.contains(&i)),
                        removed,
                        copy: Some(k),
                    };
                    let id = rec.id;
                    self.entry(to_id, id, t, op);
                    (r, written)
                }
                None => {
                    let written: Vec<usize> = (0..paths.len()).filter(|&i| cells[i].is_some()).collect();
                    let op = Op::Create { cause: CreateCause::Copy, cells: cells_of(paths, &cells, |_| true), origin: Some(lineage) };
                    let r = self.new_record(b, cells, Some(lineage));
                    let id = self.slots[b].records[r].id;
                    self.entry(to_id, id, t, op);
                    (r, written)
                }
            };
            changed = true;
            let (_, period) = self.profile(b, t);
            for i in written {
                if self.slots[b].rng.random::<f64>() < spec.transform_error_rate {
                    let class = engine.tables[b][period][i].pick_weighted(&mut self.slots[b].rng);
                    self.corrupt(b, r, i, class, t, ErrorCause::Copy);
                }
            }
        }
        changed
    }

    fn profile_change(&mut self, s: usize, j: usize, t: Timestamp) -> bool {
        let (engine, e) = (self.engine, self.e);
        let src = &engine.config.sources[s];
        let (old, new) = (&src.periods[j - 1].profile.representation.scope, &src.periods[j].profile.representation.scope);
        if old == new || e.created_at > t {
            return false;
        }
        let at = t.min(e.last_alive(engine.ctx.horizon));
        let now_in = new.contains(e.id, self.value_of(at));
        let was_in = self.slots[s].in_scope;
        self.slots[s].in_scope = now_in;
        if was_in && !now_in {
            let id = self.slots[s].id;
            let native: Vec<RecordId> = self.slots[s].records.iter().filter(|r| r.origin.is_none()).map(|r| r.id).collect();
            self.slots[s].records.retain(|r| r.origin.is_some());
            for r in &native {
                self.entry(id, *r, t, Op::Delete { cause: DeleteCause::Scope });
            }
            return !native.is_empty();
        }
        if !was_in && now_in && e.is_alive(t) {
            self.create(s, t, CreateCause::Backfill);
            return true;
        }
        false
    }

    fn sweep(&mut self, s: usize, t: Timestamp) -> bool {
        let engine = self.engine;
        let (profile, period) = self.profile(s, t);
        let rate = profile.errors.maintenance_rate;
        if rate <= 0.0 {
            return false;
        }
        let mut changed = false;
        for r in 0..self.slots[s].records.len() {
            for i in 0..engine.ctx.paths.len() {
                if self.slots[s].records[r].cells[i].is_none() || self.slots[s].rng.random::<f64>() >= rate {
                    continue;
                }
                let class = engine.tables[s][period][i].pick_weighted(&mut self.slots[s].rng);
                changed |= self.corrupt(s, r, i, class, t, ErrorCause::Maintenance);
            }
        }
        changed
    }

    /// Draws the per-cell errors of freshly written cells.
    fn pollute_written(&mut self, s: usize, r: usize, written: &[usize], t: Timestamp) {
        let engine = self.engine;
        let (profile, period) = self.profile(s, t);
        let components: Vec<(ErrorKind, f64, Vec<usize>)> = profile
            .errors
            .components
            .iter()
            .filter(|c| c.is_active(t))
            .map(|c| (c.class, c.rate, c.paths.iter().filter_map(|p| engine.ctx.index(p)).collect()))
            .collect();
        let lookup = match profile.errors.outdated_mode {
            OutdatedMode::Lookup => profile.errors.outdated_rate,
            OutdatedMode::Missed => 0.0,
        };
        for &i in written {
            if self.slots[s].records[r].cells[i].is_none() {
                continue;
            }
            let table = &engine.tables[s][period][i];
            let u = self.slots[s].rng.random::<f64>();
            if u < table.total {
                if let Some(class) = table.pick(u) {
                    self.corrupt(s, r, i, class, t, ErrorCause::Write);
                }
            }
            if lookup > 0.0 && self.slots[s].rng.random::<f64>() < lookup {
                self.corrupt(s, r, i, ErrorKind::Outdated, t, ErrorCause::Write);
            }
            for (class, rate, idxs) in &components {
                if idxs.contains(&i) && self.slots[s].rng.random::<f64>() < *rate {
                    self.corrupt(s, r, i, *class, t, ErrorCause::Component);
                }
            }
        }
    }

    /// Applies one error to cell `i` of record `r`, falling back to a typo or
    /// a missing value when the class does not fit. Returns whether the
    /// record changed.
    fn corrupt(&mut self, s: usize, r: usize, i: usize, class: ErrorKind, t: Timestamp, cause: ErrorCause) -> bool {
        let (engine, e) = (self.engine, self.e);
        let Some(current) = self.slots[s].records[r].cells[i].clone() else { return false };
        let ctx = engine.ctx;
        let rng = &mut self.slots[s].rng;
        let mut changes: Vec<(usize, Value)> = Vec::new();
        let mut applied = class;
        match class {
            ErrorKind::Outdated => {
                // A lookup without an older version is the identity.
                if let Some(v) = make_outdated(e, i, &current, t, rng) {
                    changes.push((i, v));
                }
            }
            _ => {
                let attempt = match class {
                    ErrorKind::Swap | ErrorKind::Merge | ErrorKind::Split => {
                        record_level(ctx, &self.slots[s].records[r].cells, i, class)
                    }
                    ErrorKind::WrongReference => {
                        let others: Vec<&Value> = ctx.references[i].iter().filter(|v| **v != current).collect();
                        others.choose(rng).map(|v| vec![(i, (*v).clone())]).ok_or(())
                    }
                    _ => inject_error(&current, class, &ctx.tables, rng).map(|v| vec![(i, v)]).map_err(|_| ()),
                };
                match attempt {
                    Ok(c) => changes = c,
                    Err(()) => {
                        let rng = &mut self.slots[s].rng;
                        let fallback = match current.kind() {
                            ValueKind::Text | ValueKind::Number => ErrorKind::Typo,
                            _ => ErrorKind::Missing,
                        };
                        let result: Result<Value, InjectError> = inject_error(&current, fallback, &ctx.tables, rng)
                            .or_else(|_| inject_error(&current, ErrorKind::Missing, &ctx.tables, rng));
                        if let Ok(v) = result {
                            applied = if v.is_null() { ErrorKind::Missing } else { fallback };
                            changes.push((i, v));
                        }
                    }
                }
            }
        }
        if changes.is_empty() {
            return false;
        }
        let (src, id) = (self.slots[s].id, self.slots[s].records[r].id);
        for (j, v) in changes {
            let before = self.slots[s].records[r].cells[j].replace(v.clone()).unwrap_or(Value::Null);
            self.entry(src, id, t, Op::Error { class: applied, path: ctx.paths[j].clone(), before, after: v, cause });
        }
        true
    }
}

/// Swap, merge or split between cell `i` and its partner attribute.
fn record_level(
    ctx: &PollutionContext,
    cells: &[Option<Value>],
    i: usize,
    class: ErrorKind,
) -> Result<Vec<(usize, Value)>, ()> {
    let partner = ctx.partners[i].as_ref().ok_or(())?;
    let j = partner.index;
    let a = cells[i].clone().filter(|v| !v.is_null()).ok_or(())?;
    let b = cells[j].clone().unwrap_or(Value::Null);
    match class {
        ErrorKind::Swap if a != b => Ok(vec![(i, b), (j, a)]),
        ErrorKind::Merge if !b.is_null() => {
            Ok(vec![(i, Value::text(format!("{}{}{}", a.render(), partner.separator, b.render()))), (j, Value::Null)])
        }
        ErrorKind::Split => {
            let text = a.as_text().ok_or(())?;
            let (head, tail) = text.rsplit_once(partner.separator.as_str()).ok_or(())?;
            if head.is_empty() || tail.is_empty() {
                return Err(());
            }
            let moved = match b.is_null() {
                true => tail.to_string(),
                false => format!("{tail}{}{}", partner.separator, b.render()),
            };
            Ok(vec![(i, Value::text(head)), (j, Value::text(moved))])
        }
        _ => Err(()),
    }
}
