//! The event-based source model: every source reacts to world inserts,
//! updates and deletes under its current profile, copies from other sources,
//! changes its profile over time and suffers maintenance errors.
//!
//! Sources hold records in the canonical prepared schema; representation
//! mappings apply only when records are exported. All events of one entity
//! are processed together, because no event couples two entities. Each
//! (source, entity) pair draws from its own random stream, so results do not
//! depend on scheduling.

mod context;
mod engine;
mod errors;
mod export;
mod provenance;

pub use context::{Partner, PollutionContext};
pub use engine::{make_outdated, record_id, Engine, EntityOutcome, SourceRecord};
pub use errors::{
    apply_phonetic_rule, default_tables, inject_error, perturb_list, phonetic, typo, typo_at, ErrorTables,
    InjectError, TypoKind,
};
pub use export::{export_at, flat_record, represent, SourceExport, SourceWriter, RECORD_ID_COLUMN};
pub use provenance::{
    apply_entry, replay_until, write_entries, Cells, CreateCause, DeleteCause, EntityGroups, ErrorCause, Lineage,
    MissedEvent, Op, ProvenanceEntry, ReplayError, ReplayedRecord, ReplayedState, UpdateCause,
};

use serde::{Deserialize, Serialize};

use crate::model::{DataHistory, EntityHistory, SourceId};
use crate::preconfig::{adaptation_factor, GenerationConfig, PollutionTally};

/// Entities per partition. Fixed, so that adaptation steps do not depend on
/// the number of workers.
pub const PARTITION_SIZE: usize = 10_000;
/// Entities of the first partition used by the pilot runs.
pub const PILOT_ENTITIES: usize = 2_000;
const PILOT_ROUNDS: usize = 3;
const PILOT_TOLERANCE: f64 = 0.005;
/// Partitions with fewer measured cells do not move the parameters.
const MIN_ADAPT_CELLS: u64 = 1_000;

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionOutcome {
    pub entities: Vec<EntityOutcome>,
    /// Pollution of the final records, per source.
    pub tallies: Vec<PollutionTally>,
}

/// Simulates entities independently, in parallel when enabled. Output order
/// follows input order.
pub fn simulate_partition(engine: &Engine, entities: &[EntityHistory]) -> PartitionOutcome {
    #[cfg(feature = "parallel")]
    let outcomes: Vec<EntityOutcome> = {
        use rayon::prelude::*;
        entities.par_iter().map(|e| engine.simulate_entity(e)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let outcomes: Vec<EntityOutcome> = entities.iter().map(|e| engine.simulate_entity(e)).collect();
    let mut tallies = vec![PollutionTally::default(); engine.config().sources.len()];
    for o in &outcomes {
        for (t, x) in tallies.iter_mut().zip(&o.tallies) {
            t.merge(*x);
        }
    }
    PartitionOutcome { entities: outcomes, tallies }
}

/// One runtime correction of the error parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptationStep {
    pub partition: usize,
    pub pilot: bool,
    pub measured: Vec<f64>,
    pub factors: Vec<f64>,
}

/// Rescales each source towards its target degree. Sources without enough
/// measured cells keep their parameters.
fn rescale(config: &GenerationConfig, tallies: &[PollutionTally]) -> (GenerationConfig, Vec<f64>) {
    let mut out = config.clone();
    let mut factors = Vec::new();
    for (source, tally) in out.sources.iter_mut().zip(tallies) {
        let target = source.periods[0].profile.errors.target_degree;
        let factor = if tally.cells < MIN_ADAPT_CELLS { 1.0 } else { adaptation_factor(target, tally.fraction()) };
        if factor != 1.0 {
            for p in &mut source.periods {
                p.profile.errors.scale(factor);
            }
        }
        factors.push(factor);
    }
    (out, factors)
}

/// Drives the engine partition by partition and steers the measured
/// pollution of every source towards its target degree.
pub struct Simulator<'a> {
    ctx: &'a PollutionContext,
    engine: Engine<'a>,
    partition: usize,
    steps: Vec<AdaptationStep>,
}

impl<'a> Simulator<'a> {
    pub fn new(ctx: &'a PollutionContext, config: GenerationConfig) -> Self {
        Simulator { ctx, engine: Engine::new(ctx, config), partition: 0, steps: Vec::new() }
    }

    /// The configuration that the next partition will use.
    pub fn config(&self) -> &GenerationConfig {
        self.engine.config()
    }

    pub fn adaptation_steps(&self) -> &[AdaptationStep] {
        &self.steps
    }

    fn adapt(&mut self, tallies: &[PollutionTally], pilot: bool) -> bool {
        let (config, factors) = rescale(self.engine.config(), tallies);
        let moved = factors.iter().any(|f| *f != 1.0);
        self.steps.push(AdaptationStep {
            partition: self.partition,
            pilot,
            measured: tallies.iter().map(PollutionTally::fraction).collect(),
            factors,
        });
        if moved {
            self.engine = Engine::new(self.ctx, config);
        }
        moved
    }

    /// Simulates the next partition. The first partition is preceded by pilot
    /// runs on its leading entities when adaptation is enabled.
    pub fn run_partition(&mut self, entities: &[EntityHistory]) -> PartitionOutcome {
        let adaptation = self.engine.config().adaptation.clone();
        if adaptation.enabled && adaptation.pilot && self.partition == 0 {
            let pilot = &entities[..entities.len().min(PILOT_ENTITIES)];
            for _ in 0..PILOT_ROUNDS {
                let outcome = simulate_partition(&self.engine, pilot);
                let close = outcome.tallies.iter().zip(&self.engine.config().sources).all(|(t, s)| {
                    t.cells < MIN_ADAPT_CELLS || (t.fraction() - s.periods[0].profile.errors.target_degree).abs() <= PILOT_TOLERANCE
                });
                if close || !self.adapt(&outcome.tallies, true) {
                    break;
                }
            }
        }
        let outcome = simulate_partition(&self.engine, entities);
        if adaptation.enabled {
            self.adapt(&outcome.tallies, false);
        }
        self.partition += 1;
        outcome
    }
}

/// Final records of one source.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceState {
    pub id: SourceId,
    pub records: Vec<SourceRecord>,
}

/// An in-memory run over a whole history.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub sources: Vec<SourceState>,
    pub provenance: Vec<ProvenanceEntry>,
    pub tallies: Vec<PollutionTally>,
    pub steps: Vec<AdaptationStep>,
}

pub fn simulate(history: &DataHistory, ctx: &PollutionContext, config: GenerationConfig) -> Simulation {
    let mut sources: Vec<SourceState> =
        config.sources.iter().map(|s| SourceState { id: s.id, records: Vec::new() }).collect();
    let mut sim = Simulator::new(ctx, config);
    let entities: Vec<EntityHistory> = history.entities().cloned().collect();
    let mut provenance = Vec::new();
    let mut tallies = vec![PollutionTally::default(); sources.len()];
    for chunk in entities.chunks(PARTITION_SIZE) {
        let out = sim.run_partition(chunk);
        for (t, x) in tallies.iter_mut().zip(&out.tallies) {
            t.merge(*x);
        }
        for o in out.entities {
            provenance.extend(o.provenance);
            for (id, r) in o.records {
                if let Some(s) = sources.iter_mut().find(|s| s.id == id) {
                    s.records.push(r);
                }
            }
        }
    }
    Simulation { sources, provenance, tallies, steps: sim.steps }
}
