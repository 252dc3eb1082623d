use serde::{Deserialize, Serialize};

use super::{AttributePath, EntityId, SourceId, Timestamp};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    WorldInsert { entity: EntityId },
    WorldUpdate { entity: EntityId, paths: Vec<AttributePath> },
    WorldDelete { entity: EntityId },
    CopyTrigger { spec: usize },
    ProfileChange { source: SourceId, profile: usize },
    MaintenanceSweep { source: SourceId },
}

/// A simulation event. Events are totally ordered by `(at, seq)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub at: Timestamp,
    pub seq: u64,
    #[serde(flatten)]
    pub kind: EventKind,
}

impl Event {
    pub fn order_key(&self) -> (Timestamp, u64) {
        (self.at, self.seq)
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.order_key().cmp(&other.order_key())
    }
}
