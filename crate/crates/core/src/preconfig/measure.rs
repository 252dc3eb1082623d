use std::collections::HashMap;

use crate::model::{EntityId, RecordId, Value};

use super::GenerationConfig;

/// Whether two cells hold different data. Absent and null cells are equal;
/// values compare by kind and rendering, so `10` and `10.00` differ.
pub fn cells_differ(a: Option<&Value>, b: Option<&Value>) -> bool {
    let a = a.filter(|v| !v.is_null());
    let b = b.filter(|v| !v.is_null());
    match (a, b) {
        (None, None) => false,
        (Some(x), Some(y)) => x.kind() != y.kind() || x.render() != y.render(),
        _ => true,
    }
}

/// Running count of corrupted cells over linked records.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PollutionTally {
    pub differing: u64,
    pub cells: u64,
}

impl PollutionTally {
    pub fn add_record(&mut self, truth: &[Option<Value>], polluted: &[Option<Value>]) {
        self.cells += truth.len() as u64;
        self.differing += truth.iter().zip(polluted).filter(|(t, p)| cells_differ(t.as_ref(), p.as_ref())).count() as u64;
    }

    pub fn merge(&mut self, other: PollutionTally) {
        self.differing += other.differing;
        self.cells += other.cells;
    }

    pub fn fraction(&self) -> f64 {
        if self.cells == 0 {
            0.0
        } else {
            self.differing as f64 / self.cells as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MeasureError {
    #[error("record {0:?} has no provenance link")]
    MissingProvenance(RecordId),
    #[error("entity {0:?} of record {1:?} has no clean version")]
    MissingEntity(EntityId, RecordId),
}

/// Fraction of cells of the polluted records that differ from their entity's
/// clean values. Cells are (record, leaf path) pairs over the canonical path
/// table, so the result lies in [0, 1].
pub fn measure_pollution(
    clean: &HashMap<EntityId, Vec<Option<Value>>>,
    polluted: &[(RecordId, Vec<Option<Value>>)],
    alignment: &HashMap<RecordId, EntityId>,
) -> Result<f64, MeasureError> {
    let mut tally = PollutionTally::default();
    for (record, cells) in polluted {
        let entity = *alignment.get(record).ok_or(MeasureError::MissingProvenance(*record))?;
        let truth = clean.get(&entity).ok_or(MeasureError::MissingEntity(entity, *record))?;
        tally.add_record(truth, cells);
    }
    Ok(tally.fraction())
}

pub const ADAPT_MIN: f64 = 0.5;
pub const ADAPT_MAX: f64 = 2.0;

/// Multiplicative correction towards `target`, clamped to [0.5, 2]. A zero
/// measurement asks for the maximal step unless the target is zero too.
pub fn adaptation_factor(target: f64, measured: f64) -> f64 {
    if measured <= 0.0 {
        return if target <= 0.0 { 1.0 } else { ADAPT_MAX };
    }
    (target / measured).clamp(ADAPT_MIN, ADAPT_MAX)
}

/// Rescales every leaf probability of every source by the adaptation factor.
pub fn adapt_parameters(target: f64, measured: f64, config: &GenerationConfig) -> GenerationConfig {
    let mut out = config.clone();
    let factor = adaptation_factor(target, measured);
    if factor != 1.0 {
        for source in &mut out.sources {
            for period in &mut source.periods {
                period.profile.errors.scale(factor);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(v: &[&str]) -> Vec<Option<Value>> {
        v.iter().map(|s| Some(Value::text(*s))).collect()
    }

    #[test]
    fn faithful_projection_measures_zero_and_full_corruption_one() {
        let clean = HashMap::from([(EntityId(1), row(&["a", "b"]))]);
        let align = HashMap::from([(RecordId(7), EntityId(1))]);
        assert_eq!(measure_pollution(&clean, &[(RecordId(7), row(&["a", "b"]))], &align), Ok(0.0));
        assert_eq!(measure_pollution(&clean, &[(RecordId(7), row(&["x", "y"]))], &align), Ok(1.0));
    }

    #[test]
    fn two_of_ten_cells() {
        let clean = HashMap::from([(EntityId(1), row(&["a", "b", "c", "d", "e"]))]);
        let align = HashMap::from([(RecordId(1), EntityId(1)), (RecordId(2), EntityId(1))]);
        let polluted = vec![
            (RecordId(1), row(&["a", "b", "c", "d", "e"])),
            (RecordId(2), vec![Some(Value::Null), Some(Value::text("b")), Some(Value::text("c")), Some(Value::text("dd")), Some(Value::text("e"))]),
        ];
        assert_eq!(measure_pollution(&clean, &polluted, &align), Ok(0.2));
        assert_eq!(
            measure_pollution(&clean, &polluted, &HashMap::new()),
            Err(MeasureError::MissingProvenance(RecordId(1)))
        );
    }

    #[test]
    fn adaptation_factor_guards() {
        assert_eq!(adaptation_factor(0.2, 0.2), 1.0);
        assert_eq!(adaptation_factor(0.2, 0.1), 2.0);
        assert_eq!(adaptation_factor(0.2, 0.0), 2.0);
        assert_eq!(adaptation_factor(0.0, 0.0), 1.0);
        assert_eq!(adaptation_factor(0.1, 0.9), 0.5);
    }
}
