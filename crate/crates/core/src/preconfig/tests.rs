use proptest::prelude::*;

use super::*;
use crate::io::read_csv;
use crate::preparation::normalize_schema;
use crate::profiling::{profile_dataset, ProfilingOptions};

const PEOPLE: &str = "id,name,email,phone,city,zip,birth_date\n\
1,Anna Schmidt,anna@example.com,555-123-4567,Berlin,10115,1980-02-11\n\
2,John Miller,john.m@mail.org,555-987-6543,Boston,02134,1975-07-30\n\
3,Maria Lopez,maria@example.com,555-222-3333,Madrid,28001,1990-12-01\n\
4,Peter Brown,peter@mail.org,555-444-5555,London,10001,1968-05-17\n\
5,Laura Wilson,laura@example.com,555-666-7777,Paris,75001,2001-09-09\n\
6,James Taylor,james@mail.org,555-888-9999,Rome,00118,1984-03-22\n";

fn prepared() -> (EnrichedSchema, DataProfile, Vec<Split>) {
    let ds = read_csv(PEOPLE.as_bytes()).unwrap();
    let opts = ProfilingOptions::default();
    let report = profile_dataset(&ds, &opts);
    let prep = normalize_schema(&ds, &report.profile, &opts);
    (prep.schema, prep.profile, prep.splits)
}

fn params(scenario: ScenarioKind, sources: usize, seed: u64) -> HighLevelParams {
    HighLevelParams::new(scenario, sources, seed)
}

#[test]
fn derivation_is_deterministic() {
    let (s, p, sp) = prepared();
    let hp = params(ScenarioKind::Integration, 4, 7);
    let a = derive_preconfiguration(&s, &p, &sp, &hp).unwrap();
    let b = derive_preconfiguration(&s, &p, &sp, &hp).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn zero_heterogeneity_gives_identical_representations() {
    let (s, p, sp) = prepared();
    let mut hp = params(ScenarioKind::Linkage, 3, 1);
    hp.heterogeneity = 0.0;
    let c = derive_preconfiguration(&s, &p, &sp, &hp).unwrap();
    for src in &c.sources {
        assert_eq!(src.periods.len(), 1);
        let r = &src.periods[0].profile.representation;
        assert!(r.mapping.is_empty());
        assert_eq!(r.model, s.schema.model);
    }
}

#[test]
fn heterogeneity_adds_mapping_steps() {
    let (s, p, sp) = prepared();
    let mut hp = params(ScenarioKind::Integration, 2, 3);
    hp.heterogeneity = 1.0;
    let c = derive_preconfiguration(&s, &p, &sp, &hp).unwrap();
    assert!(c.sources.iter().all(|src| !src.periods[0].profile.representation.mapping.is_empty()));
    assert_eq!(c.integration.len(), 2);
}

#[test]
fn no_copy_intensity_means_no_copying() {
    let (s, p, sp) = prepared();
    let mut hp = params(ScenarioKind::Linkage, 5, 9);
    hp.copy_intensity = 0.0;
    assert!(derive_preconfiguration(&s, &p, &sp, &hp).unwrap().copying.is_empty());
}

#[test]
fn single_source_covers_everything() {
    let (s, p, sp) = prepared();
    let c = derive_preconfiguration(&s, &p, &sp, &params(ScenarioKind::Cleaning, 1, 0)).unwrap();
    assert_eq!(c.sources[0].periods[0].profile.representation.scope, Scope::All);
    assert!(c.integration.is_empty());
}

#[test]
fn infeasible_parameters_are_rejected() {
    let (s, p, sp) = prepared();
    let mut hp = params(ScenarioKind::Linkage, 2, 0);
    hp.pollution = 1.5;
    assert!(matches!(derive_preconfiguration(&s, &p, &sp, &hp), Err(ConfigError::Infeasible(_))));
    let hp = params(ScenarioKind::Cleaning, 2, 0);
    assert!(matches!(derive_preconfiguration(&s, &p, &sp, &hp), Err(ConfigError::Infeasible(_))));
    let mut hp = params(ScenarioKind::Linkage, 2, 0);
    hp.volume_factor = 0.0;
    assert!(derive_preconfiguration(&s, &p, &sp, &hp).is_err());
}

#[test]
fn cycles_are_detected() {
    let e = |a, b| (SourceId(a), SourceId(b));
    assert!(is_acyclic([e(0, 1), e(1, 2), e(0, 2)].into_iter()));
    assert!(!is_acyclic([e(0, 1), e(1, 2), e(2, 0)].into_iter()));
    assert!(!is_acyclic([e(3, 3)].into_iter()));
}

#[test]
fn hash_bucket_scopes_cover_their_share() {
    let scope = Scope::HashBucket { buckets: 10, from: 3, count: 7 };
    let inside = (0..10_000u64).filter(|i| scope.contains(EntityId(*i), |_| None)).count();
    assert!((6_700..7_300).contains(&inside), "{inside}");
    let all = Scope::HashBucket { buckets: 10, from: 9, count: 10 };
    assert!((0..100u64).all(|i| all.contains(EntityId(i), |_| None)));
}

#[test]
fn attribute_range_scope_compares_values() {
    let scope = Scope::AttributeRange { path: AttributePath::key("x"), min: Some(Value::number("1")), max: None };
    assert!(scope.contains(EntityId(0), |_| Some(Value::number("5"))));
    assert!(!scope.contains(EntityId(0), |_| Some(Value::number("0"))));
    assert!(!scope.contains(EntityId(0), |_| Some(Value::Null)));
}

#[test]
fn scaling_clamps_and_spares_duplicates() {
    let mut e = ErrorProfile::clean();
    e.duplicate_rate = 0.2;
    e.outdated_rate = 0.6;
    e.class_probs.insert(AttributePath::key("a"), BTreeMap::from([(ErrorKind::Typo, 0.3)]));
    e.scale(2.0);
    assert_eq!(e.duplicate_rate, 0.2);
    assert_eq!(e.outdated_rate, 1.0);
    assert!((e.class_probs[&AttributePath::key("a")][&ErrorKind::Typo] - 0.6).abs() < 1e-12);
}

#[test]
fn periods_partition_the_timeline() {
    let (s, p, sp) = prepared();
    let mut hp = params(ScenarioKind::Linkage, 3, 4);
    hp.heterogeneity = 1.0;
    let c = derive_preconfiguration(&s, &p, &sp, &hp).unwrap();
    for src in &c.sources {
        assert_eq!(src.periods.len(), 3);
        assert_eq!(src.period_at(Timestamp(0)), 0);
        assert_eq!(src.period_at(Timestamp(1000)), 2);
        let b = src.periods[1].valid_from;
        assert_eq!(src.period_at(b), 1);
        assert_eq!(src.period_at(Timestamp(b.0 - 1)), 0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]
    #[test]
    fn copy_graph_is_acyclic_and_valid(seed in any::<u64>(), n in 1usize..8, ci in 0.0f64..=1.0, h in 0.0f64..=1.0) {
        let (s, p, sp) = prepared();
        let mut hp = params(ScenarioKind::Linkage, n, seed);
        hp.copy_intensity = ci;
        hp.heterogeneity = h;
        let c = derive_preconfiguration(&s, &p, &sp, &hp).unwrap();
        prop_assert!(is_acyclic(c.copying.iter().map(|e| (e.from, e.to))));
        prop_assert!(c.copying.iter().all(|e| e.from < e.to));
        prop_assert!(c.validate(&s).is_ok());
    }
}
